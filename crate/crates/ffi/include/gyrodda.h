#ifndef GYRODDA_H
#define GYRODDA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GdCommand {
  GD_COMMAND_SCATTER = 0,
  GD_COMMAND_DECAY = 1,
  GD_COMMAND_SWEEP = 2,
  GD_COMMAND_GRID_DUMP = 3,
  GD_COMMAND_MIE_CHECK = 4,
  // As `MieCheck`, but reports `CheckFailed` outside the agreement limits.
  GD_COMMAND_MIE_CHECK_STRICT = 5,
} GdCommand;

typedef enum GdEmitter {
  GD_EMITTER_ED_X = 0,
  GD_EMITTER_ED_Y = 1,
  GD_EMITTER_ED_Z = 2,
  GD_EMITTER_MD_X = 3,
  GD_EMITTER_MD_Y = 4,
  GD_EMITTER_MD_Z = 5,
} GdEmitter;

typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_NULL_POINTER = 1,
  GD_STATUS_CONFIG = 2,
  GD_STATUS_CONVERGENCE = 3,
  GD_STATUS_CHECK_FAILED = 4,
  GD_STATUS_INVALID_ARGUMENT = 5,
  GD_STATUS_IO = 6,
  GD_STATUS_INTERNAL = 7,
} GdStatus;

typedef struct GdContext GdContext;

typedef struct GdScene GdScene;

// Decay rates normalized to free space.
typedef struct GdRates {
  double gamma_r;
  double gamma_nr;
  double gamma_tot;
  double eta;
} GdRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gd_version(void);

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *gd_last_error(void);

// Loads a scene from a JSON file path or a bundled scene name.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum GdStatus gd_scene_load(const char *spec, struct GdScene **out);

// # Safety
// `scene` must come from `gd_scene_load` and not be used afterwards.
void gd_scene_free(struct GdScene *scene);

// Writes the 64-character scene hash and a NUL into `buf` (`len >= 65`).
//
// # Safety
// `scene` must be a live handle and `buf` writable for `len` bytes.
enum GdStatus gd_scene_hash(const struct GdScene *scene, char *buf, uintptr_t len);

// Voxelizes the scene. `spacing_m > 0` and `tol > 0` override the scene
// and solver defaults; a finite `b_z` overrides the scene bias (pass NaN
// to keep it).
//
// # Safety
// `scene` must be a live handle; `out` must be writable.
enum GdStatus gd_context_new(const struct GdScene *scene,
                             double spacing_m,
                             double b_z,
                             double tol,
                             struct GdContext **out);

// # Safety
// `ctx` must come from `gd_context_new` and not be used afterwards.
void gd_context_free(struct GdContext *ctx);

// Number of voxels, or 0 for a NULL handle.
//
// # Safety
// `ctx` must be NULL or a live handle.
uintptr_t gd_context_voxels(const struct GdContext *ctx);

// Runs a command and writes its files and manifest into `out_dir`.
//
// # Safety
// `ctx` must be a live handle and `out_dir` a NUL-terminated path.
enum GdStatus gd_run(const struct GdContext *ctx,
                     enum GdCommand command,
                     const char *out_dir,
                     uint64_t seed);

// Decay rates of a unit emitter at `position` (metres, 3 values).
//
// # Safety
// `ctx` must be a live handle, `position` readable for 3 values and `out`
// writable.
enum GdStatus gd_decay_rates(const struct GdContext *ctx,
                             enum GdEmitter emitter,
                             const double *position,
                             double omega_rad_s,
                             struct GdRates *out);

// Scattering cross section (m^2) of a homogeneous sphere from the series
// solution.
//
// # Safety
// `out` must be writable.
enum GdStatus gd_mie_csca(double eps_re,
                          double eps_im,
                          double radius_m,
                          double omega_rad_s,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GYRODDA_H */
