//! C interface to the gyrodda engine.
//!
//! Scenes and contexts are opaque handles, created and released through
//! paired functions. Every fallible call returns a `GdStatus`; the message of
//! the most recent failure on the calling thread is available from
//! `gd_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use gyrodda::app::{self, Context, RunOptions};
use gyrodda::optimizer::EmitterKind;
use gyrodda::scene::Scene;
use gyrodda::tensor::C64;
use gyrodda::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Convergence = 3,
    CheckFailed = 4,
    InvalidArgument = 5,
    Io = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdCommand {
    Scatter = 0,
    Decay = 1,
    Sweep = 2,
    GridDump = 3,
    MieCheck = 4,
    /// As `MieCheck`, but reports `CheckFailed` outside the agreement limits.
    MieCheckStrict = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdEmitter {
    EdX = 0,
    EdY = 1,
    EdZ = 2,
    MdX = 3,
    MdY = 4,
    MdZ = 5,
}

/// Decay rates normalized to free space.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GdRates {
    pub gamma_r: f64,
    pub gamma_nr: f64,
    pub gamma_tot: f64,
    pub eta: f64,
}

pub struct GdScene(Scene);

pub struct GdContext(Context);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Fail {
    Null(&'static str),
    Engine(Error),
    Check(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Engine(e)
    }
}

fn record(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|l| *l.borrow_mut() = Some(c));
}

fn call(f: impl FnOnce() -> Result<(), Fail>) -> GdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GdStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            record(format!("null pointer: {what}"));
            GdStatus::NullPointer
        }
        Ok(Err(Fail::Check(msg))) => {
            record(msg);
            GdStatus::CheckFailed
        }
        Ok(Err(Fail::Engine(e))) => {
            record(e.to_string());
            match e {
                Error::Config { .. }
                | Error::UnknownMaterial(_)
                | Error::NotIsotropicSphere
                | Error::EmptyGrid
                | Error::TooLarge { .. }
                | Error::GridTooCoarse { .. } => GdStatus::Config,
                Error::NoConvergence { .. } => GdStatus::Convergence,
                Error::Io(_) => GdStatus::Io,
                _ => GdStatus::InvalidArgument,
            }
        }
        Err(_) => {
            record("internal panic".into());
            GdStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Engine(Error::InvalidParameter(format!("{what} is not UTF-8"))))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gd_last_error() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a scene from a JSON file path or a bundled scene name.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_scene_load(spec: *const c_char, out: *mut *mut GdScene) -> GdStatus {
    call(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let scene = app::load_scene(text(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(GdScene(scene)));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from `gd_scene_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gd_scene_free(scene: *mut GdScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Writes the 64-character scene hash and a NUL into `buf` (`len >= 65`).
///
/// # Safety
/// `scene` must be a live handle and `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gd_scene_hash(scene: *const GdScene, buf: *mut c_char, len: usize) -> GdStatus {
    call(|| {
        let s = scene.as_ref().ok_or(Fail::Null("scene"))?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let h = s.0.hash();
        if len < h.len() + 1 {
            return Err(Error::InvalidParameter(format!("buffer needs {} bytes", h.len() + 1)).into());
        }
        std::ptr::copy_nonoverlapping(h.as_ptr() as *const c_char, buf, h.len());
        *buf.add(h.len()) = 0;
        Ok(())
    })
}

/// Voxelizes the scene. `spacing_m > 0` and `tol > 0` override the scene
/// and solver defaults; a finite `b_z` overrides the scene bias (pass NaN
/// to keep it).
///
/// # Safety
/// `scene` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_context_new(
    scene: *const GdScene,
    spacing_m: f64,
    b_z: f64,
    tol: f64,
    out: *mut *mut GdContext,
) -> GdStatus {
    call(|| {
        let s = scene.as_ref().ok_or(Fail::Null("scene"))?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let opts = RunOptions {
            seed: 0,
            tol: (tol > 0.0).then_some(tol),
            spacing: (spacing_m > 0.0).then_some(spacing_m),
            b_z: b_z.is_finite().then_some(b_z),
        };
        *out = Box::into_raw(Box::new(GdContext(Context::new(s.0.clone(), &opts)?)));
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from `gd_context_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gd_context_free(ctx: *mut GdContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Number of voxels, or 0 for a NULL handle.
///
/// # Safety
/// `ctx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_context_voxels(ctx: *const GdContext) -> usize {
    ctx.as_ref().map_or(0, |c| c.0.grid.len())
}

/// Runs a command and writes its files and manifest into `out_dir`.
///
/// # Safety
/// `ctx` must be a live handle and `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn gd_run(
    ctx: *const GdContext,
    command: GdCommand,
    out_dir: *const c_char,
    seed: u64,
) -> GdStatus {
    call(|| {
        let c = &ctx.as_ref().ok_or(Fail::Null("ctx"))?.0;
        let dir = Path::new(text(out_dir, "out_dir")?);
        let (name, artifacts, verdict) = match command {
            GdCommand::Scatter => ("scatter", app::scatter(c)?, None),
            GdCommand::Decay => {
                let mut a = app::decay_frequency(c)?;
                if c.scene.distance_sweep.is_some() {
                    a.extend(app::decay_distance(c)?);
                }
                ("decay", a, None)
            }
            GdCommand::Sweep => ("sweep", app::sweep(c)?, None),
            GdCommand::GridDump => ("grid dump", app::grid_dump(c), None),
            GdCommand::MieCheck | GdCommand::MieCheckStrict => {
                let m = app::mie_check(c)?;
                let verdict = (command == GdCommand::MieCheckStrict && !m.passed()).then(|| {
                    format!(
                        "mie-check outside limits: C_sca {:.4}, rates {:.4}, validity {:.3}",
                        m.max_csca_delta, m.max_rate_delta, m.validity
                    )
                });
                ("mie-check", m.artifacts, verdict)
            }
        };
        app::write_run(name, &c.scene, seed, dir, &artifacts)?;
        match verdict {
            Some(msg) => Err(Fail::Check(msg)),
            None => Ok(()),
        }
    })
}

/// Decay rates of a unit emitter at `position` (metres, 3 values).
///
/// # Safety
/// `ctx` must be a live handle, `position` readable for 3 values and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gd_decay_rates(
    ctx: *const GdContext,
    emitter: GdEmitter,
    position: *const f64,
    omega_rad_s: f64,
    out: *mut GdRates,
) -> GdStatus {
    call(|| {
        let c = &ctx.as_ref().ok_or(Fail::Null("ctx"))?.0;
        if position.is_null() {
            return Err(Fail::Null("position"));
        }
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        let p = [*position, *position.add(1), *position.add(2)];
        let kind = EmitterKind::ALL[emitter as usize];
        let r = gyrodda::emission::decay_rates(
            &c.grid,
            &c.table,
            &kind.source(p),
            omega_rad_s,
            c.scene.b_z,
            &c.quadrature,
            &c.config,
        )?;
        *out = GdRates {
            gamma_r: r.gamma_r,
            gamma_nr: r.gamma_nr,
            gamma_tot: r.gamma_tot,
            eta: r.eta,
        };
        Ok(())
    })
}

/// Scattering cross section (m^2) of a homogeneous sphere from the series
/// solution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_mie_csca(
    eps_re: f64,
    eps_im: f64,
    radius_m: f64,
    omega_rad_s: f64,
    out: *mut f64,
) -> GdStatus {
    call(|| {
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        *out = gyrodda::mie::mie_coefficients(C64::new(eps_re, eps_im), radius_m, omega_rad_s)?.csca();
        Ok(())
    })
}
