//! Scene-driven commands shared by the `gyrodda` binary and the C interface.
//! Every command returns its files as in-memory artifacts; `write_run`
//! puts them on disk next to a manifest.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{
    analyze_with_system, distance_csv_row, far_field_pattern, frequency_csv_row, pattern_csv, DecayRates,
    EmitterAnalysis, DISTANCE_CSV_HEADER, FREQUENCY_CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::geometry::{OffsetSurface, ShapeKind, VoxelGrid};
use crate::material::{Material, MaterialTable};
use crate::mie::{emitter_rates_near_sphere, mie_coefficients, DipoleKind, Orientation};
use crate::multipole::{csv_row, decompose, MultipoleSpectrum, Prefactors, CSV_HEADER};
use crate::optimizer::{
    ga_feature_select, generate_dataset, holdout_split, optimize_placement, rank_correlation, train_surrogate,
    write_records_csv, DatasetSpec, EmitterKind, Encoding, GAConfig, PlacementResult, PlacementSpec, SampleRecord,
    Sampling, TargetKind, TrainConfig,
};
use crate::quadrature::AngularQuadrature;
use crate::scene::{thz, GridSpec, Output, RunManifest, Scene, BUNDLED};
use crate::solver::{SolverConfig, System};
use crate::source::SourceSpec;
use crate::tensor::{vdot, vnorm, vsub, Vec3, C64};

/// A named output file held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }
}

/// Command-line overrides applied on top of the scene.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub tol: Option<f64>,
    /// Grid spacing in metres.
    pub spacing: Option<f64>,
    pub b_z: Option<f64>,
}

/// Exit status for an error: 2 for configuration problems, 3 when the
/// solver fails to converge, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } => 3,
        Error::Config { .. }
        | Error::InvalidParameter(_)
        | Error::UnknownMaterial(_)
        | Error::NotIsotropicSphere
        | Error::EmptyGrid
        | Error::TooLarge { .. }
        | Error::GridTooCoarse { .. }
        | Error::NonPositiveFrequency(_)
        | Error::SourceInsideGrid => 2,
        _ => 1,
    }
}

/// A bundled scene name or a path to a scene file.
pub fn load_scene(arg: &str) -> Result<Scene> {
    if BUNDLED.contains(&arg) {
        Scene::bundled(arg)
    } else {
        Scene::load(Path::new(arg))
    }
}

/// A validated scene with its voxel grid and solver settings.
#[derive(Debug, Clone)]
pub struct Context {
    pub scene: Scene,
    pub grid: VoxelGrid,
    pub table: MaterialTable,
    pub omega_p: f64,
    pub config: SolverConfig,
    pub quadrature: AngularQuadrature,
}

impl Context {
    pub fn new(mut scene: Scene, opts: &RunOptions) -> Result<Self> {
        if let Some(b) = opts.b_z {
            scene.b_z = b;
        }
        if let Some(s) = opts.spacing {
            scene.grid = GridSpec::Spacing(s);
        }
        scene.validate()?;
        let mut config = SolverConfig::default();
        if let Some(t) = opts.tol {
            config.tol = t;
        }
        config.validate().map_err(|e| Error::config("tol", e.to_string()))?;
        let grid = scene.voxelize(None)?;
        Ok(Self {
            omega_p: scene.omega_p()?,
            table: scene.material_table(),
            grid,
            scene,
            config,
            quadrature: AngularQuadrature::default(),
        })
    }

    /// Sweep frequencies in rad/s.
    pub fn omegas(&self) -> Vec<f64> {
        self.scene.sweep.values().iter().map(|w| w * self.omega_p).collect()
    }

    /// The scene bias, followed by zero when an unbiased comparison is requested.
    pub fn biases(&self) -> Vec<f64> {
        if self.scene.compare_unbiased && self.scene.b_z != 0.0 {
            vec![self.scene.b_z, 0.0]
        } else {
            vec![self.scene.b_z]
        }
    }

    fn indexed(&self, plane: bool) -> Vec<(usize, SourceSpec)> {
        self.scene
            .sources
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, s)| s.is_plane_wave() == plane)
            .collect()
    }
}

fn unbiased_suffix(header: &str, skip: usize) -> String {
    header.split(',').skip(skip).map(|c| format!(",{c}_b0")).collect()
}

fn tail(row: &str, skip: usize) -> String {
    row.split(',').skip(skip).map(|c| format!(",{c}")).collect()
}

/// Multipole scattering spectra, one file per plane-wave source.
pub fn scatter(ctx: &Context) -> Result<Vec<Artifact>> {
    let waves = ctx.indexed(true);
    if waves.is_empty() {
        return Err(Error::config("sources", "scatter needs a plane-wave source"));
    }
    let biases = ctx.biases();
    let per_omega: Vec<Vec<Vec<(MultipoleSpectrum, f64)>>> = ctx
        .omegas()
        .par_iter()
        .map(|&w| {
            biases
                .iter()
                .map(|&b| {
                    let mut sys = System::new(&ctx.grid, &ctx.table, w, b, ctx.config)?;
                    waves
                        .iter()
                        .map(|(_, s)| decompose(&sys.solve(s)?, &ctx.grid, Prefactors::default(), &ctx.quadrature))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (k, (index, _)) in waves.iter().enumerate() {
        let mut csv = String::from(CSV_HEADER);
        if biases.len() > 1 {
            csv.push_str(&unbiased_suffix(CSV_HEADER, 2));
        }
        csv.push('\n');
        for row in &per_omega {
            let (spec, ff) = &row[0][k];
            csv.push_str(&csv_row(spec, ctx.omega_p, *ff));
            if let Some(b0) = row.get(1) {
                csv.push_str(&tail(&csv_row(&b0[k].0, ctx.omega_p, b0[k].1), 2));
            }
            csv.push('\n');
        }
        out.push(Artifact::text(format!("scatter_{index}.csv"), csv));
    }
    Ok(out)
}

/// Decay-rate spectra over the sweep, one file per point source.
pub fn decay_frequency(ctx: &Context) -> Result<Vec<Artifact>> {
    let points = ctx.indexed(false);
    if points.is_empty() {
        return Err(Error::config("sources", "decay needs a point source"));
    }
    let biases = ctx.biases();
    let per_omega: Vec<Vec<Vec<EmitterAnalysis>>> = ctx
        .omegas()
        .par_iter()
        .map(|&w| {
            biases
                .iter()
                .map(|&b| {
                    let mut sys = System::new(&ctx.grid, &ctx.table, w, b, ctx.config)?;
                    points
                        .iter()
                        .map(|(_, s)| Ok(analyze_with_system(&mut sys, &ctx.grid, s, &ctx.quadrature, None)?.0))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let omegas = ctx.omegas();
    let mut out = Vec::new();
    for (k, (index, _)) in points.iter().enumerate() {
        let mut csv = String::from(FREQUENCY_CSV_HEADER);
        if biases.len() > 1 {
            csv.push_str(&unbiased_suffix(FREQUENCY_CSV_HEADER, 2));
        }
        csv.push('\n');
        for (row, &w) in per_omega.iter().zip(&omegas) {
            csv.push_str(&frequency_csv_row(w, ctx.omega_p, &row[0][k]));
            if let Some(b0) = row.get(1) {
                csv.push_str(&tail(&frequency_csv_row(w, ctx.omega_p, &b0[k]), 2));
            }
            csv.push('\n');
        }
        out.push(Artifact::text(format!("decay_frequency_{index}.csv"), csv));
    }
    Ok(out)
}

/// Decay rates against the surface gap at the distance-sweep frequency.
/// Gaps that put the source inside a voxel cell are skipped.
pub fn decay_distance(ctx: &Context) -> Result<Vec<Artifact>> {
    let ds = ctx
        .scene
        .distance_sweep
        .ok_or_else(|| Error::config("distance_sweep", "missing"))?;
    let points = ctx.indexed(false);
    if points.is_empty() {
        return Err(Error::config("sources", "decay needs a point source"));
    }
    let mut sys = System::new(&ctx.grid, &ctx.table, ds.omega * ctx.omega_p, ctx.scene.b_z, ctx.config)?;
    let size = ctx.scene.size();
    let mut out = Vec::new();
    for (index, src) in &points {
        let mut csv = format!("{DISTANCE_CSV_HEADER}\n");
        for gap in ds.gaps() {
            let moved = ctx.scene.source_at_gap(src, gap)?;
            match analyze_with_system(&mut sys, &ctx.grid, &moved, &ctx.quadrature, None) {
                Ok((a, _)) => {
                    csv.push_str(&distance_csv_row(gap, size, &a));
                    csv.push('\n');
                }
                Err(Error::SourceInsideGrid) => {
                    log::warn!("gap {gap:e} m puts source {index} inside the grid; skipped")
                }
                Err(e) => return Err(e),
            }
        }
        out.push(Artifact::text(format!("decay_distance_{index}.csv"), csv));
    }
    Ok(out)
}

/// Far-field intensity patterns at the middle of the sweep.
pub fn patterns(ctx: &Context) -> Result<Vec<Artifact>> {
    let v = ctx.scene.sweep.values();
    let omega = v[v.len() / 2] * ctx.omega_p;
    let mut sys = System::new(&ctx.grid, &ctx.table, omega, ctx.scene.b_z, ctx.config)?;
    let mut out = Vec::new();
    for (index, src) in ctx.scene.sources.iter().enumerate() {
        let sol = sys.solve(src)?;
        let rows = far_field_pattern(&sol, &ctx.grid, &ctx.quadrature)?;
        out.push(Artifact::text(format!("pattern_{index}.csv"), pattern_csv(&rows)));
    }
    Ok(out)
}

pub fn grid_dump(ctx: &Context) -> Vec<Artifact> {
    vec![Artifact::text("grid.csv", ctx.grid.to_csv())]
}

/// Every output listed in the scene.
pub fn sweep(ctx: &Context) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for o in &ctx.scene.outputs {
        out.extend(match o {
            Output::Multipoles => scatter(ctx)?,
            Output::DecayFrequency => decay_frequency(ctx)?,
            Output::DecayDistance => decay_distance(ctx)?,
            Output::FarFieldPattern => patterns(ctx)?,
            Output::Grid => grid_dump(ctx),
        });
    }
    Ok(out)
}

/// Writes the artifacts and a manifest into `dir`.
pub fn write_run(command: &str, scene: &Scene, seed: u64, dir: &Path, artifacts: &[Artifact]) -> Result<RunManifest> {
    let mut manifest = RunManifest::start(command, scene, seed);
    for a in artifacts {
        manifest.write(dir, &a.name, &a.bytes)?;
    }
    manifest.finish(dir)?;
    Ok(manifest)
}

pub const MIE_CSV_HEADER: &str =
    "omega_over_omega_p,frequency_thz,size_parameter,csca_oracle_m2,csca_solver_m2,delta_csca";
pub const MIE_COEFFICIENT_HEADER: &str = "omega_over_omega_p,order,a_re,a_im,b_re,b_im";
const CSCA_LIMIT: f64 = 0.05;
const RATE_LIMIT: f64 = 0.10;
const VALID_GRID: f64 = 0.5;

/// Relative deviation with 0/0 counted as exact agreement.
pub fn relative_delta(solver: f64, oracle: f64) -> f64 {
    if solver == oracle {
        0.0
    } else {
        (solver - oracle) / oracle.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MieCheck {
    pub artifacts: Vec<Artifact>,
    pub validity: f64,
    pub max_csca_delta: f64,
    pub max_rate_delta: f64,
    /// Set when the grid is too coarse for the agreement limits to apply.
    pub warning: Option<String>,
}

impl MieCheck {
    /// Within 5% on cross sections and 10% on rates, on a valid grid.
    pub fn passed(&self) -> bool {
        self.warning.is_none() && self.max_csca_delta <= CSCA_LIMIT && self.max_rate_delta <= RATE_LIMIT
    }
}

/// Volume solver against the sphere series, per sweep frequency.
pub fn mie_check(ctx: &Context) -> Result<MieCheck> {
    let scene = &ctx.scene;
    let [shape] = scene.shapes.as_slice() else {
        return Err(Error::NotIsotropicSphere);
    };
    let ShapeKind::Sphere { radius } = shape.kind else {
        return Err(Error::NotIsotropicSphere);
    };
    let mat: Material = shape
        .material
        .as_deref()
        .and_then(|m| ctx.table.get(m).copied())
        .ok_or(Error::NotIsotropicSphere)?;
    let eps_at = |w: f64| -> Result<C64> {
        let t = mat.tensor(w, scene.b_z)?;
        if t.is_scalar() {
            Ok(t.xx())
        } else {
            Err(Error::NotIsotropicSphere)
        }
    };
    let omegas = ctx.omegas();
    for &w in &omegas {
        eps_at(w)?;
    }
    let wave = scene
        .plane_waves()
        .first()
        .copied()
        .unwrap_or_else(|| SourceSpec::plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]));
    let emitters: Vec<(SourceSpec, Orientation, DipoleKind, f64)> = scene
        .point_sources()
        .into_iter()
        .filter_map(|s| {
            let rel = vsub(&s.position()?, &shape.center);
            let d = match s {
                SourceSpec::PointEd { direction, .. } | SourceSpec::PointMd { direction, .. } => direction,
                SourceSpec::PlaneWave { .. } => return None,
            };
            let cos = vdot(&rel, &d) / (vnorm(&rel) * vnorm(&d));
            let orientation = if (cos.abs() - 1.0).abs() < 1e-9 {
                Orientation::Radial
            } else if cos.abs() < 1e-9 {
                Orientation::Tangential
            } else {
                log::warn!("source neither radial nor tangential; left out of the check");
                return None;
            };
            let kind = if matches!(s, SourceSpec::PointMd { .. }) {
                DipoleKind::Magnetic
            } else {
                DipoleKind::Electric
            };
            Some((s, orientation, kind, vnorm(&rel) - radius))
        })
        .collect();
    let validity = scene.validity(&ctx.grid)?;
    let rows: Vec<(String, String, f64, f64)> = omegas
        .par_iter()
        .map(|&w| {
            let eps = eps_at(w)?;
            let coeffs = mie_coefficients(eps, radius, w)?;
            // a vacuum sphere scatters nothing; compare against empty space
            let mut sys = if mat.is_vacuum() {
                None
            } else {
                Some(System::new(&ctx.grid, &ctx.table, w, scene.b_z, ctx.config)?)
            };
            let ff = match sys.as_mut() {
                Some(sys) => decompose(&sys.solve(&wave)?, &ctx.grid, Prefactors::default(), &ctx.quadrature)?.1,
                None => 0.0,
            };
            let oracle = coeffs.csca();
            let dc = relative_delta(ff, oracle);
            let k = crate::constants::wavenumber(w);
            let mut line = format!(
                "{:.6},{:.6},{:.6},{:.6e},{:.6e},{:.6e}",
                w / ctx.omega_p,
                thz(w),
                k * radius,
                oracle,
                ff,
                dc
            );
            let mut dr: f64 = 0.0;
            for (src, orientation, kind, gap) in &emitters {
                let o = emitter_rates_near_sphere(eps, radius, *gap, *orientation, *kind, w)?;
                let s = match sys.as_mut() {
                    Some(sys) => analyze_with_system(sys, &ctx.grid, src, &ctx.quadrature, None)?.0.rates,
                    None => DecayRates::free_space(),
                };
                let (d1, d2) = (
                    relative_delta(s.gamma_r, o.gamma_r),
                    relative_delta(s.gamma_tot, o.gamma_tot),
                );
                dr = dr.max(d1.abs()).max(d2.abs());
                line.push_str(&format!(
                    ",{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                    o.gamma_r, s.gamma_r, d1, o.gamma_tot, s.gamma_tot, d2
                ));
            }
            let mut table = String::new();
            for (n, (a, b)) in coeffs.a.iter().zip(&coeffs.b).enumerate() {
                table.push_str(&format!(
                    "{:.6},{},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                    w / ctx.omega_p,
                    n + 1,
                    a.re,
                    a.im,
                    b.re,
                    b.im
                ));
            }
            Ok((line, table, dc.abs(), dr))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from(MIE_CSV_HEADER);
    for i in 0..emitters.len() {
        for c in [
            "gamma_r_oracle",
            "gamma_r_solver",
            "delta_gamma_r",
            "gamma_tot_oracle",
            "gamma_tot_solver",
            "delta_gamma_tot",
        ] {
            csv.push_str(&format!(",{c}_{i}"));
        }
    }
    csv.push('\n');
    let mut table = format!("{MIE_COEFFICIENT_HEADER}\n");
    let (mut mc, mut mr) = (0.0f64, 0.0f64);
    for (line, t, dc, dr) in &rows {
        csv.push_str(line);
        csv.push('\n');
        table.push_str(t);
        mc = mc.max(*dc);
        mr = mr.max(*dr);
    }
    let warning = (validity > VALID_GRID)
        .then(|| format!("WARNING: validity metric {validity:.3} exceeds {VALID_GRID}; deltas are diagnostic only"));
    Ok(MieCheck {
        artifacts: vec![
            Artifact::text("mie_check.csv", csv),
            Artifact::text("mie_coefficients.csv", table),
        ],
        validity,
        max_csca_delta: mc,
        max_rate_delta: mr,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub samples: usize,
    /// Every k-th record is held out to score the surrogate.
    pub holdout_every: usize,
    /// Frequency in units of the plasma frequency; the sweep's radiative
    /// peak when absent.
    pub omega: Option<f64>,
    pub encoding: Encoding,
    pub log_target: bool,
    pub feature_selection: bool,
    pub train: TrainConfig,
    pub ga: GAConfig,
    /// Optimize a known test function instead of solver data.
    pub synthetic: bool,
    pub verify: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            holdout_every: 5,
            omega: None,
            encoding: Encoding::Continuous,
            log_target: true,
            feature_selection: false,
            train: TrainConfig::default(),
            ga: GAConfig::default(),
            synthetic: false,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    pub skipped: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub mode: String,
    pub emitter: EmitterKind,
    pub omega_over_omega_p: f64,
    pub b_z: f64,
    pub gap_m: f64,
    pub dataset: Option<DatasetStats>,
    pub loss: Vec<f64>,
    pub holdout_rank_correlation: Option<f64>,
    pub feature_mask: Vec<bool>,
    pub optimum: PlacementResult,
    pub on_side_wall: bool,
    /// Axial position of the optimum relative to the shape center.
    pub axial_offset_m: f64,
    /// Synthetic mode only.
    pub known_optimum_miss_m: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizeRun {
    pub report: OptimizeReport,
    pub records: Vec<SampleRecord>,
    pub artifacts: Vec<Artifact>,
}

fn emitter_kind(src: &SourceSpec) -> Result<EmitterKind> {
    let (d, magnetic) = match src {
        SourceSpec::PointEd { direction, .. } => (direction, false),
        SourceSpec::PointMd { direction, .. } => (direction, true),
        SourceSpec::PlaneWave { .. } => return Err(Error::NotPointSource),
    };
    let axis = (0..3)
        .find(|&a| (d[a].abs() - vnorm(d)).abs() <= 1e-12 * vnorm(d))
        .ok_or_else(|| Error::config("sources", "optimized emitters must point along x, y or z"))?;
    Ok(EmitterKind::ALL[axis + if magnetic { 3 } else { 0 }])
}

/// Radiative rate of `kind` at `position`, from a fresh solve.
pub fn radiative_rate(ctx: &Context, kind: EmitterKind, position: Vec3, omega: f64, b_z: f64) -> Result<f64> {
    let mut sys = System::new(&ctx.grid, &ctx.table, omega, b_z, ctx.config)?;
    Ok(
        analyze_with_system(&mut sys, &ctx.grid, &kind.source(position), &ctx.quadrature, None)?
            .0
            .rates
            .gamma_r,
    )
}

/// Dataset, surrogate training and genetic placement search for the
/// scene's first point source, on the surface at that source's gap.
pub fn optimize(ctx: &Context, opts: &OptimizeOptions, seed: u64) -> Result<OptimizeRun> {
    let scene = &ctx.scene;
    let src = scene
        .point_sources()
        .first()
        .copied()
        .ok_or_else(|| Error::config("sources", "optimize needs a point source"))?;
    let kind = emitter_kind(&src)?;
    let shape = &scene.shapes[0];
    let pos = src.position().ok_or(Error::NotPointSource)?;
    let gap = shape.signed_distance(&pos);
    if gap <= 0.0 {
        return Err(Error::config("sources", "the emitter must lie outside the first shape"));
    }
    let surface = shape.offset_surface(gap);
    let b_z = scene.b_z;
    let ga = GAConfig { seed, ..opts.ga };
    let mut artifacts = Vec::new();
    let full = PlacementSpec {
        surface,
        kind,
        b_z,
        omega_band: (0.0, 0.0),
        u_range: (0.0, 1.0),
        phi_range: (-PI, PI),
    };

    if opts.synthetic {
        let omega = opts.omega.unwrap_or(1.0) * ctx.omega_p;
        let star = synthetic_optimum(&surface);
        let spec = PlacementSpec {
            omega_band: (omega, omega),
            ..full
        };
        let width = 0.1 * surface.diameter();
        let f = |p: &Vec3, _: f64| (-vnorm(&vsub(p, &star)).powi(2) / (2.0 * width * width)).exp();
        let optimum = optimize_placement(&spec, &ga, f, &[], Some(|p: &Vec3, w: f64| Ok(f(p, w))))?;
        let report = finish_report(
            "synthetic",
            kind,
            omega / ctx.omega_p,
            b_z,
            gap,
            &surface,
            shape.center,
            None,
            vec![],
            None,
            vec![],
            optimum,
            Some(star),
        );
        artifacts.push(report_artifact(&report));
        return Ok(OptimizeRun {
            report,
            records: vec![],
            artifacts,
        });
    }

    let omega = match opts.omega {
        Some(w) => w * ctx.omega_p,
        None => {
            let omegas = ctx.omegas();
            let scan: Vec<EmitterAnalysis> = omegas
                .par_iter()
                .map(|&w| {
                    let mut sys = System::new(&ctx.grid, &ctx.table, w, b_z, ctx.config)?;
                    Ok(analyze_with_system(&mut sys, &ctx.grid, &src, &ctx.quadrature, None)?.0)
                })
                .collect::<Result<_>>()?;
            let mut csv = format!("{FREQUENCY_CSV_HEADER}\n");
            for (w, a) in omegas.iter().zip(&scan) {
                csv.push_str(&frequency_csv_row(*w, ctx.omega_p, a));
                csv.push('\n');
            }
            artifacts.push(Artifact::text("frequency_scan.csv", csv));
            let best = (0..scan.len())
                .max_by(|&a, &b| scan[a].rates.gamma_r.total_cmp(&scan[b].rates.gamma_r))
                .expect("sweep has at least two points");
            omegas[best]
        }
    };

    let spec = DatasetSpec {
        sampling: Sampling::LatinHypercube { count: opts.samples },
        u_range: full.u_range,
        phi_range: full.phi_range,
        omega_range: (omega, omega),
        b_z: vec![b_z],
        kinds: vec![kind],
        target: TargetKind::GammaR,
        seed,
    };
    let data = generate_dataset(&spec, &surface, &ctx.grid, &ctx.table, &ctx.quadrature, &ctx.config)?;
    let records = data.records;
    if records.len() < 2 * opts.holdout_every.max(2) {
        return Err(Error::InvalidParameter(format!(
            "only {} dataset points solved",
            records.len()
        )));
    }
    let mut csv = Vec::new();
    write_records_csv(&mut csv, &records)?;
    artifacts.push(Artifact {
        name: "dataset.csv".into(),
        bytes: csv,
    });
    let targets: Vec<f64> = records.iter().map(|r| r.target).collect();
    let stats = DatasetStats {
        count: records.len(),
        skipped: data.skipped.len(),
        min: targets.iter().copied().fold(f64::INFINITY, f64::min),
        median: crate::peaks::median(&targets),
        max: targets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };

    let train = TrainConfig { seed, ..opts.train };
    let mask = if opts.feature_selection {
        ga_feature_select(&records, opts.encoding, opts.log_target, &ga, &train)?.best
    } else {
        vec![true; opts.encoding.len()]
    };
    let (fit, held) = holdout_split(&records, opts.holdout_every);
    let (scorer, _) = train_surrogate(&fit, opts.encoding, mask.clone(), opts.log_target, seed, &train)?;
    let predicted: Vec<f64> = held
        .iter()
        .map(|r| scorer.predict(&r.position, r.omega, r.b_z, r.emitter_kind))
        .collect();
    let held_targets: Vec<f64> = held.iter().map(|r| r.target).collect();
    let rho = rank_correlation(&predicted, &held_targets);

    let (model, loss) = train_surrogate(&records, opts.encoding, mask.clone(), opts.log_target, seed, &train)?;
    let mut ckpt = Vec::new();
    model.model.write_checkpoint(&mut ckpt)?;
    artifacts.push(Artifact {
        name: "model.gdsm".into(),
        bytes: ckpt,
    });
    let spec = PlacementSpec {
        omega_band: (omega, omega),
        ..full
    };
    let predict = |p: &Vec3, w: f64| model.predict(p, w, b_z, kind);
    let optimum = if opts.verify {
        let verify = |p: &Vec3, w: f64| radiative_rate(ctx, kind, *p, w, b_z);
        optimize_placement(&spec, &ga, predict, &records, Some(verify))?
    } else {
        optimize_placement(&spec, &ga, predict, &records, None::<fn(&Vec3, f64) -> Result<f64>>)?
    };
    let report = finish_report(
        "solver",
        kind,
        omega / ctx.omega_p,
        b_z,
        gap,
        &surface,
        shape.center,
        Some(stats),
        loss,
        Some(rho),
        mask,
        optimum,
        None,
    );
    artifacts.push(report_artifact(&report));
    Ok(OptimizeRun {
        report,
        records,
        artifacts,
    })
}

/// Test-function optimum: on the side wall a quarter of the height above
/// the center when there is one, otherwise on the equator.
pub fn synthetic_optimum(surface: &OffsetSurface) -> Vec3 {
    let u = match *surface {
        OffsetSurface::Cylinder { height, .. } => surface.side_wall_u(0.25 * height).unwrap_or(0.5),
        OffsetSurface::Sphere { .. } => 0.5,
    };
    surface.point(u, 0.4).position
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    mode: &str,
    emitter: EmitterKind,
    omega_over_omega_p: f64,
    b_z: f64,
    gap_m: f64,
    surface: &OffsetSurface,
    center: Vec3,
    dataset: Option<DatasetStats>,
    loss: Vec<f64>,
    holdout_rank_correlation: Option<f64>,
    feature_mask: Vec<bool>,
    optimum: PlacementResult,
    known: Option<Vec3>,
) -> OptimizeReport {
    OptimizeReport {
        mode: mode.to_string(),
        emitter,
        omega_over_omega_p,
        b_z,
        gap_m,
        dataset,
        loss,
        holdout_rank_correlation,
        feature_mask,
        on_side_wall: surface.on_side_wall(optimum.u),
        axial_offset_m: optimum.position[2] - center[2],
        known_optimum_miss_m: known.map(|k| vnorm(&vsub(&optimum.position, &k))),
        optimum,
    }
}

fn report_artifact(report: &OptimizeReport) -> Artifact {
    Artifact::text(
        "optimize_report.json",
        serde_json::to_string_pretty(report).expect("report serializes"),
    )
}

/// Axial offset (from the shape center) of the largest radiative rate
/// along the side-wall meridian at azimuth `phi`, sampled at `points`
/// heights.
pub fn side_wall_maximum(
    ctx: &Context,
    kind: EmitterKind,
    surface: &OffsetSurface,
    phi: f64,
    omega: f64,
    points: usize,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let OffsetSurface::Cylinder { height, center, .. } = *surface else {
        return Err(Error::InvalidParameter("side-wall scan needs a cylinder".into()));
    };
    let mut sys = System::new(&ctx.grid, &ctx.table, omega, ctx.scene.b_z, ctx.config)?;
    let n = points.max(2);
    let mut profile = Vec::with_capacity(n);
    for i in 0..n {
        let z = -0.5 * height + height * i as f64 / (n - 1) as f64;
        let u = surface.side_wall_u(z).expect("inside the side wall");
        let p = surface.point(u, phi).position;
        let g = analyze_with_system(&mut sys, &ctx.grid, &kind.source(p), &ctx.quadrature, None)?
            .0
            .rates
            .gamma_r;
        profile.push((p[2] - center[2], g));
    }
    let best = profile
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok((best.0, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeSpec;
    use crate::material::MaterialParams;
    use crate::scene::{MaterialSpec, Sweep, SCHEMA_VERSION};
    use std::collections::BTreeMap;

    const UM: f64 = 1e-6;

    fn sphere_scene(eps: f64) -> Scene {
        Scene {
            schema: SCHEMA_VERSION,
            name: "test".into(),
            materials: BTreeMap::from([(
                "m".into(),
                MaterialSpec::Constant {
                    eps_re: eps,
                    eps_im: 0.0,
                },
            )]),
            shapes: vec![ShapeSpec::sphere(30.0 * UM, "m")],
            b_z: 0.0,
            compare_unbiased: false,
            sources: vec![
                SourceSpec::plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
                SourceSpec::point_ed([0.0, 0.0, 40.0 * UM], [0.0, 0.0, 1.0]),
            ],
            sweep: Sweep {
                omega_min: 0.4,
                omega_max: 0.6,
                points: 2,
            },
            distance_sweep: None,
            grid: GridSpec::Spacing(10.0 * UM),
            outputs: vec![Output::Multipoles, Output::Grid],
            omega_ref: Some(MaterialParams::default().omega_p),
        }
    }

    #[test]
    fn exit_codes_follow_the_error_class() {
        assert_eq!(exit_code(&Error::config("x", "y")), 2);
        assert_eq!(
            exit_code(&Error::NoConvergence {
                residual: 1.0,
                iterations: 3
            }),
            3
        );
        assert_eq!(exit_code(&Error::Io("x".into())), 1);
    }

    #[test]
    fn bundled_names_and_paths_load() {
        assert_eq!(load_scene("insb_sphere").unwrap().name, "insb_sphere");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, sphere_scene(4.0).to_json()).unwrap();
        assert_eq!(load_scene(path.to_str().unwrap()).unwrap(), sphere_scene(4.0));
        assert!(matches!(load_scene("no_such_scene"), Err(Error::Config { .. })));
    }

    #[test]
    fn overrides_reach_the_context() {
        let opts = RunOptions {
            spacing: Some(12.0 * UM),
            b_z: Some(0.3),
            tol: Some(1e-8),
            seed: 0,
        };
        let ctx = Context::new(sphere_scene(4.0), &opts).unwrap();
        assert_eq!(ctx.grid.spacing, 12.0 * UM);
        assert_eq!(ctx.scene.b_z, 0.3);
        assert_eq!(ctx.config.tol, 1e-8);
        let bad = RunOptions {
            tol: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(
            Context::new(sphere_scene(4.0), &bad),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn sweep_writes_rows_in_frequency_order() {
        let ctx = Context::new(sphere_scene(4.0), &RunOptions::default()).unwrap();
        let out = sweep(&ctx).unwrap();
        let names: Vec<&str> = out.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["scatter_0.csv", "grid.csv"]);
        let text = String::from_utf8(out[0].bytes.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.400000") && lines[2].starts_with("0.600000"));
    }

    #[test]
    fn unbiased_columns_are_appended() {
        let mut scene = Scene::bundled("insb_sphere_enz").unwrap();
        scene.grid = GridSpec::Spacing(15.0 * UM);
        scene.sweep.points = 2;
        scene.sweep.omega_min = 1.3;
        scene.sweep.omega_max = 1.4;
        let ctx = Context::new(scene, &RunOptions::default()).unwrap();
        let out = scatter(&ctx).unwrap();
        let text = String::from_utf8(out[0].bytes.clone()).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        assert_eq!(header.len(), 18);
        assert_eq!(header[10], "ED_b0");
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 18));
    }

    #[test]
    fn vacuum_sphere_gives_exact_zero_deltas() {
        let ctx = Context::new(sphere_scene(1.0), &RunOptions::default()).unwrap();
        let check = mie_check(&ctx).unwrap();
        assert_eq!(check.max_csca_delta, 0.0);
        assert_eq!(check.max_rate_delta, 0.0);
    }

    #[test]
    fn coarse_grid_warns_without_failing() {
        let mut scene = sphere_scene(10.6);
        scene.sweep.omega_min = 2.0;
        scene.sweep.omega_max = 2.2;
        scene.grid = GridSpec::Spacing(15.0 * UM);
        let ctx = Context::new(scene, &RunOptions::default()).unwrap();
        let check = mie_check(&ctx).unwrap();
        assert!(check.validity > 0.5);
        assert!(check.warning.as_deref().unwrap().starts_with("WARNING"));
        assert!(!check.passed());
    }

    #[test]
    fn biased_drude_sphere_is_rejected() {
        let ctx = Context::new(Scene::bundled("insb_sphere_enz").unwrap(), &RunOptions::default()).unwrap();
        assert_eq!(mie_check(&ctx).unwrap_err(), Error::NotIsotropicSphere);
    }

    #[test]
    fn synthetic_optimize_is_deterministic() {
        let ctx = Context::new(
            Scene::bundled("hybrid_cylinder_md").unwrap(),
            &RunOptions {
                spacing: Some(20.0 * UM),
                ..Default::default()
            },
        )
        .unwrap();
        let opts = OptimizeOptions {
            synthetic: true,
            ga: GAConfig {
                generations: 60,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = optimize(&ctx, &opts, 5).unwrap();
        let b = optimize(&ctx, &opts, 5).unwrap();
        assert_eq!(a.artifacts, b.artifacts);
        let surface = ctx.scene.shapes[0].offset_surface(a.report.gap_m);
        assert!(a.report.known_optimum_miss_m.unwrap() <= 0.02 * surface.diameter());
        assert!(a.report.on_side_wall);
        assert_eq!(a.report.emitter, EmitterKind::MDx);
        assert!((a.report.gap_m - 3.0 * UM).abs() < 1e-12);
    }

    #[test]
    fn manifest_lists_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let scene = sphere_scene(4.0);
        let arts = vec![
            Artifact::text("a.csv", "x\n1\n".into()),
            Artifact::text("b.csv", "y\n".into()),
        ];
        let m = write_run("scatter", &scene, 3, dir.path(), &arts).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.verify(dir.path()).unwrap(), None);
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn zero_over_zero_is_agreement() {
        assert_eq!(relative_delta(0.0, 0.0), 0.0);
        assert_eq!(relative_delta(1.1, 1.0), 0.10000000000000009);
    }
}
