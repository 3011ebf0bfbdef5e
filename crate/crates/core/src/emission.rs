//! Radiative and non-radiative decay rates of point dipole emitters.
//!
//! Rates are normalized to the emitter's free-space power. The radiative
//! part integrates the total (source plus induced) far field; the
//! non-radiative part is the power absorbed by the voxels.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C0, EPS0, MU0, Z0};
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::green::{ed_far_amplitude, md_far_amplitude};
use crate::material::MaterialTable;
use crate::multipole::radiation_amplitude;
use crate::quadrature::AngularQuadrature;
use crate::solver::{scattered_field, scattered_magnetic_field, FieldSolution, SolverConfig, System};
use crate::source::SourceSpec;
use crate::tensor::{cvec_cdot, cvec_norm_sqr, CVec3, Vec3};

/// Largest relative change in radiated power tolerated between the
/// configured angular grid and its refinement.
pub const QUADRATURE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma_r: f64,
    pub gamma_nr: f64,
    pub gamma_tot: f64,
    pub eta: f64,
    /// Radiated power (W).
    pub p_rad: f64,
    /// Absorbed power (W).
    pub p_abs: f64,
    /// Free-space power of the same emitter (W).
    pub p_free: f64,
}

impl DecayRates {
    /// Build from powers; `gamma_tot` is the sum of the two channels.
    pub fn from_powers(p_rad: f64, p_abs: f64, p_free: f64) -> Self {
        let gamma_r = p_rad / p_free;
        let gamma_nr = p_abs / p_free;
        let gamma_tot = gamma_r + gamma_nr;
        Self {
            gamma_r,
            gamma_nr,
            gamma_tot,
            eta: quantum_efficiency_of(gamma_r, gamma_nr),
            p_rad,
            p_abs,
            p_free,
        }
    }

    /// Rates already normalized; powers are reported in units of `P0`.
    pub fn from_normalized(gamma_r: f64, gamma_nr: f64) -> Self {
        Self::from_powers(gamma_r, gamma_nr, 1.0)
    }

    pub fn free_space() -> Self {
        Self::from_normalized(1.0, 0.0)
    }
}

fn quantum_efficiency_of(gamma_r: f64, gamma_nr: f64) -> f64 {
    let tot = gamma_r + gamma_nr;
    if tot > 0.0 {
        gamma_r / tot
    } else {
        0.0
    }
}

pub fn quantum_efficiency(rates: &DecayRates) -> f64 {
    quantum_efficiency_of(rates.gamma_r, rates.gamma_nr)
}

/// Power radiated by the emitter alone in vacuum (W).
pub fn free_space_power(source: &SourceSpec, omega: f64) -> Result<f64> {
    let w4 = omega.powi(4);
    match source {
        SourceSpec::PointEd { magnitude, .. } => Ok(w4 * magnitude * magnitude / (12.0 * PI * EPS0 * C0.powi(3))),
        SourceSpec::PointMd { magnitude, .. } => Ok(MU0 * w4 * magnitude * magnitude / (12.0 * PI * C0.powi(3))),
        SourceSpec::PlaneWave { .. } => Err(Error::NotPointSource),
    }
}

/// Far-field amplitude of the bare emitter.
pub fn source_far_amplitude(source: &SourceSpec, n: &Vec3, k: f64) -> Result<CVec3> {
    let pos = source.position().ok_or(Error::NotPointSource)?;
    let mom = source.moment().ok_or(Error::NotPointSource)?;
    Ok(match source {
        SourceSpec::PointEd { .. } => ed_far_amplitude(n, &pos, &mom, k),
        _ => md_far_amplitude(n, &pos, &mom, k),
    })
}

/// Total far-field amplitude (emitter plus induced dipoles).
pub fn total_far_amplitude(solution: &FieldSolution, grid: &VoxelGrid, n: &Vec3) -> Result<CVec3> {
    let k = solution.wavenumber();
    let s = source_far_amplitude(&solution.source, n, k)?;
    let f = radiation_amplitude(grid, &solution.polarization, k, n);
    Ok([s[0] + f[0], s[1] + f[1], s[2] + f[2]])
}

/// Radiated power `(1/(2 Z0)) int |F|^2 dOmega` of the total field.
pub fn radiated_power(solution: &FieldSolution, grid: &VoxelGrid, quadrature: &AngularQuadrature) -> Result<f64> {
    let dirs = quadrature.directions();
    let parts: Result<Vec<f64>> = dirs
        .par_iter()
        .map(|d| Ok(d.weight * cvec_norm_sqr(&total_far_amplitude(solution, grid, &d.n)?)))
        .collect();
    Ok(parts?.iter().sum::<f64>() / (2.0 * Z0))
}

/// Radiated power checked against the refined angular grid.
pub fn radiated_power_checked(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    quadrature: &AngularQuadrature,
) -> Result<f64> {
    let coarse = radiated_power(solution, grid, quadrature)?;
    let fine = radiated_power(solution, grid, &quadrature.refined())?;
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if change > QUADRATURE_TOLERANCE {
        return Err(Error::QuadratureUnderresolved(change));
    }
    Ok(fine)
}

/// Rates from an already solved emitter problem.
pub fn rates_from_solution(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    quadrature: &AngularQuadrature,
) -> Result<DecayRates> {
    let p0 = free_space_power(&solution.source, solution.omega)?;
    let p_rad = radiated_power_checked(solution, grid, quadrature)?;
    let p_abs = solution.absorbed_power();
    Ok(DecayRates::from_powers(p_rad, p_abs, p0))
}

/// `Gamma_tot / Gamma_0` from the scattered field at the emitter.
pub fn green_total_from_solution(solution: &FieldSolution, grid: &VoxelGrid) -> Result<f64> {
    let k = solution.wavenumber();
    let pos = solution.source.position().ok_or(Error::NotPointSource)?;
    let mom = solution.source.moment().ok_or(Error::NotPointSource)?;
    let norm = cvec_norm_sqr(&mom);
    match solution.source {
        SourceSpec::PointEd { .. } => {
            let es = scattered_field(solution, grid, &pos)?;
            Ok(1.0 + 6.0 * PI * EPS0 / (k.powi(3) * norm) * cvec_cdot(&mom, &es).im)
        }
        _ => {
            let hs = scattered_magnetic_field(solution, grid, &pos)?;
            Ok(1.0 + 6.0 * PI / (k.powi(3) * norm) * cvec_cdot(&mom, &hs).im)
        }
    }
}

/// Both routes to the decay rate from one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterAnalysis {
    pub rates: DecayRates,
    pub gamma_tot_green: f64,
}

impl EmitterAnalysis {
    /// `|gamma_green - gamma_tot| / gamma_tot`.
    pub fn ldos_mismatch(&self) -> f64 {
        (self.gamma_tot_green - self.rates.gamma_tot).abs() / self.rates.gamma_tot
    }
}

fn check_point(source: &SourceSpec, omega: f64) -> Result<()> {
    source.validate()?;
    if source.is_plane_wave() {
        return Err(Error::NotPointSource);
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    Ok(())
}

/// Solve with a prepared system and evaluate both routes.
pub fn analyze_with_system(
    system: &mut System<'_>,
    grid: &VoxelGrid,
    source: &SourceSpec,
    quadrature: &AngularQuadrature,
    guess: Option<&[CVec3]>,
) -> Result<(EmitterAnalysis, FieldSolution)> {
    let sol = system.solve_with_guess(source, guess)?;
    let rates = rates_from_solution(&sol, grid, quadrature)?;
    let gamma_tot_green = green_total_from_solution(&sol, grid)?;
    Ok((EmitterAnalysis { rates, gamma_tot_green }, sol))
}

pub fn analyze_emitter(
    grid: &VoxelGrid,
    materials: &MaterialTable,
    source: &SourceSpec,
    omega: f64,
    b_z: f64,
    quadrature: &AngularQuadrature,
    config: &SolverConfig,
) -> Result<EmitterAnalysis> {
    check_point(source, omega)?;
    if grid.is_empty() {
        return Ok(EmitterAnalysis {
            rates: DecayRates::free_space(),
            gamma_tot_green: 1.0,
        });
    }
    let mut sys = System::new(grid, materials, omega, b_z, *config)?;
    Ok(analyze_with_system(&mut sys, grid, source, quadrature, None)?.0)
}

pub fn decay_rates(
    grid: &VoxelGrid,
    materials: &MaterialTable,
    source: &SourceSpec,
    omega: f64,
    b_z: f64,
    quadrature: &AngularQuadrature,
    config: &SolverConfig,
) -> Result<DecayRates> {
    Ok(analyze_emitter(grid, materials, source, omega, b_z, quadrature, config)?.rates)
}

pub fn gamma_total_via_green(
    grid: &VoxelGrid,
    materials: &MaterialTable,
    source: &SourceSpec,
    omega: f64,
    b_z: f64,
    config: &SolverConfig,
) -> Result<f64> {
    check_point(source, omega)?;
    if grid.is_empty() {
        return Ok(1.0);
    }
    let sol = System::new(grid, materials, omega, b_z, *config)?.solve(source)?;
    green_total_from_solution(&sol, grid)
}

pub const FREQUENCY_CSV_HEADER: &str =
    "omega_over_omega_p,frequency_thz,gamma_r,gamma_nr,gamma_tot,eta,gamma_tot_green";
pub const DISTANCE_CSV_HEADER: &str = "gap_m,gap_over_size,gamma_r,gamma_nr,gamma_tot,eta,gamma_tot_green";
pub const PATTERN_CSV_HEADER: &str = "theta_rad,phi_rad,intensity,normalized";

pub fn frequency_csv_row(omega: f64, omega_p: f64, a: &EmitterAnalysis) -> String {
    let r = &a.rates;
    format!(
        "{:.6},{:.6},{:.6e},{:.6e},{:.6e},{:.6},{:.6e}",
        omega / omega_p,
        omega / (2.0 * PI) * 1e-12,
        r.gamma_r,
        r.gamma_nr,
        r.gamma_tot,
        r.eta,
        a.gamma_tot_green
    )
}

pub fn distance_csv_row(gap: f64, size: f64, a: &EmitterAnalysis) -> String {
    let r = &a.rates;
    format!(
        "{:.6e},{:.6},{:.6e},{:.6e},{:.6e},{:.6},{:.6e}",
        gap,
        gap / size,
        r.gamma_r,
        r.gamma_nr,
        r.gamma_tot,
        r.eta,
        a.gamma_tot_green
    )
}

/// Angular intensity `|F|^2` of the total field on the quadrature nodes,
/// with a column normalized to its maximum.
pub fn far_field_pattern(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    quadrature: &AngularQuadrature,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let dirs = quadrature.directions();
    let k = solution.wavenumber();
    let vals: Vec<f64> = dirs
        .iter()
        .map(|d| {
            let f = if solution.source.is_plane_wave() {
                radiation_amplitude(grid, &solution.polarization, k, &d.n)
            } else {
                total_far_amplitude(solution, grid, &d.n)?
            };
            Ok(cvec_norm_sqr(&f))
        })
        .collect::<Result<_>>()?;
    let max = vals.iter().cloned().fold(0.0, f64::max);
    Ok(dirs
        .iter()
        .zip(vals)
        .map(|(d, v)| (d.theta, d.phi, v, if max > 0.0 { v / max } else { 0.0 }))
        .collect())
}

pub fn pattern_csv(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut out = String::from(PATTERN_CSV_HEADER);
    out.push('\n');
    for (t, p, i, n) in rows {
        out.push_str(&format!("{t:.6},{p:.6},{i:.6e},{n:.6}\n"));
    }
    out
}
