//! Cartesian multipole moments of the induced current and the
//! corresponding partial scattering cross sections.
//!
//! With `J_i = -i omega P_i / V` every volume integral `int f(r) J dv`
//! becomes `-i omega sum_i f(r_i) P_i`, so the electric moments are plain
//! sums over the voxel dipoles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C0, EPS0};
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::quadrature::AngularQuadrature;
use crate::solver::{check_sizes, FieldSolution};
use crate::tensor::{cvec_norm_sqr, vdot, vsub, CMat3, CVec3, Vec3, C64, CZERO};

pub type CTensor3 = [[[C64; 3]; 3]; 3];

/// Coefficient sets for the moment corrections and cross-section weights.
///
/// `Printed` is the literal tabulation. `Consistent` uses the same moment
/// definitions but the magnetic quadrupole `k^2` correction of the exact
/// spherical-Bessel expansion (`1/14`) and the far-field weights that
/// match each moment's normalization (EQ `k^6/80 pi`, MO `2 k^8/105 pi`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactors {
    Printed,
    #[default]
    Consistent,
}

impl Prefactors {
    fn qm_correction(self) -> f64 {
        match self {
            Prefactors::Printed => 0.25,
            Prefactors::Consistent => 1.0 / 14.0,
        }
    }

    /// Denominators `w` in `k^n/(w pi ...)` for ED, MD, EQ, MQ, EO, MO.
    fn weights(self) -> [f64; 6] {
        match self {
            Prefactors::Printed => [6.0, 6.0, 160.0, 80.0, 1890.0, 1890.0],
            Prefactors::Consistent => [6.0, 6.0, 80.0, 80.0, 1890.0, 105.0 / 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Partials {
    pub ed: f64,
    pub md: f64,
    pub eq: f64,
    pub mq: f64,
    pub eo: f64,
    pub mo: f64,
}

impl Partials {
    pub fn as_array(&self) -> [f64; 6] {
        [self.ed, self.md, self.eq, self.mq, self.eo, self.mo]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub const LABELS: [&'static str; 6] = ["ED", "MD", "EQ", "MQ", "EO", "MO"];

    /// Label of the largest partial.
    pub fn dominant(&self) -> &'static str {
        let a = self.as_array();
        let mut best = 0;
        for i in 1..6 {
            if a[i] > a[best] {
                best = i;
            }
        }
        Self::LABELS[best]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleSpectrum {
    pub omega: f64,
    pub p: CVec3,
    pub m: CVec3,
    pub qe: CMat3,
    pub qm: CMat3,
    pub oe: CTensor3,
    pub om: CTensor3,
    pub prefactors: Prefactors,
    pub csca_partial: Partials,
    pub csca_total: f64,
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Moments about the grid's reference point.
pub fn moments(solution: &FieldSolution, grid: &VoxelGrid, prefactors: Prefactors) -> Result<MultipoleSpectrum> {
    moments_about(solution, grid, &grid.reference, prefactors)
}

/// Moments about an explicit expansion origin.
pub fn moments_about(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    origin: &Vec3,
    prefactors: Prefactors,
) -> Result<MultipoleSpectrum> {
    check_sizes(solution, grid)?;
    let k = solution.wavenumber();
    let k2 = k * k;
    let k4 = k2 * k2;
    let cqm = prefactors.qm_correction();
    let mut p = [CZERO; 3];
    // accumulated without the -i omega factor of the magnetic moments
    let mut rxp_sum = [CZERO; 3];
    let mut qe = [[CZERO; 3]; 3];
    let mut qm = [[CZERO; 3]; 3];
    let mut oe = [[[CZERO; 3]; 3]; 3];
    let mut om = [[[CZERO; 3]; 3]; 3];

    for (c, pv) in grid.centers.iter().zip(&solution.polarization) {
        let r = vsub(c, origin);
        let r2 = vdot(&r, &r);
        let rp = r[0] * pv[0] + r[1] * pv[1] + r[2] * pv[2];
        let rxp: CVec3 = [
            r[1] * pv[2] - r[2] * pv[1],
            r[2] * pv[0] - r[0] * pv[2],
            r[0] * pv[1] - r[1] * pv[0],
        ];
        for a in 0..3 {
            p[a] += pv[a]
                + (rp * r[a] - pv[a] * (2.0 * r2)) * (k2 / 10.0)
                + (pv[a] * (3.0 * r2 * r2) - rp * (2.0 * r2 * r[a])) * (k4 / 280.0);
            rxp_sum[a] += rxp[a] * (1.0 - k2 * r2 / 10.0);
        }
        for a in 0..3 {
            for b in 0..3 {
                let sym = pv[b] * r[a] + pv[a] * r[b];
                qe[a][b] += sym - rp * (2.0 / 3.0 * delta(a, b))
                    + (rp * (4.0 * r[a] * r[b]) + rp * (2.0 * delta(a, b) * r2) - sym * (5.0 * r2)) * (k2 / 42.0);
                qm[a][b] += (rxp[b] * r[a] + rxp[a] * r[b]) * (1.0 - cqm * k2 * r2);
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..3 {
                    let e = pv[g] * (r[a] * r[b]) + pv[a] * (r[b] * r[g]) + pv[b] * (r[g] * r[a])
                        - (pv[g] * r2 + rp * (2.0 * r[g])) * (delta(a, b) / 5.0)
                        - (pv[a] * r2 + rp * (2.0 * r[a])) * (delta(b, g) / 5.0)
                        - (pv[b] * r2 + rp * (2.0 * r[b])) * (delta(g, a) / 5.0);
                    oe[a][b][g] += e;
                    let mg = rxp[g] * (r[a] * r[b]) + rxp[a] * (r[b] * r[g]) + rxp[b] * (r[g] * r[a])
                        - rxp[g] * (delta(a, b) * r2 / 5.0)
                        - rxp[a] * (delta(b, g) * r2 / 5.0)
                        - rxp[b] * (delta(g, a) * r2 / 5.0);
                    om[a][b][g] += mg;
                }
            }
        }
    }

    let jw = C64::new(0.0, -solution.omega);
    let m = rxp_sum.map(|v| v * jw * 0.5);
    let qm = qm.map(|row| row.map(|v| v * jw / 3.0));
    let om = om.map(|s| s.map(|row| row.map(|v| v * jw / 24.0)));
    Ok(MultipoleSpectrum {
        omega: solution.omega,
        p,
        m,
        qe,
        qm,
        oe,
        om,
        prefactors,
        csca_partial: Partials::default(),
        csca_total: 0.0,
    })
}

fn sum_sq2(t: &CMat3) -> f64 {
    t.iter().flatten().map(|v| v.norm_sqr()).sum()
}

fn sum_sq3(t: &CTensor3) -> f64 {
    t.iter().flatten().flatten().map(|v| v.norm_sqr()).sum()
}

/// Fill the partial and total scattering cross sections.
pub fn cross_sections(mut spectrum: MultipoleSpectrum, amplitude: f64) -> Result<MultipoleSpectrum> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    let k = crate::constants::wavenumber(spectrum.omega);
    let w = spectrum.prefactors.weights();
    let base = 1.0 / (PI * EPS0 * EPS0 * amplitude * amplitude);
    let c2 = C0 * C0;
    let k4 = k.powi(4);
    let k6 = k.powi(6);
    let k8 = k.powi(8);
    let partial = Partials {
        ed: base * k4 / w[0] * cvec_norm_sqr(&spectrum.p),
        md: base * k4 / (w[1] * c2) * cvec_norm_sqr(&spectrum.m),
        eq: base * k6 / w[2] * sum_sq2(&spectrum.qe),
        mq: base * k6 / (w[3] * c2) * sum_sq2(&spectrum.qm),
        eo: base * k8 / w[4] * sum_sq3(&spectrum.oe),
        mo: base * k8 / (w[5] * c2) * sum_sq3(&spectrum.om),
    };
    spectrum.csca_total = partial.sum();
    spectrum.csca_partial = partial;
    Ok(spectrum)
}

/// Far-field amplitude `F(n)` of the induced dipoles, `E_s ~ F exp(ikR)/R`,
/// with phases referenced to the coordinate origin.
pub fn scattered_far_amplitude(solution: &FieldSolution, grid: &VoxelGrid, n: &Vec3) -> CVec3 {
    radiation_amplitude(grid, &solution.polarization, solution.wavenumber(), n)
}

/// `k^2/(4 pi eps0) (I - n n) sum_i P_i exp(-i k n.r_i)`, using the lattice
/// structure to factor the phase into per-axis tables. Grids without
/// lattice indices fall back to direct phases.
pub fn radiation_amplitude(grid: &VoxelGrid, polarization: &[CVec3], k: f64, n: &Vec3) -> CVec3 {
    if grid.is_empty() {
        return [CZERO; 3];
    }
    if grid.indices.len() != grid.centers.len() {
        let mut acc = [CZERO; 3];
        for (c, p) in grid.centers.iter().zip(polarization) {
            let f = crate::green::ed_far_amplitude(n, c, p, k);
            for a in 0..3 {
                acc[a] += f[a];
            }
        }
        return acc;
    }
    let mut lo = [i32::MAX; 3];
    let mut hi = [i32::MIN; 3];
    for idx in &grid.indices {
        for a in 0..3 {
            lo[a] = lo[a].min(idx[a]);
            hi[a] = hi[a].max(idx[a]);
        }
    }
    let tables: Vec<Vec<C64>> = (0..3)
        .map(|a| {
            (lo[a]..=hi[a])
                .map(|i| C64::from_polar(1.0, -k * n[a] * grid.spacing * i as f64))
                .collect()
        })
        .collect();
    let mut s = [CZERO; 3];
    for (idx, p) in grid.indices.iter().zip(polarization) {
        let ph = tables[0][(idx[0] - lo[0]) as usize]
            * tables[1][(idx[1] - lo[1]) as usize]
            * tables[2][(idx[2] - lo[2]) as usize];
        for a in 0..3 {
            s[a] += p[a] * ph;
        }
    }
    let o = &grid.origin;
    let base = C64::from_polar(
        k * k / (4.0 * PI * EPS0),
        -k * (n[0] * o[0] + n[1] * o[1] + n[2] * o[2]),
    );
    let ns = s[0] * n[0] + s[1] * n[1] + s[2] * n[2];
    [
        (s[0] - ns * n[0]) * base,
        (s[1] - ns * n[1]) * base,
        (s[2] - ns * n[2]) * base,
    ]
}

/// Scattering cross section from the far-field Poynting flux.
pub fn far_field_csca(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    amplitude: f64,
    quadrature: &AngularQuadrature,
) -> Result<f64> {
    if !solution.source.is_plane_wave() {
        return Err(Error::NotPlaneWave);
    }
    check_sizes(solution, grid)?;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    let dirs = quadrature.directions();
    let flux: f64 = dirs
        .par_iter()
        .map(|d| d.weight * cvec_norm_sqr(&scattered_far_amplitude(solution, grid, &d.n)))
        .sum();
    Ok(flux / (amplitude * amplitude))
}

/// Full decomposition: moments, partials and the far-field reference.
pub fn decompose(
    solution: &FieldSolution,
    grid: &VoxelGrid,
    prefactors: Prefactors,
    quadrature: &AngularQuadrature,
) -> Result<(MultipoleSpectrum, f64)> {
    let amp = solution.source.amplitude().ok_or(Error::NotPlaneWave)?;
    let spec = cross_sections(moments(solution, grid, prefactors)?, amp)?;
    let ff = far_field_csca(solution, grid, amp, quadrature)?;
    Ok((spec, ff))
}

pub const CSV_HEADER: &str = "omega_over_omega_p,frequency_thz,ED,MD,EQ,MQ,EO,MO,total,farfield_total";

/// One CSV row for a sweep point.
pub fn csv_row(spectrum: &MultipoleSpectrum, omega_p: f64, far_field: f64) -> String {
    let p = spectrum.csca_partial;
    format!(
        "{:.6},{:.6},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
        spectrum.omega / omega_p,
        spectrum.omega / (2.0 * PI) * 1e-12,
        p.ed,
        p.md,
        p.eq,
        p.mq,
        p.eo,
        p.mo,
        spectrum.csca_total,
        far_field
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::wavenumber;
    use crate::solver::Polarizability;
    use crate::source::SourceSpec;
    use crate::tensor::cmat_zero;

    /// A synthetic solution holding arbitrary point dipoles.
    fn dipoles(points: &[(Vec3, CVec3)], omega: f64) -> (FieldSolution, VoxelGrid) {
        let mut grid = VoxelGrid::empty(1e-7);
        grid.material_names.push("x".into());
        for (r, _) in points {
            grid.centers.push(*r);
            grid.material_of.push(0);
        }
        let n = points.len();
        let sol = FieldSolution {
            omega,
            b_z: 0.0,
            source: SourceSpec::plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
            polarization: points.iter().map(|(_, p)| *p).collect(),
            incident_field: vec![[CZERO; 3]; n],
            exciting_field: vec![[CZERO; 3]; n],
            residual: 0.0,
            iterations: 0,
            alphas: vec![Polarizability {
                alpha: cmat_zero(),
                alpha_cm: cmat_zero(),
                alpha_nr_inv: None,
            }],
            material_of: vec![0; n],
        };
        (sol, grid)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    const OMEGA: f64 = 1e13;

    #[test]
    fn single_dipole_at_origin() {
        let p0 = [c(1e-20), C64::new(0.0, 2e-20), c(-3e-21)];
        let (sol, grid) = dipoles(&[([0.0; 3], p0)], OMEGA);
        let s = moments(&sol, &grid, Prefactors::Printed).unwrap();
        assert_eq!(s.p, p0);
        assert_eq!(s.m, [CZERO; 3]);
        assert!(sum_sq2(&s.qe) == 0.0 && sum_sq2(&s.qm) == 0.0);
        assert!(sum_sq3(&s.oe) == 0.0 && sum_sq3(&s.om) == 0.0);
    }

    #[test]
    fn symmetric_pair_has_no_quadrupole() {
        let d = 1e-6;
        let pz = [CZERO, CZERO, c(1e-20)];
        let (sol, grid) = dipoles(&[([d / 2.0, 0.0, 0.0], pz), ([-d / 2.0, 0.0, 0.0], pz)], OMEGA);
        let s = moments(&sol, &grid, Prefactors::Printed).unwrap();
        let k = wavenumber(OMEGA);
        // p = 2 pz (1 - 2 k^2 r^2 / 10 + 3 k^4 r^4 / 280)
        let r2 = d * d / 4.0;
        let expect = 2e-20 * (1.0 - k * k * r2 / 5.0 + 3.0 * k.powi(4) * r2 * r2 / 280.0);
        assert!((s.p[2].re - expect).abs() < 1e-12 * expect);
        assert_eq!(s.m, [CZERO; 3]);
        assert!(sum_sq2(&s.qe) == 0.0);
    }

    #[test]
    fn antisymmetric_pair_is_quadrupolar() {
        let d = 1e-6;
        let pz = [CZERO, CZERO, c(1e-20)];
        let nz = [CZERO, CZERO, c(-1e-20)];
        let (sol, grid) = dipoles(&[([d / 2.0, 0.0, 0.0], pz), ([-d / 2.0, 0.0, 0.0], nz)], OMEGA);
        let s = moments(&sol, &grid, Prefactors::Printed).unwrap();
        assert!(cvec_norm_sqr(&s.p) == 0.0);
        // hand evaluation: Qe_xz = sum x p_z = d * 1e-20; k^2 term -5 r^2 / 42
        let k = wavenumber(OMEGA);
        let r2 = d * d / 4.0;
        let expect = d * 1e-20 * (1.0 - 5.0 * k * k * r2 / 42.0);
        assert!((s.qe[0][2].re - expect).abs() < 1e-12 * expect);
        assert_eq!(s.qe[0][2], s.qe[2][0]);
        let tr = s.qe[0][0] + s.qe[1][1] + s.qe[2][2];
        assert!(tr.norm() <= 1e-10 * sum_sq2(&s.qe).sqrt());
        // m_y = -i omega / 2 * sum (r x p)_y = -i omega / 2 * (-d * 1e-20)
        assert!(
            (s.m[1] - C64::new(0.0, OMEGA * d * 1e-20 / 2.0) * (1.0 - k * k * r2 / 10.0)).norm() < 1e-20 * OMEGA * d
        );
    }

    #[test]
    fn zero_moments_give_zero_cross_sections() {
        let (sol, grid) = dipoles(&[([0.0; 3], [CZERO; 3])], OMEGA);
        let s = cross_sections(moments(&sol, &grid, Prefactors::Printed).unwrap(), 1.0).unwrap();
        assert_eq!(s.csca_total, 0.0);
        assert_eq!(cross_sections(s, 0.0).unwrap_err(), Error::ZeroAmplitude);
    }

    fn ring(z: f64, radius: f64, strength: f64, count: usize) -> Vec<(Vec3, CVec3)> {
        (0..count)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / count as f64;
                let r = [radius * phi.cos(), radius * phi.sin(), z];
                let t = [c(-phi.sin() * strength), c(phi.cos() * strength), CZERO];
                (r, t)
            })
            .collect()
    }

    fn relative_mismatch(points: &[(Vec3, CVec3)], pf: Prefactors) -> f64 {
        let (sol, grid) = dipoles(points, OMEGA);
        let q = AngularQuadrature::new(48, 96);
        let (s, ff) = decompose(&sol, &grid, pf, &q).unwrap();
        (s.csca_total - ff).abs() / ff
    }

    fn size(ka: f64) -> f64 {
        ka / wavenumber(OMEGA)
    }

    #[test]
    fn electric_quadrupole_weight_matches_far_field() {
        let a = size(0.05);
        let pts = [
            ([a, 0.0, 0.0], [CZERO, CZERO, c(1e-20)]),
            ([-a, 0.0, 0.0], [CZERO, CZERO, c(-1e-20)]),
        ];
        assert!(relative_mismatch(&pts, Prefactors::Consistent) < 1e-3);
        assert!(relative_mismatch(&pts, Prefactors::Printed) > 0.1);
    }

    #[test]
    fn magnetic_quadrupole_matches_far_field() {
        let a = size(0.4);
        let mut pts = ring(a, a, 1e-20, 24);
        pts.extend(ring(-a, a, -1e-20, 24));
        let good = relative_mismatch(&pts, Prefactors::Consistent);
        let printed = relative_mismatch(&pts, Prefactors::Printed);
        assert!(good < 2e-3, "{good}");
        assert!(printed > 5.0 * good, "{printed} {good}");
    }

    #[test]
    fn magnetic_octupole_weight_matches_far_field() {
        let a = size(0.05);
        let mut pts = ring(a, a, -1e-20, 24);
        pts.extend(ring(0.0, a, 2e-20, 24));
        pts.extend(ring(-a, a, -1e-20, 24));
        assert!(relative_mismatch(&pts, Prefactors::Consistent) < 1e-2);
        assert!(relative_mismatch(&pts, Prefactors::Printed) > 0.5);
    }

    #[test]
    fn generic_small_cluster_matches_far_field() {
        let a = size(0.3);
        let pts: Vec<(Vec3, CVec3)> = (0..7)
            .map(|i| {
                let t = i as f64;
                let r = [
                    a * (1.3 * t).sin(),
                    a * (0.7 * t + 1.0).cos(),
                    a * (2.1 * t).sin() * 0.8,
                ];
                let p = [
                    C64::new((0.3 * t).cos(), (1.1 * t).sin()) * 1e-20,
                    C64::new((0.9 * t).sin(), 0.2) * 1e-20,
                    C64::new(0.5, (0.4 * t).cos()) * 1e-20,
                ];
                (r, p)
            })
            .collect();
        assert!(relative_mismatch(&pts, Prefactors::Consistent) < 1e-3);
    }

    #[test]
    fn far_field_of_single_dipole() {
        let p0 = [c(1e-20), C64::new(0.0, 2e-20), c(-3e-21)];
        let (sol, grid) = dipoles(&[([0.0; 3], p0)], OMEGA);
        let ff = far_field_csca(&sol, &grid, 1.0, &AngularQuadrature::default()).unwrap();
        let k = wavenumber(OMEGA);
        let expect = k.powi(4) * cvec_norm_sqr(&p0) / (6.0 * PI * EPS0 * EPS0);
        assert!(((ff - expect) / expect).abs() < 1e-4);
    }

    #[test]
    fn far_field_rejects_point_sources() {
        let (mut sol, grid) = dipoles(&[([0.0; 3], [CZERO; 3])], OMEGA);
        sol.source = SourceSpec::point_ed([1e-5, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(
            far_field_csca(&sol, &grid, 1.0, &AngularQuadrature::default()),
            Err(Error::NotPlaneWave)
        );
    }

    #[test]
    fn octupole_traceless() {
        let a = size(0.5);
        let pts: Vec<(Vec3, CVec3)> = (0..5)
            .map(|i| {
                let t = i as f64 + 0.3;
                (
                    [a * t.sin(), a * (2.0 * t).cos(), a * (0.5 * t).sin()],
                    [c(t), c(1.0 - t), C64::new(0.0, t)],
                )
            })
            .collect();
        let (sol, grid) = dipoles(&pts, OMEGA);
        let s = moments(&sol, &grid, Prefactors::Consistent).unwrap();
        let scale = sum_sq3(&s.oe).sqrt();
        for g in 0..3 {
            let tr = s.oe[0][0][g] + s.oe[1][1][g] + s.oe[2][2][g];
            assert!(tr.norm() < 1e-12 * scale);
        }
        let scale = sum_sq3(&s.om).sqrt();
        for g in 0..3 {
            let tr = s.om[0][0][g] + s.om[1][1][g] + s.om[2][2][g];
            assert!(tr.norm() < 1e-12 * scale);
        }
    }
}
