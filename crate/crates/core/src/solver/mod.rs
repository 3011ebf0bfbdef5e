//! Coupled-dipole solver for the induced voxel dipole moments.
//!
//! Each voxel `i` carries a dipole moment `P_i` (C m) obeying
//! `P_i = alpha_i [E_inc(r_i) + (k^2/eps0) sum_{j != i} G(r_i, r_j) P_j]`.
//! Small systems are factorized densely; larger ones are solved with
//! restarted GMRES on the Jacobi-scaled system `(I - alpha W) P = alpha E_inc`.

mod gmres;
mod operator;
mod polarizability;

use std::f64::consts::PI;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use rayon::prelude::*;

use crate::constants::{wavenumber, C0, EPS0};
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::green::{ed_magnetic_field, green_tensor_sep};
use crate::material::MaterialTable;
use crate::source::{incident_field, SourceSpec};
use crate::tensor::{cmat_vec, cvec_cdot, cvec_norm_sqr, vsub, CMat3, CVec3, Vec3, C64, CZERO};

pub use gmres::{gmres, gmres_preconditioned, GmresOutcome};
pub use operator::{DirectOperator, FftOperator, Interaction};
pub use polarizability::{polarizability, polarizability_with, Polarizability, Prescription};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense factorization up to `dense_limit` unknowns, GMRES above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorKind {
    #[default]
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Largest unknown count (3N) factorized densely under `Method::Auto`.
    pub dense_limit: usize,
    pub method: Method,
    pub operator: OperatorKind,
    pub prescription: Prescription,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 2000,
            restart: 80,
            dense_limit: 3000,
            method: Method::Auto,
            operator: OperatorKind::Fft,
            prescription: Prescription::ClausiusMossotti,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_prescription(mut self, prescription: Prescription) -> Self {
        self.prescription = prescription;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter("tol must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidParameter("max_iter and restart must be positive".into()));
        }
        Ok(())
    }
}

/// Converged dipole moments for one (frequency, source, bias) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub omega: f64,
    pub b_z: f64,
    pub source: SourceSpec,
    /// Voxel dipole moments (C m).
    pub polarization: Vec<CVec3>,
    pub incident_field: Vec<CVec3>,
    /// Local field `E_inc + W P` at every voxel.
    pub exciting_field: Vec<CVec3>,
    pub residual: f64,
    pub iterations: usize,
    /// Polarizability per material id of the grid.
    pub alphas: Vec<Polarizability>,
    pub material_of: Vec<usize>,
}

impl FieldSolution {
    pub fn len(&self) -> usize {
        self.polarization.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarization.is_empty()
    }

    pub fn wavenumber(&self) -> f64 {
        wavenumber(self.omega)
    }

    /// Current density `J_i = -i omega P_i / V` (A/m^2).
    pub fn current_density(&self, volume: f64) -> Vec<CVec3> {
        let f = C64::new(0.0, -self.omega / volume);
        self.polarization
            .iter()
            .map(|p| [p[0] * f, p[1] * f, p[2] * f])
            .collect()
    }

    /// Time-averaged power absorbed by each voxel (W).
    pub fn voxel_absorption(&self) -> Vec<f64> {
        let k = self.wavenumber();
        let rad = k * k * k / (6.0 * PI * EPS0);
        self.polarization
            .iter()
            .zip(&self.exciting_field)
            .zip(&self.material_of)
            .map(|((p, e), &m)| {
                let a = &self.alphas[m];
                if a.is_zero() {
                    return 0.0;
                }
                match &a.alpha_nr_inv {
                    Some(inv) => 0.5 * self.omega * cvec_cdot(&cmat_vec(inv, p), p).im,
                    None => 0.5 * self.omega * (cvec_cdot(e, p).im - rad * cvec_norm_sqr(p)),
                }
            })
            .collect()
    }

    pub fn absorbed_power(&self) -> f64 {
        self.voxel_absorption().iter().sum()
    }

    /// Extinction cross section from the optical theorem (plane waves only).
    pub fn extinction_cross_section(&self) -> Result<f64> {
        let amp = self.source.amplitude().ok_or(Error::NotPlaneWave)?;
        let k = self.wavenumber();
        let s: f64 = self
            .incident_field
            .iter()
            .zip(&self.polarization)
            .map(|(e, p)| cvec_cdot(e, p).im)
            .sum();
        Ok(k * s / (EPS0 * amp * amp))
    }

    pub fn absorption_cross_section(&self) -> Result<f64> {
        let amp = self.source.amplitude().ok_or(Error::NotPlaneWave)?;
        let intensity = 0.5 * EPS0 * C0 * amp * amp;
        Ok(self.absorbed_power() / intensity)
    }
}

/// A factorized or operator-backed system for one grid, frequency and bias.
/// Reusable across sources.
pub struct System<'a> {
    grid: &'a VoxelGrid,
    omega: f64,
    b_z: f64,
    config: SolverConfig,
    alphas: Vec<Polarizability>,
    dense: Option<PartialPivLu<C64>>,
    op: Box<dyn Interaction + 'a>,
}

impl<'a> System<'a> {
    pub fn new(
        grid: &'a VoxelGrid,
        materials: &MaterialTable,
        omega: f64,
        b_z: f64,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::NonPositiveFrequency(omega));
        }
        let alphas = grid
            .material_names
            .iter()
            .map(|name| {
                let mat = materials
                    .get(name)
                    .ok_or_else(|| Error::UnknownMaterial(name.clone()))?;
                let eps = mat.tensor(omega, b_z)?;
                polarizability_with(&eps.eps, grid.spacing, omega, config.prescription)
            })
            .collect::<Result<Vec<_>>>()?;
        let unknowns = 3 * grid.len();
        let use_dense = match config.method {
            Method::Dense => true,
            Method::Iterative => false,
            Method::Auto => unknowns <= config.dense_limit,
        };
        let op: Box<dyn Interaction> = match config.operator {
            OperatorKind::Fft if !use_dense => Box::new(FftOperator::new(grid, omega)),
            _ => Box::new(DirectOperator::new(grid, omega)),
        };
        let mut sys = Self {
            grid,
            omega,
            b_z,
            config,
            alphas,
            dense: None,
            op,
        };
        if use_dense {
            sys.dense = Some(sys.dense_matrix().partial_piv_lu());
        }
        Ok(sys)
    }

    fn alpha_of(&self, voxel: usize) -> &CMat3 {
        &self.alphas[self.grid.material_of[voxel]].alpha
    }

    fn dense_matrix(&self) -> Mat<C64> {
        let n = self.grid.len();
        let k = wavenumber(self.omega);
        let pref = C64::from(k * k / EPS0);
        let grid = self.grid;
        let alphas = &self.alphas;
        // row-major blocks of -alpha_i G_ij
        let rows: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let al = &alphas[grid.material_of[i]].alpha;
                let mut row = vec![CZERO; 9 * n];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let g = green_tensor_sep(&vsub(&grid.centers[i], &grid.centers[j]), k);
                    for r in 0..3 {
                        for c in 0..3 {
                            let v = al[r][0] * g[0][c] + al[r][1] * g[1][c] + al[r][2] * g[2][c];
                            row[r * 3 * n + 3 * j + c] = -v * pref;
                        }
                    }
                }
                row
            })
            .collect();
        Mat::from_fn(3 * n, 3 * n, |r, c| {
            let v = rows[r / 3][(r % 3) * 3 * n + c];
            if r == c {
                v + 1.0
            } else {
                v
            }
        })
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// `P = alpha E` voxel by voxel, flattened.
    fn scale_by_alpha(&self, e: &[CVec3]) -> Vec<C64> {
        let mut out = Vec::with_capacity(3 * e.len());
        for (i, ei) in e.iter().enumerate() {
            out.extend_from_slice(&cmat_vec(self.alpha_of(i), ei));
        }
        out
    }

    pub fn solve(&mut self, source: &SourceSpec) -> Result<FieldSolution> {
        self.solve_with_guess(source, None)
    }

    /// Solve with an optional initial guess (warm start) for the moments.
    pub fn solve_with_guess(&mut self, source: &SourceSpec, guess: Option<&[CVec3]>) -> Result<FieldSolution> {
        source.validate()?;
        if let Some(pos) = source.position() {
            if self.grid.distance_to_cells(&pos) <= 0.0 {
                return Err(Error::SourceInsideGrid);
            }
        }
        let grid = self.grid;
        let n = grid.len();
        let e_inc = incident_field(source, &grid.centers, self.omega)?;
        let rhs = self.scale_by_alpha(&e_inc);

        let (x, residual, iterations) = if let Some(lu) = &self.dense {
            let b = Mat::from_fn(rhs.len(), 1, |r, _| rhs[r]);
            let sol = lu.solve(&b);
            let x: Vec<C64> = (0..rhs.len()).map(|r| sol[(r, 0)]).collect();
            if let Some(bad) = x.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::NonFinite(bad / 3));
            }
            (x, 0.0, 1)
        } else {
            let mut x = vec![CZERO; 3 * n];
            if let Some(g) = guess.filter(|g| g.len() == n) {
                for (i, v) in g.iter().enumerate() {
                    x[3 * i..3 * i + 3].copy_from_slice(v);
                }
            }
            let alphas: Vec<CMat3> = (0..n).map(|i| *self.alpha_of(i)).collect();
            let mut wx = vec![CZERO; 3 * n];
            let op = &mut self.op;
            let out = gmres(
                |v, y| {
                    op.apply(v, &mut wx);
                    for i in 0..n {
                        let a = &alphas[i];
                        for r in 0..3 {
                            let s = a[r][0] * wx[3 * i] + a[r][1] * wx[3 * i + 1] + a[r][2] * wx[3 * i + 2];
                            y[3 * i + r] = v[3 * i + r] - s;
                        }
                    }
                },
                &rhs,
                &mut x,
                self.config.tol,
                self.config.max_iter,
                self.config.restart,
            );
            if !out.converged {
                return Err(Error::NoConvergence {
                    residual: out.residual,
                    iterations: out.iterations,
                });
            }
            (x, out.residual, out.iterations)
        };

        let mut wx = vec![CZERO; 3 * n];
        self.op.apply(&x, &mut wx);
        let polarization: Vec<CVec3> = x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let exciting_field = e_inc
            .iter()
            .zip(wx.chunks(3))
            .map(|(e, w)| [e[0] + w[0], e[1] + w[1], e[2] + w[2]])
            .collect();
        log::debug!(
            "solve: omega={:.4e} b_z={} voxels={} iterations={} residual={:.2e}",
            self.omega,
            self.b_z,
            n,
            iterations,
            residual
        );
        Ok(FieldSolution {
            omega: self.omega,
            b_z: self.b_z,
            source: *source,
            polarization,
            incident_field: e_inc,
            exciting_field,
            residual,
            iterations,
            alphas: self.alphas.clone(),
            material_of: grid.material_of.clone(),
        })
    }
}

/// One-shot solve.
pub fn solve(
    grid: &VoxelGrid,
    materials: &MaterialTable,
    source: &SourceSpec,
    omega: f64,
    b_z: f64,
    config: &SolverConfig,
) -> Result<FieldSolution> {
    System::new(grid, materials, omega, b_z, *config)?.solve(source)
}

/// Scattered electric field `(k^2/eps0) sum_i G(r, r_i) P_i` at `r`.
pub fn scattered_field(solution: &FieldSolution, grid: &VoxelGrid, r: &Vec3) -> Result<CVec3> {
    check_sizes(solution, grid)?;
    let k = solution.wavenumber();
    let pref = k * k / EPS0;
    let parts: Result<Vec<CVec3>> = grid
        .centers
        .par_iter()
        .zip(&solution.polarization)
        .map(|(c, p)| {
            let d = vsub(r, c);
            if d == [0.0; 3] {
                return Err(Error::SingularPoint);
            }
            Ok(cmat_vec(&green_tensor_sep(&d, k), p))
        })
        .collect();
    let mut acc = [CZERO; 3];
    for v in parts? {
        for a in 0..3 {
            acc[a] += v[a];
        }
    }
    Ok([acc[0] * pref, acc[1] * pref, acc[2] * pref])
}

/// Scattered magnetic field (A/m) at `r`.
pub fn scattered_magnetic_field(solution: &FieldSolution, grid: &VoxelGrid, r: &Vec3) -> Result<CVec3> {
    check_sizes(solution, grid)?;
    let mut acc = [CZERO; 3];
    for (c, p) in grid.centers.iter().zip(&solution.polarization) {
        let h = ed_magnetic_field(r, c, p, solution.omega)?;
        for a in 0..3 {
            acc[a] += h[a];
        }
    }
    Ok(acc)
}

pub(crate) fn check_sizes(solution: &FieldSolution, grid: &VoxelGrid) -> Result<()> {
    if solution.len() != grid.len() {
        return Err(Error::Mismatch {
            solution: solution.len(),
            grid: grid.len(),
        });
    }
    Ok(())
}
