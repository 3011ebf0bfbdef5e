//! Magnetized Drude permittivity of InSb and constant dielectrics.
//!
//! Fields are taken to vary as `exp(-i omega t)`, so passive media have
//! `Im eps >= 0`. The static bias is along `z`; the tensor has the
//! gyrotropic form
//!
//! ```text
//! | exx  exy  0  |
//! | -exy exx  0  |
//! | 0    0    ezz|
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::tensor::{cmat_identity, cmat_scale, cmat_zero, CMat3, C64, CZERO};

/// Where the background permittivity enters the Drude numerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DrudeConvention {
    /// `eps_inf - wp^2 / (w^2 + i g w)`: zero crossing near `wp / sqrt(eps_inf)`.
    VerbatimEq2,
    /// `eps_inf (1 - wp^2 / (w^2 + i g w))`: zero crossing near `wp`.
    #[default]
    ScreenedDrude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub eps_inf: f64,
    /// Plasma frequency (rad/s).
    pub omega_p: f64,
    /// Damping rate (rad/s).
    pub gamma_p: f64,
    /// Effective mass in units of the electron rest mass.
    pub m_eff_ratio: f64,
    #[serde(default)]
    pub convention: DrudeConvention,
}

impl Default for MaterialParams {
    /// n-doped InSb.
    fn default() -> Self {
        let omega_p = 12.56e12;
        Self {
            eps_inf: 15.6,
            omega_p,
            gamma_p: 0.01 * omega_p,
            m_eff_ratio: 0.0142,
            convention: DrudeConvention::ScreenedDrude,
        }
    }
}

impl MaterialParams {
    pub fn with_convention(mut self, convention: DrudeConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.eps_inf >= 1.0) {
            return bad("eps_inf must be >= 1");
        }
        if !(self.omega_p > 0.0 && self.omega_p.is_finite()) {
            return bad("omega_p must be positive");
        }
        if !(self.gamma_p >= 0.0 && self.gamma_p.is_finite()) {
            return bad("gamma_p must be non-negative");
        }
        if !(self.m_eff_ratio > 0.0 && self.m_eff_ratio.is_finite()) {
            return bad("m_eff_ratio must be positive");
        }
        Ok(())
    }

    /// Numerator weight that multiplies every `wp^2` factor.
    fn plasma_weight(&self) -> f64 {
        match self.convention {
            DrudeConvention::VerbatimEq2 => self.omega_p * self.omega_p,
            DrudeConvention::ScreenedDrude => self.eps_inf * self.omega_p * self.omega_p,
        }
    }
}

/// Cyclotron frequency `e B / m*` (rad/s); odd in `b_z`.
pub fn cyclotron_frequency(params: &MaterialParams, b_z: f64) -> f64 {
    ELEMENTARY_CHARGE * b_z / (params.m_eff_ratio * ELECTRON_MASS)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermittivityTensor {
    pub eps: CMat3,
    pub omega: f64,
    pub b_z: f64,
}

impl PermittivityTensor {
    pub fn isotropic(eps: C64, omega: f64) -> Self {
        Self {
            eps: cmat_scale(&cmat_identity(), eps),
            omega,
            b_z: 0.0,
        }
    }

    pub fn xx(&self) -> C64 {
        self.eps[0][0]
    }
    pub fn xy(&self) -> C64 {
        self.eps[0][1]
    }
    pub fn zz(&self) -> C64 {
        self.eps[2][2]
    }

    /// True when the tensor is a multiple of the identity.
    pub fn is_scalar(&self) -> bool {
        let d = self.eps[0][0];
        (0..3).all(|i| {
            (0..3).all(|j| {
                if i == j {
                    self.eps[i][j] == d
                } else {
                    self.eps[i][j] == CZERO
                }
            })
        })
    }

    /// Eigenvalues of the gyrotropic block form: `exx +/- i exy` and `ezz`.
    ///
    /// Falls back to a general Schur decomposition when the tensor is not of
    /// the gyrotropic form.
    pub fn eigenvalues(&self) -> [C64; 3] {
        let e = &self.eps;
        let gyro = e[0][2] == CZERO
            && e[1][2] == CZERO
            && e[2][0] == CZERO
            && e[2][1] == CZERO
            && e[0][0] == e[1][1]
            && e[0][1] == -e[1][0];
        if gyro {
            let i = C64::new(0.0, 1.0);
            return [e[0][0] + i * e[0][1], e[0][0] - i * e[0][1], e[2][2]];
        }
        let m = nalgebra::Matrix3::from_fn(|r, c| e[r][c]);
        let ev = nalgebra::Schur::new(m).eigenvalues().unwrap_or_else(|| m.diagonal());
        [ev[0], ev[1], ev[2]]
    }

    /// `eps - eps^H` over `2i`: the dissipative part, Hermitian.
    pub fn loss_part(&self) -> CMat3 {
        let mut out = cmat_zero();
        let two_i = C64::new(0.0, 2.0);
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] = (self.eps[r][c] - self.eps[c][r].conj()) / two_i;
            }
        }
        out
    }
}

/// Gyroelectric Drude tensor at angular frequency `omega` and bias `b_z`.
pub fn permittivity(params: &MaterialParams, omega: f64, b_z: f64) -> Result<PermittivityTensor> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    if !b_z.is_finite() {
        return Err(Error::InvalidParameter("b_z must be finite".into()));
    }
    let wp2 = params.plasma_weight();
    let wc = cyclotron_frequency(params, b_z);
    let einf = C64::from(params.eps_inf);
    let d = C64::new(omega * omega, params.gamma_p * omega);
    let gyro_den = d * d - wc * wc * omega * omega;

    let ezz = einf - wp2 / d;
    let exx = einf - (d * wp2) / gyro_den;
    let q = (wp2 * wc * omega) / gyro_den;
    let exy = C64::new(q.im, -q.re); // -i q
    let eyx = -exy;

    let mut eps = cmat_zero();
    eps[0][0] = exx;
    eps[1][1] = exx;
    eps[2][2] = ezz;
    eps[0][1] = exy;
    eps[1][0] = eyx;
    if b_z == 0.0 {
        // omega_c = 0 gives exx == ezz analytically; pin it exactly
        eps[0][0] = ezz;
        eps[1][1] = ezz;
        eps[0][1] = CZERO;
        eps[1][0] = CZERO;
    }
    Ok(PermittivityTensor { eps, omega, b_z })
}

/// Frequency where `Re eps_zz` changes sign, by bisection on `[0.01 wp, 3 wp]`.
pub fn plasma_crossover(params: &MaterialParams) -> Result<f64> {
    let lo0 = 0.01 * params.omega_p;
    let hi0 = 3.0 * params.omega_p;
    let f = |w: f64| -> Result<f64> { Ok(permittivity(params, w, 0.0)?.zz().re) };
    let (mut lo, mut hi) = (lo0, hi0);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::NoCrossing { lo: lo0, hi: hi0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Materials keyed by the names used in shapes and voxel grids.
pub type MaterialTable = BTreeMap<String, Material>;

/// A named material as referenced by voxels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Drude(MaterialParams),
    Constant(C64),
}

impl Material {
    pub fn silicon() -> Self {
        Material::Constant(C64::new(10.6, 0.0))
    }

    pub fn insb() -> Self {
        Material::Drude(MaterialParams::default())
    }

    pub fn tensor(&self, omega: f64, b_z: f64) -> Result<PermittivityTensor> {
        match self {
            Material::Drude(p) => permittivity(p, omega, b_z),
            Material::Constant(e) => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(Error::NonPositiveFrequency(omega));
                }
                Ok(PermittivityTensor::isotropic(*e, omega))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Material::Drude(p) => p.validate(),
            Material::Constant(e) => {
                if !(e.re.is_finite() && e.im.is_finite()) {
                    return Err(Error::InvalidParameter("permittivity must be finite".into()));
                }
                if e.im < 0.0 {
                    return Err(Error::InvalidParameter("Im eps < 0 describes a gain medium".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_isotropic_constant(&self) -> Option<C64> {
        match self {
            Material::Constant(e) => Some(*e),
            Material::Drude(_) => None,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Material::Constant(e) if *e == C64::new(1.0, 0.0))
    }
}
