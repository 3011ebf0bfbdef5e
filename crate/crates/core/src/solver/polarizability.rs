//! Per-voxel polarizability from the local permittivity tensor.

use std::f64::consts::PI;

use crate::constants::{wavenumber, EPS0};
use crate::error::{Error, Result};
use crate::tensor::{
    cmat_add, cmat_det, cmat_identity, cmat_inverse, cmat_mul, cmat_scale, cmat_sub, cmat_zero, CMat3, C64,
};

const MIN_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarizability {
    /// Radiative-reaction corrected tensor (C m^2 / V).
    pub alpha: CMat3,
    /// Bare Clausius-Mossotti tensor.
    pub alpha_cm: CMat3,
    /// `alpha^-1 + i k^3/(6 pi eps0)` when it exists; its anti-Hermitian
    /// part gives the absorbed power.
    pub alpha_nr_inv: Option<CMat3>,
}

impl Polarizability {
    pub fn is_zero(&self) -> bool {
        self.alpha.iter().flatten().all(|v| *v == C64::new(0.0, 0.0))
    }
}

/// Lattice-dispersion coefficients for a cubic lattice.
const LDR_B1: f64 = -1.891_531_6;
const LDR_B2: f64 = 0.164_846_9;

/// How the bare cell polarizability is dressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prescription {
    /// Clausius-Mossotti with radiative reaction.
    #[default]
    ClausiusMossotti,
    /// Adds the `(kd)^2` lattice-dispersion term (polarization-averaged,
    /// no propagation-direction term) on top of the radiative reaction.
    LatticeDispersion,
}

/// Clausius-Mossotti polarizability `3 eps0 V (eps - I)(eps + 2I)^-1` of a
/// cubic cell with the radiative correction
/// `alpha = alpha_cm (I - i k^3/(6 pi eps0) alpha_cm)^-1`.
pub fn polarizability(eps: &CMat3, spacing: f64, omega: f64) -> Result<Polarizability> {
    polarizability_with(eps, spacing, omega, Prescription::ClausiusMossotti)
}

pub fn polarizability_with(
    eps: &CMat3,
    spacing: f64,
    omega: f64,
    prescription: Prescription,
) -> Result<Polarizability> {
    if !eps.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidParameter("permittivity must be finite".into()));
    }
    let id = cmat_identity();
    let plus = cmat_add(eps, &cmat_scale(&id, C64::from(2.0)));
    let det = cmat_det(&plus);
    let plus_inv = cmat_inverse(&plus, MIN_DET).ok_or(Error::SingularDenominator(det.norm()))?;
    let minus = cmat_sub(eps, &id);
    let volume = spacing * spacing * spacing;
    let alpha_cm = cmat_scale(&cmat_mul(&minus, &plus_inv), C64::from(3.0 * EPS0 * volume));

    let k = wavenumber(omega);
    // alpha^-1 = alpha_cm^-1 - lattice - i k^3/(6 pi eps0)
    let lattice = match prescription {
        Prescription::ClausiusMossotti => cmat_zero(),
        Prescription::LatticeDispersion => {
            let dressed = cmat_add(&cmat_scale(&id, C64::from(LDR_B1)), &cmat_scale(eps, C64::from(LDR_B2)));
            cmat_scale(&dressed, C64::from(k * k / (4.0 * PI * EPS0 * spacing)))
        }
    };
    let rad = cmat_scale(&id, C64::new(0.0, k * k * k / (6.0 * PI * EPS0)));
    let corr = cmat_sub(&id, &cmat_mul(&cmat_add(&lattice, &rad), &alpha_cm));
    let corr_inv = cmat_inverse(&corr, 1e-300).ok_or(Error::SingularDenominator(cmat_det(&corr).norm()))?;
    let alpha = cmat_mul(&alpha_cm, &corr_inv);

    // alpha_cm^-1 = (eps + 2I)(eps - I)^-1 / (3 eps0 V); relative singularity test on eps - I
    let scale = minus.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let alpha_nr_inv = if scale > 0.0 {
        let unit = cmat_scale(&minus, C64::from(1.0 / scale));
        cmat_inverse(&unit, 1e-9).map(|u_inv| {
            let minus_inv = cmat_scale(&u_inv, C64::from(1.0 / scale));
            let cm_inv = cmat_scale(&cmat_mul(&plus, &minus_inv), C64::from(1.0 / (3.0 * EPS0 * volume)));
            cmat_sub(&cm_inv, &lattice)
        })
    } else {
        None
    };
    Ok(Polarizability {
        alpha,
        alpha_cm,
        alpha_nr_inv,
    })
}
