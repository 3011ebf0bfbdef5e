//! Physical constants (CODATA 2018, SI), nine significant figures.

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_63e-19;
/// Electron rest mass (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_70e-31;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_81e-12;
/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m), derived so that `EPS0 * MU0 * C0^2 == 1`.
pub const MU0: f64 = 1.0 / (EPS0 * C0 * C0);
/// Impedance of free space (Ohm).
pub const Z0: f64 = MU0 * C0;

/// Free-space wavenumber for an angular frequency.
#[inline]
pub fn wavenumber(omega: f64) -> f64 {
    omega / C0
}
