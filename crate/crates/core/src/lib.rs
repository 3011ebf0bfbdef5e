//! Coupled-dipole modelling of magnetically biased InSb/Si antennas at THz
//! frequencies: scattering spectra, multipole content, and decay rates of
//! nearby dipole emitters, plus a surrogate-driven placement optimizer.

pub mod app;
pub mod constants;
pub mod emission;
pub mod error;
pub mod geometry;
pub mod green;
pub mod material;
pub mod mie;
pub mod multipole;
pub mod optimizer;
pub mod peaks;
pub mod quadrature;
pub mod scene;
pub mod solver;
pub mod source;
pub mod tensor;

pub use error::{Error, Result};
