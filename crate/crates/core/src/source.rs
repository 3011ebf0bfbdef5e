//! Excitation sources and their incident fields.

use serde::{Deserialize, Serialize};

use crate::constants::wavenumber;
use crate::error::{Error, Result};
use crate::green::{ed_electric_field, ed_magnetic_field, md_electric_field, md_magnetic_field};
use crate::tensor::{real_to_cvec, vdot, vnorm, vscale, CVec3, Vec3, C64};

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceSpec {
    PlaneWave {
        /// Unit propagation direction.
        propagation: Vec3,
        /// Unit polarization, perpendicular to `propagation`.
        polarization: Vec3,
        /// Field amplitude (V/m).
        amplitude: f64,
    },
    /// Electric point dipole; `magnitude` in C m.
    PointEd {
        position: Vec3,
        direction: Vec3,
        magnitude: f64,
    },
    /// Magnetic point dipole; `magnitude` in A m^2.
    PointMd {
        position: Vec3,
        direction: Vec3,
        magnitude: f64,
    },
}

impl SourceSpec {
    pub fn plane_wave(propagation: Vec3, polarization: Vec3) -> Self {
        SourceSpec::PlaneWave {
            propagation,
            polarization,
            amplitude: 1.0,
        }
    }

    pub fn point_ed(position: Vec3, direction: Vec3) -> Self {
        SourceSpec::PointEd {
            position,
            direction,
            magnitude: 1e-20,
        }
    }

    pub fn point_md(position: Vec3, direction: Vec3) -> Self {
        SourceSpec::PointMd {
            position,
            direction,
            magnitude: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: &Vec3, what: &str| {
            if (vnorm(v) - 1.0).abs() > UNIT_TOL {
                Err(Error::InvalidParameter(format!("{what} must be a unit vector")))
            } else {
                Ok(())
            }
        };
        match self {
            SourceSpec::PlaneWave {
                propagation,
                polarization,
                amplitude,
            } => {
                unit(propagation, "propagation")?;
                unit(polarization, "polarization")?;
                if vdot(propagation, polarization).abs() > UNIT_TOL {
                    return Err(Error::InvalidParameter(
                        "polarization must be perpendicular to propagation".into(),
                    ));
                }
                if !amplitude.is_finite() {
                    return Err(Error::InvalidParameter("amplitude must be finite".into()));
                }
                if *amplitude == 0.0 {
                    return Err(Error::ZeroAmplitude);
                }
            }
            SourceSpec::PointEd {
                position,
                direction,
                magnitude,
            }
            | SourceSpec::PointMd {
                position,
                direction,
                magnitude,
            } => {
                unit(direction, "dipole direction")?;
                if !position.iter().all(|p| p.is_finite()) {
                    return Err(Error::InvalidParameter("position must be finite".into()));
                }
                if !(magnitude.is_finite() && *magnitude != 0.0) {
                    return Err(Error::InvalidParameter("dipole magnitude must be non-zero".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_plane_wave(&self) -> bool {
        matches!(self, SourceSpec::PlaneWave { .. })
    }

    pub fn position(&self) -> Option<Vec3> {
        match self {
            SourceSpec::PlaneWave { .. } => None,
            SourceSpec::PointEd { position, .. } | SourceSpec::PointMd { position, .. } => Some(*position),
        }
    }

    /// Complex dipole moment vector of a point source.
    pub fn moment(&self) -> Option<CVec3> {
        match self {
            SourceSpec::PlaneWave { .. } => None,
            SourceSpec::PointEd {
                direction, magnitude, ..
            }
            | SourceSpec::PointMd {
                direction, magnitude, ..
            } => Some(real_to_cvec(&vscale(direction, *magnitude))),
        }
    }

    /// Scales the source strength (amplitude or dipole magnitude).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = *self;
        match &mut s {
            SourceSpec::PlaneWave { amplitude, .. } => *amplitude *= factor,
            SourceSpec::PointEd { magnitude, .. } | SourceSpec::PointMd { magnitude, .. } => *magnitude *= factor,
        }
        s
    }

    pub fn amplitude(&self) -> Option<f64> {
        match self {
            SourceSpec::PlaneWave { amplitude, .. } => Some(*amplitude),
            _ => None,
        }
    }

    /// Point source relocated to `pos`; plane waves are returned unchanged.
    pub fn with_position(&self, pos: Vec3) -> Self {
        let mut s = *self;
        match &mut s {
            SourceSpec::PlaneWave { .. } => {}
            SourceSpec::PointEd { position, .. } | SourceSpec::PointMd { position, .. } => *position = pos,
        }
        s
    }

    /// Electric field of the source alone at `r`.
    pub fn electric_field_at(&self, r: &Vec3, omega: f64) -> Result<CVec3> {
        match self {
            SourceSpec::PlaneWave {
                propagation,
                polarization,
                amplitude,
            } => {
                let k = wavenumber(omega);
                let ph = C64::from_polar(*amplitude, k * vdot(propagation, r));
                Ok([ph * polarization[0], ph * polarization[1], ph * polarization[2]])
            }
            SourceSpec::PointEd { position, .. } => ed_electric_field(r, position, &self.moment().unwrap(), omega),
            SourceSpec::PointMd { position, .. } => md_electric_field(r, position, &self.moment().unwrap(), omega),
        }
    }

    /// Magnetic field of a point source alone at `r`.
    pub fn magnetic_field_at(&self, r: &Vec3, omega: f64) -> Result<CVec3> {
        match self {
            SourceSpec::PlaneWave { .. } => Err(Error::NotPointSource),
            SourceSpec::PointEd { position, .. } => ed_magnetic_field(r, position, &self.moment().unwrap(), omega),
            SourceSpec::PointMd { position, .. } => md_magnetic_field(r, position, &self.moment().unwrap(), omega),
        }
    }
}

/// Incident electric field of `source` at every point.
pub fn incident_field(source: &SourceSpec, points: &[Vec3], omega: f64) -> Result<Vec<CVec3>> {
    source.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    points.iter().map(|p| source.electric_field_at(p, omega)).collect()
}
