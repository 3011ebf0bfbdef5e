//! Solver-generated training samples on an offset surface.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EmitterKind, SampleRecord};
use crate::emission::analyze_with_system;
use crate::error::{Error, Result};
use crate::geometry::{OffsetSurface, VoxelGrid};
use crate::material::MaterialTable;
use crate::quadrature::AngularQuadrature;
use crate::solver::{SolverConfig, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GammaR,
    GammaNr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampling {
    /// Cell-centred `u` values, evenly spaced azimuths, evenly spaced
    /// frequencies (both ends included when `omega > 1`).
    Grid {
        u: usize,
        phi: usize,
        omega: usize,
    },
    LatinHypercube {
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub sampling: Sampling,
    /// Meridian range on the offset surface, within `[0, 1]`.
    pub u_range: (f64, f64),
    /// Azimuth range (rad).
    pub phi_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub b_z: Vec<f64>,
    pub kinds: Vec<EmitterKind>,
    pub target: TargetKind,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.kinds.is_empty() || self.b_z.is_empty() {
            return bad("dataset needs at least one emitter kind and one bias value");
        }
        let (u0, u1) = self.u_range;
        if !(0.0 <= u0 && u0 <= u1 && u1 <= 1.0) {
            return bad("u range must lie within [0, 1]");
        }
        if self.phi_range.1 < self.phi_range.0 || self.omega_range.1 < self.omega_range.0 || self.omega_range.0 <= 0.0 {
            return bad("sweep ranges must be non-empty and frequencies positive");
        }
        match self.sampling {
            Sampling::Grid { u, phi, omega } if u == 0 || phi == 0 || omega == 0 => {
                bad("grid sampling counts must be positive")
            }
            Sampling::LatinHypercube { count: 0 } => bad("sample count must be positive"),
            _ => Ok(()),
        }
    }

    /// Design points as `(u, phi, omega, b_z, kind)`, before solving.
    pub fn design(&self) -> Vec<(f64, f64, f64, f64, EmitterKind)> {
        let lerp = |(a, b): (f64, f64), t: f64| a + (b - a) * t;
        let mut out = Vec::new();
        match self.sampling {
            Sampling::Grid { u, phi, omega } => {
                let full_circle = (self.phi_range.1 - self.phi_range.0 - 2.0 * PI).abs() < 1e-12;
                for &b in &self.b_z {
                    for &k in &self.kinds {
                        for iw in 0..omega {
                            let tw = if omega > 1 { iw as f64 / (omega - 1) as f64 } else { 0.5 };
                            for iu in 0..u {
                                for ip in 0..phi {
                                    let tp = if full_circle || phi == 1 {
                                        ip as f64 / phi as f64
                                    } else {
                                        ip as f64 / (phi - 1) as f64
                                    };
                                    out.push((
                                        lerp(self.u_range, (iu as f64 + 0.5) / u as f64),
                                        lerp(self.phi_range, tp),
                                        lerp(self.omega_range, tw),
                                        b,
                                        k,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            Sampling::LatinHypercube { count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let strata = |rng: &mut ChaCha8Rng| {
                    let mut s: Vec<usize> = (0..count).collect();
                    s.shuffle(rng);
                    s.into_iter()
                        .map(|i| (i as f64 + rng.gen_range(0.0..1.0)) / count as f64)
                        .collect::<Vec<f64>>()
                };
                let (su, sp, sw) = (strata(&mut rng), strata(&mut rng), strata(&mut rng));
                let nk = self.kinds.len();
                for i in 0..count {
                    out.push((
                        lerp(self.u_range, su[i]),
                        lerp(self.phi_range, sp[i]),
                        lerp(self.omega_range, sw[i]),
                        self.b_z[(i / nk) % self.b_z.len()],
                        self.kinds[i % nk],
                    ));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub records: Vec<SampleRecord>,
    /// Design index and error message of every skipped point.
    pub skipped: Vec<(usize, String)>,
}

/// Solves every design point. Points sharing a frequency and bias reuse one
/// assembled system; groups run in parallel and records come back in
/// design order.
pub fn generate_dataset(
    spec: &DatasetSpec,
    surface: &OffsetSurface,
    grid: &VoxelGrid,
    materials: &MaterialTable,
    quadrature: &AngularQuadrature,
    config: &SolverConfig,
) -> Result<DatasetReport> {
    spec.validate()?;
    let design = spec.design();
    let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (i, d) in design.iter().enumerate() {
        groups.entry((d.2.to_bits(), d.3.to_bits())).or_default().push(i);
    }
    let solved: Vec<Vec<(usize, std::result::Result<SampleRecord, String>)>> = groups
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|members| {
            let (_, _, omega, b_z, _) = design[members[0]];
            let mut sys = match System::new(grid, materials, omega, b_z, *config) {
                Ok(s) => s,
                Err(e) => return members.iter().map(|&i| (i, Err(e.to_string()))).collect(),
            };
            members
                .iter()
                .map(|&i| {
                    let (u, phi, _, _, kind) = design[i];
                    let position = surface.point(u, phi).position;
                    let res = analyze_with_system(&mut sys, grid, &kind.source(position), quadrature, None)
                        .map(|(a, _)| SampleRecord {
                            position,
                            omega,
                            b_z,
                            emitter_kind: kind,
                            target: match spec.target {
                                TargetKind::GammaR => a.rates.gamma_r,
                                TargetKind::GammaNr => a.rates.gamma_nr,
                            },
                        })
                        .map_err(|e| e.to_string());
                    (i, res)
                })
                .collect()
        })
        .collect();
    let mut all: Vec<_> = solved.into_iter().flatten().collect();
    all.sort_by_key(|(i, _)| *i);
    let mut records = Vec::with_capacity(all.len());
    let mut skipped = Vec::new();
    for (i, r) in all {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("dataset point {i} skipped: {e}");
                skipped.push((i, e));
            }
        }
    }
    Ok(DatasetReport { records, skipped })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x_m: f64,
    y_m: f64,
    z_m: f64,
    omega_rad_s: f64,
    b_z_t: f64,
    kind: EmitterKind,
    target: f64,
}

pub fn write_records_csv<W: Write>(w: W, records: &[SampleRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(CsvRow {
            x_m: r.position[0],
            y_m: r.position[1],
            z_m: r.position[2],
            omega_rad_s: r.omega,
            b_z_t: r.b_z,
            kind: r.emitter_kind,
            target: r.target,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<SampleRecord>> {
    csv::Reader::from_reader(r)
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::Io(e.to_string()))?;
            Ok(SampleRecord {
                position: [row.x_m, row.y_m, row.z_m],
                omega: row.omega_rad_s,
                b_z: row.b_z_t,
                emitter_kind: row.kind,
                target: row.target,
            })
        })
        .collect()
}
