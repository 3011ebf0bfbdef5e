//! Genetic search for the emitter position (and optionally frequency) that
//! maximizes a rate predictor on the offset surface.

use serde::{Deserialize, Serialize};

use super::ga::{maximize_unit_box, GAConfig};
use super::{EmitterKind, SampleRecord};
use crate::error::{Error, Result};
use crate::geometry::OffsetSurface;
use crate::tensor::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementSpec {
    pub surface: OffsetSurface,
    pub kind: EmitterKind,
    pub b_z: f64,
    /// A zero-width band fixes the frequency.
    pub omega_band: (f64, f64),
    pub u_range: (f64, f64),
    pub phi_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub u: f64,
    pub phi: f64,
    pub omega: f64,
    pub position: Vec3,
    pub predicted: f64,
    pub verified: Option<f64>,
    /// Best predicted value after each generation.
    pub trace: Vec<f64>,
}

impl PlacementSpec {
    fn searches_frequency(&self) -> bool {
        self.omega_band.1 > self.omega_band.0
    }

    fn decode(&self, g: &[f64]) -> (f64, f64, f64) {
        let lerp = |(a, b): (f64, f64), t: f64| a + (b - a) * t;
        let omega = if self.searches_frequency() {
            lerp(self.omega_band, g[2])
        } else {
            self.omega_band.0
        };
        (lerp(self.u_range, g[0]), lerp(self.phi_range, g[1]), omega)
    }

    fn encode(&self, u: f64, phi: f64, omega: f64) -> Vec<f64> {
        let inv = |(a, b): (f64, f64), v: f64| if b > a { (v - a) / (b - a) } else { 0.0 };
        let mut g = vec![inv(self.u_range, u), inv(self.phi_range, phi)];
        if self.searches_frequency() {
            g.push(inv(self.omega_band, omega));
        }
        g
    }
}

/// Maximizes `predict(position, omega)`. Matching dataset records (same
/// emitter kind and bias) seed the initial population; `verify`, when
/// given, re-evaluates the winner with the full solver.
pub fn optimize_placement<P, V>(
    spec: &PlacementSpec,
    ga: &GAConfig,
    predict: P,
    seeds: &[SampleRecord],
    verify: Option<V>,
) -> Result<PlacementResult>
where
    P: Fn(&Vec3, f64) -> f64 + Sync,
    V: FnOnce(&Vec3, f64) -> Result<f64>,
{
    if spec.u_range.0 > spec.u_range.1 || spec.phi_range.0 > spec.phi_range.1 || spec.omega_band.0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "placement ranges must be ordered and frequencies positive".into(),
        ));
    }
    let dims = if spec.searches_frequency() { 3 } else { 2 };
    let mut ranked: Vec<&SampleRecord> = seeds
        .iter()
        .filter(|r| r.emitter_kind == spec.kind && r.b_z == spec.b_z)
        .collect();
    ranked.sort_by(|a, b| b.target.total_cmp(&a.target));
    let seed_genes: Vec<Vec<f64>> = ranked
        .iter()
        .take(ga.population / 2)
        .map(|r| {
            let (u, phi) = spec.surface.locate(&r.position);
            spec.encode(u, phi, r.omega)
        })
        .collect();
    let out = maximize_unit_box(dims, ga, &seed_genes, |g| {
        let (u, phi, omega) = spec.decode(g);
        predict(&spec.surface.point(u, phi).position, omega)
    })?;
    let (u, phi, omega) = spec.decode(&out.best);
    let position = spec.surface.point(u, phi).position;
    let verified = match verify {
        Some(v) => Some(v(&position, omega)?),
        None => None,
    };
    Ok(PlacementResult {
        u,
        phi,
        omega,
        position,
        predicted: out.best_fitness,
        verified,
        trace: out.trace,
    })
}
