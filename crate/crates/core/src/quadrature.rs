//! Product quadrature on the unit sphere of directions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::tensor::Vec3;

/// Gauss-Legendre in `cos(theta)` times uniform azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngularQuadrature {
    pub polar: usize,
    pub azimuthal: usize,
}

impl Default for AngularQuadrature {
    fn default() -> Self {
        Self {
            polar: 32,
            azimuthal: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub n: Vec3,
    pub theta: f64,
    pub phi: f64,
    /// Solid-angle weight; weights sum to 4 pi.
    pub weight: f64,
}

impl AngularQuadrature {
    pub fn new(polar: usize, azimuthal: usize) -> Self {
        Self {
            polar: polar.max(1),
            azimuthal: azimuthal.max(1),
        }
    }

    /// Halved angular step in both directions.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.polar, 2 * self.azimuthal)
    }

    pub fn directions(&self) -> Vec<Direction> {
        let (x, w) = gauss_legendre(self.polar);
        let dphi = 2.0 * PI / self.azimuthal as f64;
        let mut out = Vec::with_capacity(self.polar * self.azimuthal);
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            let theta = ct.acos();
            for j in 0..self.azimuthal {
                let phi = (j as f64 + 0.5) * dphi;
                out.push(Direction {
                    n: [st * phi.cos(), st * phi.sin(), *ct],
                    theta,
                    phi,
                    weight: wt * dphi,
                });
            }
        }
        out
    }

    /// Integrate `f` over the sphere of directions.
    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        self.directions().iter().map(|d| d.weight * f(&d.n)).sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
