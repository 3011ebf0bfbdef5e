//! Mie series for homogeneous isotropic spheres: expansion coefficients,
//! cross sections, and decay rates of dipole emitters outside the sphere.
//!
//! Spherical Bessel functions are carried in scaled form so that orders far
//! beyond the size parameter neither overflow nor underflow:
//!
//! ```text
//! j_n(x) = J_n(x) x^n / (2n+1)!!        (J_n -> 1 as n -> inf)
//! y_n(x) = Y_n(x) (2n-1)!! / x^(n+1)    (Y_n -> -1 as n -> inf)
//! ```
//!
//! Coefficients follow Bohren and Huffman with outgoing `h_n^(1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::wavenumber;
use crate::emission::DecayRates;
use crate::error::{Error, Result};
use crate::tensor::C64;

const MAX_ORDER: usize = 500;
const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct MieCoefficients {
    /// Electric orders `a_1 .. a_L`.
    pub a: Vec<C64>,
    /// Magnetic orders `b_1 .. b_L`.
    pub b: Vec<C64>,
    /// Size parameter `k r`.
    pub x: f64,
    /// Relative refractive index.
    pub m: C64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Radial,
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipoleKind {
    Electric,
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Electric,
    Magnetic,
}

/// `ln(m!!)` for odd `m`, with `(-1)!! = 1`.
fn ln_double_factorial_odd(nmax: usize) -> Vec<f64> {
    // entry n holds ln((2n-1)!!)
    let mut out = vec![0.0; nmax + 2];
    for n in 1..out.len() {
        out[n] = out[n - 1] + ((2 * n - 1) as f64).ln();
    }
    out
}

/// Scaled `J_0 ..= J_nmax` by downward recurrence, normalized on `j_0` or `j_1`.
fn scaled_j(nmax: usize, x: f64) -> Vec<f64> {
    let start = nmax + 30 + x.ceil() as usize;
    let x2 = x * x;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1.0;
    for n in (1..=start).rev() {
        let next = if n < start { vals[n + 1] } else { 0.0 };
        vals[n - 1] = vals[n] - next * x2 / (((2 * n + 1) * (2 * n + 3)) as f64);
        if vals[n - 1].abs() > 1e250 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let j0 = if x < 1e-4 { 1.0 - x2 / 6.0 } else { x.sin() / x };
    let j1 = if x < 1e-3 {
        x / 3.0 - x * x2 / 30.0
    } else {
        x.sin() / x2 - x.cos() / x
    };
    let scale = if j0.abs() > 0.1 {
        j0 / vals[0]
    } else {
        // J_1 = 3 j_1 / x
        3.0 * j1 / x / vals[1]
    };
    vals.truncate(nmax + 1);
    vals.iter_mut().for_each(|v| *v *= scale);
    vals
}

/// Scaled `Y_0 ..= Y_nmax` by upward recurrence.
fn scaled_y(nmax: usize, x: f64) -> Vec<f64> {
    let mut vals = vec![0.0; nmax + 1];
    vals[0] = -x.cos();
    if nmax >= 1 {
        vals[1] = -x.cos() - x * x.sin();
    }
    for n in 1..nmax {
        vals[n + 1] = vals[n] - vals[n - 1] * x * x / (((2 * n + 1) * (2 * n - 1)) as f64);
    }
    vals
}

/// Downward-recurrence logarithmic derivative `D_n(z) = psi_n'(z)/psi_n(z)`.
fn log_derivative(nmax: usize, z: C64) -> Vec<C64> {
    let start = nmax.max(z.norm().ceil() as usize) + 16;
    let mut d = vec![C64::new(0.0, 0.0); start + 1];
    for n in (1..=start).rev() {
        let nz = C64::from(n as f64) / z;
        d[n - 1] = nz - C64::from(1.0) / (d[n] + nz);
    }
    d.truncate(nmax + 1);
    d
}

/// Scaled coefficients `a_n = t_n at_n`, `b_n = t_n bt_n` with
/// `t_n = x^(2n) / ((2n-1)!!)^2`, for `n = 1 ..= nmax`.
struct ScaledCoefficients {
    at: Vec<C64>,
    bt: Vec<C64>,
    ln_t: Vec<f64>,
}

fn scaled_coefficients(m: C64, x: f64, nmax: usize) -> Result<ScaledCoefficients> {
    let jv = scaled_j(nmax, x);
    let yv = scaled_y(nmax, x);
    let d = log_derivative(nmax, m * x);
    let lf = ln_double_factorial_odd(nmax);
    let mut at = vec![C64::new(0.0, 0.0); nmax + 1];
    let mut bt = at.clone();
    let mut ln_t = vec![0.0; nmax + 1];
    for n in 1..=nmax {
        let nf = n as f64;
        ln_t[n] = 2.0 * nf * x.ln() - 2.0 * lf[n];
        let t = ln_t[n].exp();
        let coef = |a: C64| -> C64 {
            let num = a * (jv[n] * x / (2.0 * nf + 1.0)) - jv[n - 1];
            let dy = a * yv[n] - yv[n - 1] * x / (2.0 * nf - 1.0);
            num / (num * t + I * dy)
        };
        at[n] = coef(d[n] / m + nf / x);
        bt[n] = coef(m * d[n] + nf / x);
        if !(at[n].re.is_finite() && at[n].im.is_finite() && bt[n].re.is_finite() && bt[n].im.is_finite()) {
            return Err(Error::NonFinite(n));
        }
    }
    Ok(ScaledCoefficients { at, bt, ln_t })
}

fn refractive_index(eps: C64) -> C64 {
    let m = eps.sqrt();
    if m.im < 0.0 {
        -m
    } else {
        m
    }
}

pub fn mie_coefficients(eps: C64, radius: f64, omega: f64) -> Result<MieCoefficients> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    let k = wavenumber(omega);
    let x = k * radius;
    let m = refractive_index(eps);
    let mut l = (x + 4.0 * x.cbrt() + 2.0).ceil() as usize;
    if eps == C64::new(1.0, 0.0) {
        let zero = vec![C64::new(0.0, 0.0); l];
        return Ok(MieCoefficients {
            a: zero.clone(),
            b: zero,
            x,
            m,
            k,
        });
    }
    loop {
        let s = scaled_coefficients(m, x, l)?;
        let a: Vec<C64> = (1..=l).map(|n| s.at[n] * s.ln_t[n].exp()).collect();
        let b: Vec<C64> = (1..=l).map(|n| s.bt[n] * s.ln_t[n].exp()).collect();
        let lead = a[0].norm() + b[0].norm();
        let tail = a[l - 1].norm() + b[l - 1].norm();
        if tail <= 1e-12 * lead || lead == 0.0 {
            return Ok(MieCoefficients { a, b, x, m, k });
        }
        if l >= MAX_ORDER {
            return Err(Error::SlowConvergence(l));
        }
        l = (l + 4).min(MAX_ORDER);
    }
}

impl MieCoefficients {
    pub fn orders(&self) -> usize {
        self.a.len()
    }

    fn prefactor(&self) -> f64 {
        2.0 * PI / (self.k * self.k)
    }

    pub fn csca(&self) -> f64 {
        sphere_csca_per_order(self).iter().map(|(_, _, v)| v).sum()
    }

    pub fn cext(&self) -> f64 {
        let s: f64 = self
            .a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(i, (a, b))| (2 * i + 3) as f64 * (a + b).re)
            .sum();
        self.prefactor() * s
    }

    /// Scattering amplitudes `S1`, `S2` at scattering angle `theta`.
    pub fn amplitudes(&self, theta: f64) -> (C64, C64) {
        let mu = theta.cos();
        let mut pi_prev = 0.0;
        let mut pi_n = 1.0;
        let mut s1 = C64::new(0.0, 0.0);
        let mut s2 = C64::new(0.0, 0.0);
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            let n = (i + 1) as f64;
            let tau = n * mu * pi_n - (n + 1.0) * pi_prev;
            let f = (2.0 * n + 1.0) / (n * (n + 1.0));
            s1 += (a * pi_n + b * tau) * f;
            s2 += (a * tau + b * pi_n) * f;
            let next = ((2.0 * n + 1.0) * mu * pi_n - (n + 1.0) * pi_prev) / n;
            pi_prev = pi_n;
            pi_n = next;
        }
        (s1, s2)
    }
}

/// Scattering cross section split by order and parity: `(n, parity, C)`.
pub fn sphere_csca_per_order(coeffs: &MieCoefficients) -> Vec<(usize, Parity, f64)> {
    let pre = coeffs.prefactor();
    let mut out = Vec::with_capacity(2 * coeffs.orders());
    for (i, (a, b)) in coeffs.a.iter().zip(&coeffs.b).enumerate() {
        let w = (2 * i + 3) as f64 * pre;
        out.push((i + 1, Parity::Electric, w * a.norm_sqr()));
        out.push((i + 1, Parity::Magnetic, w * b.norm_sqr()));
    }
    out
}

/// Normalized rates of a dipole at distance `gap` from the surface of a
/// sphere centered at the origin, oriented radially or tangentially.
pub fn emitter_rates_near_sphere(
    eps: C64,
    radius: f64,
    gap: f64,
    orientation: Orientation,
    kind: DipoleKind,
    omega: f64,
) -> Result<DecayRates> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::InvalidParameter("gap must be positive".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    let k = wavenumber(omega);
    let x = k * radius;
    let x0 = k * (radius + gap);
    let m = refractive_index(eps);
    if eps == C64::new(1.0, 0.0) {
        return Ok(DecayRates::free_space());
    }

    let mut nmax = (x0 + 4.0 * x0.cbrt() + 10.0).ceil() as usize;
    loop {
        let s = scaled_coefficients(m, x, nmax)?;
        let jv = scaled_j(nmax, x0);
        let yv = scaled_y(nmax, x0);
        let lf = ln_double_factorial_odd(nmax);
        let ratio_ln = (x / x0).ln();

        let mut total = 0.0;
        let mut radiative = 0.0;
        let mut quiet = 0;
        let mut converged = false;
        for n in 1..=nmax {
            let nf = n as f64;
            // h_n(x0) = F_n H_n with F_n = (2n-1)!!/x0^(n+1)
            let ln_s0 = (2.0 * nf + 1.0) * x0.ln() - lf[n + 1] - lf[n];
            let s0 = ln_s0.exp();
            let ln_s0m = (2.0 * nf - 1.0) * x0.ln() - lf[n] - lf[n - 1];
            let h = C64::new(s0 * jv[n], yv[n]);
            let hm = C64::new(ln_s0m.exp() * jv[n - 1], yv[n - 1]);
            // xi_n'(x0)/x0 = h_{n-1} - n h_n / x0, scaled by F_n
            let dxi = hm * (x0 / (2.0 * nf - 1.0)) - h * (nf / x0);
            // j_n(x0) and psi_n'(x0)/x0 in absolute terms
            let jn = jv[n] * (nf * x0.ln() - lf[n + 1]).exp();
            let jnm = jv[n - 1] * ((nf - 1.0) * x0.ln() - lf[n]).exp();
            let dpsi = jnm - nf * jn / x0;
            // a_n h_n = t_n at F_n H: ln(t_n F_n) = 2n ln x - ln(2n-1)!! - (n+1) ln x0
            let ln_tf = 2.0 * nf * x.ln() - lf[n] - (nf + 1.0) * x0.ln();
            let tf = ln_tf.exp();
            let geo = (2.0 * nf * ratio_ln).exp() / (x0 * x0);

            let (ce, cm) = match kind {
                DipoleKind::Electric => (s.at[n], s.bt[n]),
                DipoleKind::Magnetic => (s.bt[n], s.at[n]),
            };
            let (dt, dr) = match orientation {
                Orientation::Radial => {
                    let c = 1.5 * nf * (nf + 1.0) * (2.0 * nf + 1.0);
                    let tot = -c * (ce * h * h).re * geo / (x0 * x0);
                    let amp = C64::from(jn) - ce * h * tf;
                    (tot, c * amp.norm_sqr() / (x0 * x0))
                }
                Orientation::Tangential => {
                    let c = 0.75 * (2.0 * nf + 1.0);
                    let tot = -c * (cm * h * h + ce * dxi * dxi).re * geo;
                    let amp1 = C64::from(jn) - cm * h * tf;
                    let amp2 = C64::from(dpsi) - ce * dxi * tf;
                    (tot, c * (amp1.norm_sqr() + amp2.norm_sqr()))
                }
            };
            if !(dt.is_finite() && dr.is_finite()) {
                return Err(Error::NonFinite(n));
            }
            total += dt;
            radiative += dr;
            let scale = 1.0 + total.abs() + radiative.abs();
            if n as f64 > x0 + 2.0 && dt.abs() < 1e-14 * scale && dr.abs() < 1e-14 * scale {
                quiet += 1;
                if quiet >= 3 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if converged {
            let gamma_tot = 1.0 + total;
            let gamma_r = radiative;
            return Ok(DecayRates::from_normalized(gamma_r, gamma_tot - gamma_r));
        }
        if nmax >= MAX_ORDER {
            return Err(Error::SlowConvergence(nmax));
        }
        nmax = (2 * nmax).min(MAX_ORDER);
    }
}
