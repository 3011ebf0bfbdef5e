//! Free-space dyadic Green tensor and closed-form point-dipole fields
//! (`exp(-i omega t)`).

use std::f64::consts::PI;

use crate::constants::{wavenumber, C0, EPS0, Z0};
use crate::error::{Error, Result};
use crate::tensor::{cmat_vec, cvec_scale, rcross, rdot, vnorm, vscale, vsub, CMat3, CVec3, Vec3, C64, CZERO};

/// `G(R) = [I + grad grad / k^2] exp(ikR) / (4 pi R)` for separation `rvec`.
///
/// The caller guarantees `rvec != 0`.
#[inline]
pub fn green_tensor_sep(rvec: &Vec3, k: f64) -> CMat3 {
    let r2 = rvec[0] * rvec[0] + rvec[1] * rvec[1] + rvec[2] * rvec[2];
    let r = r2.sqrt();
    let kr = k * r;
    let kr2 = kr * kr;
    let (s, c) = kr.sin_cos();
    let g = C64::new(c, s) / (4.0 * PI * r);
    let ikr = C64::new(0.0, kr);
    let a = g * (1.0 + (ikr - 1.0) / kr2);
    let b = g * ((3.0 - 3.0 * ikr - kr2) / kr2);
    let n = [rvec[0] / r, rvec[1] / r, rvec[2] / r];
    let mut out = [[CZERO; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut v = b * (n[i] * n[j]);
            if i == j {
                v += a;
            }
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

pub fn green_tensor(r: &Vec3, r_src: &Vec3, omega: f64) -> Result<CMat3> {
    let rvec = vsub(r, r_src);
    if vnorm(&rvec) == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(green_tensor_sep(&rvec, wavenumber(omega)))
}

fn separation(r: &Vec3, r_src: &Vec3) -> Result<(Vec3, f64)> {
    let rvec = vsub(r, r_src);
    let d = vnorm(&rvec);
    if d == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok((vscale(&rvec, 1.0 / d), d))
}

/// `exp(ikR)/R * (1 - 1/(ikR))`
#[inline]
fn curl_radial(k: f64, d: f64) -> C64 {
    let kr = k * d;
    let (s, c) = kr.sin_cos();
    C64::new(c, s) / d * (1.0 - 1.0 / C64::new(0.0, kr))
}

/// Electric field of an electric dipole `p` at `r_src`: `(k^2/eps0) G p`.
pub fn ed_electric_field(r: &Vec3, r_src: &Vec3, p: &CVec3, omega: f64) -> Result<CVec3> {
    let k = wavenumber(omega);
    let g = green_tensor(r, r_src, omega)?;
    Ok(cvec_scale(&cmat_vec(&g, p), C64::from(k * k / EPS0)))
}

/// Magnetic field of an electric dipole: `c k^2/(4 pi) (n x p) e^{ikR}/R (1 - 1/(ikR))`.
pub fn ed_magnetic_field(r: &Vec3, r_src: &Vec3, p: &CVec3, omega: f64) -> Result<CVec3> {
    let k = wavenumber(omega);
    let (n, d) = separation(r, r_src)?;
    let f = curl_radial(k, d) * (C0 * k * k / (4.0 * PI));
    Ok(cvec_scale(&rcross(&n, p), f))
}

/// Electric field of a magnetic dipole `m` (A m^2):
/// `-(Z0 k^2/(4 pi)) (n x m) e^{ikR}/R (1 - 1/(ikR))`.
pub fn md_electric_field(r: &Vec3, r_src: &Vec3, m: &CVec3, omega: f64) -> Result<CVec3> {
    let k = wavenumber(omega);
    let (n, d) = separation(r, r_src)?;
    let f = curl_radial(k, d) * (-Z0 * k * k / (4.0 * PI));
    Ok(cvec_scale(&rcross(&n, m), f))
}

/// Magnetic field of a magnetic dipole: `k^2 G m`.
pub fn md_magnetic_field(r: &Vec3, r_src: &Vec3, m: &CVec3, omega: f64) -> Result<CVec3> {
    let k = wavenumber(omega);
    let g = green_tensor(r, r_src, omega)?;
    Ok(cvec_scale(&cmat_vec(&g, m), C64::from(k * k)))
}

/// Far-field amplitude `F` (V) with `E ~ F exp(ikR)/R` along unit direction
/// `n`, for an electric dipole at `r_src` with phase referenced to the origin.
#[inline]
pub fn ed_far_amplitude(n: &Vec3, r_src: &Vec3, p: &CVec3, k: f64) -> CVec3 {
    let np = rdot(n, p);
    let phase = -k * (n[0] * r_src[0] + n[1] * r_src[1] + n[2] * r_src[2]);
    let f = C64::from_polar(k * k / (4.0 * PI * EPS0), phase);
    [(p[0] - np * n[0]) * f, (p[1] - np * n[1]) * f, (p[2] - np * n[2]) * f]
}

/// Far-field amplitude of a magnetic dipole: `-(k^2/(4 pi eps0 c)) (n x m)`.
#[inline]
pub fn md_far_amplitude(n: &Vec3, r_src: &Vec3, m: &CVec3, k: f64) -> CVec3 {
    let phase = -k * (n[0] * r_src[0] + n[1] * r_src[1] + n[2] * r_src[2]);
    let f = C64::from_polar(-k * k / (4.0 * PI * EPS0 * C0), phase);
    cvec_scale(&rcross(n, m), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{cvec_norm_sqr, real_to_cvec};

    const OMEGA: f64 = 12.56e12;

    #[test]
    fn reciprocity() {
        let a = [1e-6, -3e-6, 2e-5];
        let b = [-4e-6, 7e-6, -1e-6];
        let g1 = green_tensor(&a, &b, OMEGA).unwrap();
        let g2 = green_tensor(&b, &a, OMEGA).unwrap();
        assert_eq!(g1, g2);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g1[i][j], g1[j][i]);
            }
        }
    }

    #[test]
    fn singular_point() {
        assert_eq!(green_tensor(&[1.0; 3], &[1.0; 3], OMEGA), Err(Error::SingularPoint));
    }

    #[test]
    fn far_zone_is_transverse() {
        let k = wavenumber(OMEGA);
        let r = 1e3 / k;
        let g = green_tensor(&[r, 0.0, 0.0], &[0.0; 3], OMEGA).unwrap();
        let norm = C64::from_polar(1.0 / (4.0 * PI * r), k * r);
        let yy = g[1][1] / norm;
        assert!((yy - 1.0).norm() < 2e-3, "{yy}");
        // longitudinal part falls as 1/R^2
        assert!((g[0][0] / norm).norm() < 3e-3);
        let r2 = 2.0 * r;
        let g2 = green_tensor(&[r2, 0.0, 0.0], &[0.0; 3], OMEGA).unwrap();
        let ratio = g2[0][0].norm() / g[0][0].norm();
        assert!((ratio - 0.25).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn coincidence_limit_of_imaginary_part() {
        let k = wavenumber(OMEGA);
        let r = 1e-3 / k;
        for dir in [[1.0, 0.0, 0.0], [0.6, 0.0, 0.8], [1.0, 1.0, 1.0]] {
            let n = vscale(&dir, 1.0 / vnorm(&dir));
            let g = green_tensor(&vscale(&n, r), &[0.0; 3], OMEGA).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { k / (6.0 * PI) } else { 0.0 };
                    assert!(
                        (g[i][j].im - expect).abs() <= 1e-5 * k / (6.0 * PI),
                        "{i}{j}: {} vs {expect}",
                        g[i][j].im
                    );
                }
            }
        }
    }

    #[test]
    fn ed_far_field_decays_as_inverse_distance() {
        let k = wavenumber(OMEGA);
        let p = real_to_cvec(&[0.0, 0.0, 1e-20]);
        let r = 100.0 / k;
        let e1 = ed_electric_field(&[r, 0.0, 0.0], &[0.0; 3], &p, OMEGA).unwrap();
        let e2 = ed_electric_field(&[2.0 * r, 0.0, 0.0], &[0.0; 3], &p, OMEGA).unwrap();
        let ratio = (cvec_norm_sqr(&e1) / cvec_norm_sqr(&e2)).sqrt();
        assert!((ratio - 2.0).abs() < 0.01 * 0.5 * 2.0, "{ratio}");
    }

    #[test]
    fn md_quasi_static_limit() {
        // kR << 1: E -> i omega mu0 (m x n)... magnitude Z0 k |m| /(4 pi R^2) for m perp n
        let k = wavenumber(OMEGA);
        let r = 1e-2 / k;
        let m = real_to_cvec(&[0.0, 0.0, 1.0]);
        let e = md_electric_field(&[r, 0.0, 0.0], &[0.0; 3], &m, OMEGA).unwrap();
        let expect = Z0 * k / (4.0 * PI * r * r);
        let got = cvec_norm_sqr(&e).sqrt();
        assert!((got / expect - 1.0).abs() < 0.01, "{got} vs {expect}");
        // the only surviving component is along m x n direction
        assert!(e[0].norm() < 1e-12 * got && e[2].norm() < 1e-12 * got);
    }

    #[test]
    fn dual_fields_are_consistent() {
        // Faraday: curl E = i omega mu0 H, checked by central differences
        let omega = OMEGA;
        let m = [C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.2, 0.5)];
        let r0 = [1e-6, 2e-6, -1e-6];
        let r = [3e-5, -1e-5, 2e-5];
        let h = 1e-9;
        let e_at = |d: Vec3| md_electric_field(&[r[0] + d[0], r[1] + d[1], r[2] + d[2]], &r0, &m, omega).unwrap();
        let de = |a: usize, c: usize| {
            let mut dp = [0.0; 3];
            dp[a] = h;
            let mut dm = [0.0; 3];
            dm[a] = -h;
            (e_at(dp)[c] - e_at(dm)[c]) / (2.0 * h)
        };
        let curl = [de(1, 2) - de(2, 1), de(2, 0) - de(0, 2), de(0, 1) - de(1, 0)];
        let hf = md_magnetic_field(&r, &r0, &m, omega).unwrap();
        let mu0 = crate::constants::MU0;
        for c in 0..3 {
            let lhs = curl[c];
            let rhs = C64::new(0.0, omega * mu0) * hf[c];
            assert!((lhs - rhs).norm() < 1e-5 * rhs.norm().max(1e-30), "{c}: {lhs} {rhs}");
        }
        // and for the electric dipole, Ampere: curl H = -i omega eps0 E
        let p = [C64::new(1e-20, 0.0), C64::new(0.0, 2e-20), C64::new(-1e-20, 1e-20)];
        let h_at = |d: Vec3| ed_magnetic_field(&[r[0] + d[0], r[1] + d[1], r[2] + d[2]], &r0, &p, omega).unwrap();
        let dh = |a: usize, c: usize| {
            let mut dp = [0.0; 3];
            dp[a] = h;
            let mut dm = [0.0; 3];
            dm[a] = -h;
            (h_at(dp)[c] - h_at(dm)[c]) / (2.0 * h)
        };
        let curl = [dh(1, 2) - dh(2, 1), dh(2, 0) - dh(0, 2), dh(0, 1) - dh(1, 0)];
        let ef = ed_electric_field(&r, &r0, &p, omega).unwrap();
        for c in 0..3 {
            let rhs = C64::new(0.0, -omega * EPS0) * ef[c];
            assert!((curl[c] - rhs).norm() < 1e-5 * rhs.norm().max(1e-30), "{c}");
        }
    }

    #[test]
    fn far_amplitude_matches_near_formula() {
        let k = wavenumber(OMEGA);
        let p = [C64::new(1.0, 0.2), C64::new(0.0, -1.0), C64::new(0.5, 0.0)];
        let src = [2e-6, -1e-6, 3e-6];
        let n = vscale(&[0.3, -0.4, 0.866], 1.0 / vnorm(&[0.3, -0.4, 0.866]));
        let big = 1e6 / k;
        let e = ed_electric_field(&vscale(&n, big), &src, &p, OMEGA).unwrap();
        let f = ed_far_amplitude(&n, &src, &p, k);
        let ph = C64::from_polar(1.0 / big, k * big);
        for c in 0..3 {
            assert!((e[c] - f[c] * ph).norm() < 1e-5 * f[c].norm().max(1e-3 * cvec_norm_sqr(&f).sqrt()));
        }
        let em = md_electric_field(&vscale(&n, big), &src, &p, OMEGA).unwrap();
        let fm = md_far_amplitude(&n, &src, &p, k);
        for c in 0..3 {
            assert!((em[c] - fm[c] * ph).norm() < 1e-5 * cvec_norm_sqr(&fm).sqrt());
        }
    }
}
