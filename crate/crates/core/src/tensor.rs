//! Small fixed-size complex vector and matrix helpers.
//!
//! Everything here works on stack arrays; the solver calls these in its
//! inner loops.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Vec3 = [f64; 3];
pub type CVec3 = [C64; 3];
pub type CMat3 = [[C64; 3]; 3];

pub const CZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const CONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn cmat_zero() -> CMat3 {
    [[CZERO; 3]; 3]
}

pub fn cmat_identity() -> CMat3 {
    let mut m = cmat_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = CONE;
    }
    m
}

pub fn cmat_scale(m: &CMat3, s: C64) -> CMat3 {
    let mut out = *m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn cmat_add(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn cmat_sub(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

pub fn cmat_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = cmat_zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = CZERO;
            for k in 0..3 {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn cmat_transpose(a: &CMat3) -> CMat3 {
    let mut out = cmat_zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

#[inline]
pub fn cmat_vec(a: &CMat3, v: &CVec3) -> CVec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn cmat_det(a: &CMat3) -> C64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse via the adjugate. Returns `None` when `|det| <= min_det`.
pub fn cmat_inverse(a: &CMat3, min_det: f64) -> Option<CMat3> {
    let det = cmat_det(a);
    if !(det.norm() > min_det) {
        return None;
    }
    let inv_det = det.inv();
    let mut out = cmat_zero();
    out[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_det;
    out[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_det;
    out[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_det;
    out[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_det;
    out[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_det;
    out[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_det;
    out[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_det;
    out[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_det;
    out[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_det;
    Some(out)
}

/// Frobenius norm.
pub fn cmat_norm(a: &CMat3) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn cvec_zero() -> CVec3 {
    [CZERO; 3]
}

#[inline]
pub fn cvec_add(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn cvec_sub(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn cvec_scale(a: &CVec3, s: C64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn cvec_scale_re(a: &CVec3, s: f64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `conj(a) . b`
#[inline]
pub fn cvec_cdot(a: &CVec3, b: &CVec3) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

/// Unconjugated `a . b` with a real left operand.
#[inline]
pub fn rdot(a: &Vec3, b: &CVec3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

#[inline]
pub fn cvec_norm_sqr(a: &CVec3) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

/// Real vector crossed with a complex vector.
#[inline]
pub fn rcross(a: &Vec3, b: &CVec3) -> CVec3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

#[inline]
pub fn real_to_cvec(a: &Vec3) -> CVec3 {
    [C64::from(a[0]), C64::from(a[1]), C64::from(a[2])]
}

#[inline]
pub fn vsub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn vadd(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn vscale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn vdot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn vnorm(a: &Vec3) -> f64 {
    vdot(a, a).sqrt()
}

#[inline]
pub fn vcross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn vnormalize(a: &Vec3) -> Option<Vec3> {
    let n = vnorm(a);
    if n > 0.0 && n.is_finite() {
        Some(vscale(a, 1.0 / n))
    } else {
        None
    }
}
