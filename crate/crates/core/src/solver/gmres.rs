//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

use crate::tensor::{C64, CZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solve `A x = b` in place. `x` holds the initial guess on entry.
/// Convergence is declared when `|b - A x| <= tol |b|`.
pub fn gmres<F>(apply: F, b: &[C64], x: &mut [C64], tol: f64, max_iter: usize, restart: usize) -> GmresOutcome
where
    F: FnMut(&[C64], &mut [C64]),
{
    gmres_preconditioned(
        apply,
        |v: &[C64], out: &mut [C64]| out.copy_from_slice(v),
        b,
        x,
        tol,
        max_iter,
        restart,
    )
}

/// Right-preconditioned variant: Krylov space of `A M^-1`, where `precond`
/// applies `M^-1`. The residual tested is the true one.
pub fn gmres_preconditioned<F, M>(
    mut apply: F,
    mut precond: M,
    b: &[C64],
    x: &mut [C64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> GmresOutcome
where
    F: FnMut(&[C64], &mut [C64]),
    M: FnMut(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = CZERO);
        return GmresOutcome {
            residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut basis: Vec<Vec<C64>> = (0..=m).map(|_| vec![CZERO; n]).collect();
    let mut h = vec![vec![CZERO; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![CZERO; m];
    let mut g = vec![CZERO; m + 1];
    let mut w = vec![CZERO; n];
    let mut z = vec![CZERO; n];
    let mut iterations = 0;

    loop {
        apply(x, &mut w);
        for i in 0..n {
            basis[0][i] = b[i] - w[i];
        }
        let beta = norm(&basis[0]);
        let rel = beta / bnorm;
        if rel <= tol {
            return GmresOutcome {
                residual: rel,
                iterations,
                converged: true,
            };
        }
        if iterations >= max_iter {
            return GmresOutcome {
                residual: rel,
                iterations,
                converged: false,
            };
        }
        basis[0].iter_mut().for_each(|v| *v /= beta);
        g.iter_mut().for_each(|v| *v = CZERO);
        g[0] = C64::from(beta);

        let mut used = 0;
        for j in 0..m {
            let (head, tail) = basis.split_at_mut(j + 1);
            let v_next = &mut tail[0];
            precond(&head[j], &mut z);
            apply(&z, v_next);
            iterations += 1;
            for i in 0..=j {
                let hij = dot(&head[i], v_next);
                h[i][j] = hij;
                for (a, q) in v_next.iter_mut().zip(&head[i]) {
                    *a -= hij * q;
                }
            }
            let hn = norm(v_next);
            h[j + 1][j] = C64::from(hn);
            if hn > 0.0 {
                v_next.iter_mut().for_each(|v| *v /= hn);
            }
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = CZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            used = j + 1;
            if g[j + 1].norm() / bnorm <= tol * 0.5 || iterations >= max_iter || hn == 0.0 {
                break;
            }
        }

        // back substitution on the upper-triangular block
        let mut y = vec![CZERO; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        w.iter_mut().for_each(|v| *v = CZERO);
        for (k, yk) in y.iter().enumerate() {
            for (wi, q) in w.iter_mut().zip(&basis[k]) {
                *wi += yk * q;
            }
        }
        precond(&w, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, CZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}
