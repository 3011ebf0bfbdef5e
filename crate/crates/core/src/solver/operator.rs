//! Dipole-dipole interaction operators `y_i = sum_{j != i} (k^2/eps0) G(r_i, r_j) x_j`.
//!
//! [`FftOperator`] exploits the translation invariance of the free-space
//! Green tensor on the cubic lattice: the interaction is a discrete
//! convolution, evaluated with zero-padded 3-D FFTs. [`DirectOperator`]
//! sums pairs on the fly and is kept as the reference path.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::constants::{wavenumber, EPS0};
use crate::geometry::VoxelGrid;
use crate::green::green_tensor_sep;
use crate::tensor::{vsub, Vec3, C64, CZERO};

pub trait Interaction: Send {
    fn len(&self) -> usize;
    /// `y = W x` for flattened `[x0, y0, z0, x1, ...]` vectors.
    fn apply(&mut self, x: &[C64], y: &mut [C64]);
}

/// On-the-fly pair summation.
pub struct DirectOperator {
    centers: Vec<Vec3>,
    k: f64,
}

impl DirectOperator {
    pub fn new(grid: &VoxelGrid, omega: f64) -> Self {
        Self {
            centers: grid.centers.clone(),
            k: wavenumber(omega),
        }
    }
}

impl Interaction for DirectOperator {
    fn len(&self) -> usize {
        self.centers.len()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        let pref = self.k * self.k / EPS0;
        let centers = &self.centers;
        let k = self.k;
        y.par_chunks_mut(3).enumerate().for_each(|(i, yi)| {
            let mut acc = [CZERO; 3];
            for (j, cj) in centers.iter().enumerate() {
                if i == j {
                    continue;
                }
                let g = green_tensor_sep(&vsub(&centers[i], cj), k);
                let xj = &x[3 * j..3 * j + 3];
                for a in 0..3 {
                    acc[a] += g[a][0] * xj[0] + g[a][1] * xj[1] + g[a][2] * xj[2];
                }
            }
            for a in 0..3 {
                yi[a] = acc[a] * pref;
            }
        });
    }
}

/// Smallest 5-smooth integer `>= n`.
fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

struct Plans {
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

/// Block-Toeplitz interaction applied by FFT convolution.
pub struct FftOperator {
    /// Occupied lattice extent per axis.
    n: [usize; 3],
    /// Padded transform size per axis.
    m: [usize; 3],
    /// Padded linear index of each voxel.
    slots: Vec<usize>,
    /// Transformed kernel components xx, xy, xz, yy, yz, zz.
    kernel: [Vec<C64>; 6],
    plans: Plans,
    work: [Vec<C64>; 3],
    line: Vec<C64>,
    scratch: Vec<C64>,
}

const COMPONENT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl FftOperator {
    pub fn new(grid: &VoxelGrid, omega: f64) -> Self {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for idx in &grid.indices {
            for a in 0..3 {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
        let n = [
            (hi[0] - lo[0] + 1) as usize,
            (hi[1] - lo[1] + 1) as usize,
            (hi[2] - lo[2] + 1) as usize,
        ];
        let m = [
            fft_friendly(2 * n[0] - 1),
            fft_friendly(2 * n[1] - 1),
            fft_friendly(2 * n[2] - 1),
        ];
        let total = m[0] * m[1] * m[2];
        let slots = grid
            .indices
            .iter()
            .map(|idx| {
                let i = (idx[0] - lo[0]) as usize;
                let j = (idx[1] - lo[1]) as usize;
                let l = (idx[2] - lo[2]) as usize;
                (i * m[1] + j) * m[2] + l
            })
            .collect();

        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd: [
                planner.plan_fft_forward(m[0]),
                planner.plan_fft_forward(m[1]),
                planner.plan_fft_forward(m[2]),
            ],
            inv: [
                planner.plan_fft_inverse(m[0]),
                planner.plan_fft_inverse(m[1]),
                planner.plan_fft_inverse(m[2]),
            ],
        };
        let scratch_len = plans
            .fwd
            .iter()
            .chain(plans.inv.iter())
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);

        let k = wavenumber(omega);
        let pref = k * k / EPS0;
        let d = grid.spacing;
        let mut kernel: [Vec<C64>; 6] = std::array::from_fn(|_| vec![CZERO; total]);
        // offsets in (-(n-1) ..= n-1), wrapped into the padded box
        let wrap = |o: i64, ma: usize| -> usize { o.rem_euclid(ma as i64) as usize };
        let range = |na: usize| -(na as i64 - 1)..=(na as i64 - 1);
        for oi in range(n[0]) {
            for oj in range(n[1]) {
                for ol in range(n[2]) {
                    if oi == 0 && oj == 0 && ol == 0 {
                        continue;
                    }
                    let sep = [oi as f64 * d, oj as f64 * d, ol as f64 * d];
                    let g = green_tensor_sep(&sep, k);
                    let slot = (wrap(oi, m[0]) * m[1] + wrap(oj, m[1])) * m[2] + wrap(ol, m[2]);
                    kernel[0][slot] = g[0][0] * pref;
                    kernel[1][slot] = g[0][1] * pref;
                    kernel[2][slot] = g[0][2] * pref;
                    kernel[3][slot] = g[1][1] * pref;
                    kernel[4][slot] = g[1][2] * pref;
                    kernel[5][slot] = g[2][2] * pref;
                }
            }
        }
        let mut op = Self {
            n,
            m,
            slots,
            kernel: std::array::from_fn(|_| Vec::new()),
            plans,
            work: std::array::from_fn(|_| vec![CZERO; total]),
            line: vec![CZERO; m.iter().cloned().max().unwrap()],
            scratch: vec![CZERO; scratch_len],
        };
        let full = [m[0], m[1], m[2]];
        for c in kernel.iter_mut() {
            op.transform(c, true, full);
        }
        let norm = 1.0 / total as f64;
        for c in kernel.iter_mut() {
            for v in c.iter_mut() {
                *v *= norm;
            }
        }
        op.kernel = kernel;
        op
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.m
    }

    /// In-place 3-D transform. `active` bounds the region holding data on
    /// input (forward) or the region needed on output (inverse).
    fn transform(&mut self, data: &mut [C64], forward: bool, active: [usize; 3]) {
        let m = self.m;
        let plans = if forward { &self.plans.fwd } else { &self.plans.inv };
        let (p0, p1, p2) = (plans[0].clone(), plans[1].clone(), plans[2].clone());
        let scratch = &mut self.scratch;
        let line = &mut self.line;

        let along_z = |data: &mut [C64], scratch: &mut [C64], nx: usize, ny: usize| {
            for i in 0..nx {
                for j in 0..ny {
                    let s = (i * m[1] + j) * m[2];
                    p2.process_with_scratch(&mut data[s..s + m[2]], scratch);
                }
            }
        };
        let along_y = |data: &mut [C64], scratch: &mut [C64], line: &mut [C64], nx: usize, nz: usize| {
            let buf = &mut line[..m[1]];
            for i in 0..nx {
                for l in 0..nz {
                    for j in 0..m[1] {
                        buf[j] = data[(i * m[1] + j) * m[2] + l];
                    }
                    p1.process_with_scratch(buf, scratch);
                    for j in 0..m[1] {
                        data[(i * m[1] + j) * m[2] + l] = buf[j];
                    }
                }
            }
        };
        let along_x = |data: &mut [C64], scratch: &mut [C64], line: &mut [C64], ny: usize, nz: usize| {
            let buf = &mut line[..m[0]];
            let stride = m[1] * m[2];
            for j in 0..ny {
                for l in 0..nz {
                    let base = j * m[2] + l;
                    for i in 0..m[0] {
                        buf[i] = data[i * stride + base];
                    }
                    p0.process_with_scratch(buf, scratch);
                    for i in 0..m[0] {
                        data[i * stride + base] = buf[i];
                    }
                }
            }
        };

        if forward {
            // input support is [0, active) on every axis
            along_z(data, scratch, active[0], active[1]);
            along_y(data, scratch, line, active[0], m[2]);
            along_x(data, scratch, line, m[1], m[2]);
        } else {
            // only [0, active) is read back on every axis
            along_x(data, scratch, line, m[1], m[2]);
            along_y(data, scratch, line, active[0], m[2]);
            along_z(data, scratch, active[0], active[1]);
        }
    }
}

impl Interaction for FftOperator {
    fn len(&self) -> usize {
        self.slots.len()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        let mut work = std::mem::take(&mut self.work);
        for w in work.iter_mut() {
            w.iter_mut().for_each(|v| *v = CZERO);
        }
        for (v, &s) in self.slots.iter().enumerate() {
            for a in 0..3 {
                work[a][s] = x[3 * v + a];
            }
        }
        let n = self.n;
        for w in work.iter_mut() {
            self.transform(w, true, n);
        }
        {
            let [wx, wy, wz] = &mut work;
            let kern = &self.kernel;
            wx.par_iter_mut()
                .zip(wy.par_iter_mut())
                .zip(wz.par_iter_mut())
                .enumerate()
                .for_each(|(s, ((ax, ay), az))| {
                    let v = [*ax, *ay, *az];
                    let mut out = [CZERO; 3];
                    for a in 0..3 {
                        out[a] = kern[COMPONENT[a][0]][s] * v[0]
                            + kern[COMPONENT[a][1]][s] * v[1]
                            + kern[COMPONENT[a][2]][s] * v[2];
                    }
                    *ax = out[0];
                    *ay = out[1];
                    *az = out[2];
                });
        }
        for w in work.iter_mut() {
            self.transform(w, false, n);
        }
        for (v, &s) in self.slots.iter().enumerate() {
            for a in 0..3 {
                y[3 * v + a] = work[a][s];
            }
        }
        self.work = work;
    }
}
