use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::KernelSpec;
use crate::error::{Error, Result};
use crate::lattice::WindowProfile;

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// Lattice points with `max(|m|, |n|) ≤ NEAR_SHELL` are summed directly for every pair.
pub(crate) const NEAR_SHELL: i64 = 3;

const MAX_DEGREE: usize = 256;

/// One lattice source: horizontal position and `χ e^{−i(α m d1 + β n d2)}/(4π)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub x: f64,
    pub y: f64,
    pub c: Complex64,
    pub central: bool,
}

/// Value and gradient accumulator of a monopole sum.
pub(crate) type ValueGrad = (Complex64, [Complex64; 3]);

pub(crate) fn zero_vg() -> ValueGrad {
    let z = Complex64::new(0.0, 0.0);
    (z, [z; 3])
}

/// Adds `c e^{ikr}/r` and its gradient at `(dx, dy, dz)`.
#[inline]
pub(crate) fn add_monopole(k: f64, dx: f64, dy: f64, dz: f64, c: Complex64, acc: &mut ValueGrad) {
    let r2 = dx * dx + dy * dy + dz * dz;
    let r = r2.sqrt();
    let (s, co) = (k * r).sin_cos();
    let g = c * Complex64::new(co, s) / r;
    acc.0 += g;
    let radial = g * Complex64::new(-1.0 / r2, k / r);
    acc.1[0] += radial * dx;
    acc.1[1] += radial * dy;
    acc.1[2] += radial * dz;
}

/// Splits the fixed-window lattice into near and far sources.
pub(crate) fn lattice_terms(spec: &KernelSpec) -> Result<(Vec<Term>, Vec<Term>)> {
    let w: WindowProfile = spec.window;
    if w.x_dependent {
        return Err(Error::Config("operator assembly needs a window with fixed lattice weights".into()));
    }
    let qp = &spec.qp;
    let outer = (w.reach() * spec.a / qp.d1.min(qp.d2)).ceil() as u64 + 1;
    let mut near = Vec::new();
    let mut far = Vec::new();
    let mut visit = |m: i64, n: i64| {
        let x = m as f64 * qp.d1;
        let y = n as f64 * qp.d2;
        let chi = w.value(x / spec.a, y / spec.a);
        if chi <= 0.0 {
            return;
        }
        let c = Complex64::from_polar(chi * INV_4PI, -(qp.alpha * x + qp.beta * y));
        let t = Term { x, y, c, central: m == 0 && n == 0 };
        if m.abs().max(n.abs()) <= NEAR_SHELL {
            near.push(t);
        } else {
            far.push(t);
        }
    };
    crate::lattice::for_each_shell_point(0, outer, &mut visit);
    Ok((near, far))
}

/// Sum over `terms` of monopoles at `(X + x_mn, Y + y_mn, ζ)`.
fn far_sum(k: f64, terms: &[Term], x: f64, y: f64, zeta: f64) -> ValueGrad {
    let mut acc = zero_vg();
    for t in terms {
        add_monopole(k, x + t.x, y + t.y, zeta, t.c, &mut acc);
    }
    acc
}

/// Chebyshev series in the vertical coordinate of the far lattice sum, one per grid offset.
///
/// Offsets are `(i h1, j h2)` with `|i|, |j| ≤ half`; each series stores the
/// value and the three gradient components.
pub(crate) struct FarTable {
    half: i64,
    span: usize,
    mid: f64,
    rad: f64,
    degree: usize,
    coef: Vec<[Complex64; 4]>,
}

impl FarTable {
    /// Number of Chebyshev nodes needed on `[lo, hi]`, given the closest far source distance.
    pub(crate) fn degree_for(k: f64, lo: f64, hi: f64, clearance: f64) -> usize {
        let half = 0.5 * (hi - lo);
        let b = clearance / half;
        let rho = b + (1.0 + b * b).sqrt();
        let n_sing = (36.9 / rho.ln()).ceil() as usize;
        let mut n_osc = 1usize;
        let kl = k * half;
        while n_osc < MAX_DEGREE && (n_osc as f64) * (std::f64::consts::E * kl / (2.0 * n_osc as f64)).ln() > -36.9 {
            n_osc += 1;
        }
        (n_sing.max(n_osc) + 10).min(MAX_DEGREE)
    }

    pub(crate) fn build(k: f64, terms: &[Term], h: (f64, f64), half: i64, (lo, hi): (f64, f64), degree: usize) -> Self {
        let span = (2 * half + 1) as usize;
        let mid = 0.5 * (lo + hi);
        let rad = 0.5 * (hi - lo);
        let n = degree.max(2);
        let nodes: Vec<f64> = (0..n).map(|j| mid + rad * (PI * j as f64 / (n - 1) as f64).cos()).collect();
        let cosines: Vec<f64> =
            (0..n * n).map(|ij| (PI * ((ij / n) * (ij % n)) as f64 / (n - 1) as f64).cos()).collect();
        let coef: Vec<[Complex64; 4]> = (0..span * span)
            .into_par_iter()
            .flat_map_iter(|o| {
                let x = ((o % span) as i64 - half) as f64 * h.0;
                let y = ((o / span) as i64 - half) as f64 * h.1;
                let samples: Vec<ValueGrad> = nodes.iter().map(|&z| far_sum(k, terms, x, y, z)).collect();
                let mut out = vec![[Complex64::new(0.0, 0.0); 4]; n];
                for (i, c) in out.iter_mut().enumerate() {
                    for (j, s) in samples.iter().enumerate() {
                        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * cosines[i * n + j];
                        c[0] += s.0 * w;
                        c[1] += s.1[0] * w;
                        c[2] += s.1[1] * w;
                        c[3] += s.1[2] * w;
                    }
                    let scale = if i == 0 || i == n - 1 { 1.0 } else { 2.0 } / (n - 1) as f64;
                    for v in c.iter_mut() {
                        *v *= scale;
                    }
                }
                out
            })
            .collect();
        Self { half, span, mid, rad, degree: n, coef }
    }

    /// Far sum and gradient at offset `(i h1, j h2)` and height `zeta`.
    #[inline]
    pub(crate) fn eval(&self, i: i64, j: i64, zeta: f64) -> ValueGrad {
        let o = ((j + self.half) as usize) * self.span + (i + self.half) as usize;
        let c = &self.coef[o * self.degree..(o + 1) * self.degree];
        let t = (zeta - self.mid) / self.rad;
        let t2 = 2.0 * t;
        let z = Complex64::new(0.0, 0.0);
        let mut b1 = [z; 4];
        let mut b2 = [z; 4];
        for ci in c.iter().skip(1).rev() {
            for q in 0..4 {
                let b0 = ci[q] + b1[q] * t2 - b2[q];
                b2[q] = b1[q];
                b1[q] = b0;
            }
        }
        let mut v = [z; 4];
        for q in 0..4 {
            v[q] = c[0][q] + b1[q] * t - b2[q];
        }
        (v[0], [v[1], v[2], v[3]])
    }

    #[cfg(test)]
    pub(crate) fn degree(&self) -> usize {
        self.degree
    }
}
