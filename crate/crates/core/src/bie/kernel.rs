use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GratingSurface;
use crate::error::{Error, Result};
use crate::lattice::{EvalPoint, LatticeSum, QuasiPeriodicity, WindowProfile, WoodMode};
use crate::wood::{regularizer_v_with_gradient, GrazingSet, ShiftConfig};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// `|γ|/k` below which the plain kernel is refused.
const PLAIN_WOOD_TOL: f64 = 1e-8;

/// Green function used in the integral operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelChoice {
    /// Windowed quasi-periodic Green function; undefined at Wood anomalies.
    Plain,
    /// Binomially shifted Green function without the grazing-mode regularizer.
    Shifted,
    /// Shifted Green function plus the regularizer `v`.
    Modified,
}

/// Everything needed to evaluate the windowed kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub qp: QuasiPeriodicity,
    pub choice: KernelChoice,
    pub window: WindowProfile,
    pub a: f64,
    pub shift: ShiftConfig,
    pub grazing: GrazingSet,
}

impl KernelSpec {
    pub fn new(qp: QuasiPeriodicity, choice: KernelChoice, a: f64, shift: ShiftConfig) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!("window scale a must be positive, got {a}")));
        }
        let grazing = match choice {
            KernelChoice::Plain => {
                let (j0, j1) = qp.j_range(PLAIN_WOOD_TOL);
                let (l0, l1) = qp.l_range(PLAIN_WOOD_TOL);
                let mut modes = Vec::new();
                for j in j0..=j1 {
                    for l in l0..=l1 {
                        if qp.gamma(j, l).norm() / qp.k < PLAIN_WOOD_TOL {
                            modes.push((j, l));
                        }
                    }
                }
                if !modes.is_empty() {
                    return Err(Error::WoodAnomaly { modes });
                }
                GrazingSet::empty()
            }
            KernelChoice::Shifted => {
                shift.check_nondegenerate(&qp)?;
                GrazingSet::empty()
            }
            KernelChoice::Modified => {
                shift.check_nondegenerate(&qp)?;
                GrazingSet::detect(&qp, &shift)
            }
        };
        Ok(Self { qp, choice, window: WindowProfile::assembly(), a, shift, grazing })
    }

    pub fn with_window(mut self, window: WindowProfile) -> Self {
        self.window = window;
        self
    }

    /// `(weight, vertical offset)` of each image source.
    pub fn images(&self) -> Vec<(f64, f64)> {
        match self.choice {
            KernelChoice::Plain => vec![(1.0, 0.0)],
            _ => self.shift.images(),
        }
    }

    pub fn shift_order(&self) -> usize {
        match self.choice {
            KernelChoice::Plain => 0,
            _ => self.shift.p,
        }
    }

    pub fn grazing_modes(&self) -> &[WoodMode] {
        &self.grazing.modes
    }

    /// Full quasi-periodic kernel and its gradient at the difference vector `r`, regularizer included.
    pub fn evaluate(&self, r: [f64; 3]) -> Result<(Complex64, [Complex64; 3])> {
        let sum = LatticeSum::new(self.qp, self.window, self.a)?.with_images(self.images());
        let (g, dg) = sum.value_and_gradient(EvalPoint::new(r[0], r[1], r[2]))?;
        let (v, dv) = self.regularizer(r);
        Ok((g + v, [dg[0] + dv[0], dg[1] + dv[1], dg[2] + dv[2]]))
    }

    /// Lattice sum of all images except the unshifted central one.
    pub(crate) fn rest_sum(&self) -> Result<LatticeSum> {
        Ok(LatticeSum::new(self.qp, self.window, self.a)?.with_images(self.images()).skip_central(true))
    }

    pub(crate) fn regularizer(&self, r: [f64; 3]) -> (Complex64, [Complex64; 3]) {
        if self.grazing.is_empty() {
            let z = Complex64::new(0.0, 0.0);
            return (z, [z; 3]);
        }
        regularizer_v_with_gradient(&self.qp, &self.shift, &self.grazing, EvalPoint::new(r[0], r[1], r[2]))
    }

    /// Bloch phase `e^{−i(α R_x + β R_y)}` that turns quasi-periodic kernels into periodic ones.
    pub(crate) fn phase(&self, r: [f64; 3]) -> Complex64 {
        Complex64::from_polar(1.0, -(self.qp.alpha * r[0] + self.qp.beta * r[1]))
    }
}

/// Singular and smooth parts of one kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerSplit {
    pub singular: Complex64,
    pub smooth: Complex64,
}

impl LayerSplit {
    pub fn total(&self) -> Complex64 {
        self.singular + self.smooth
    }
}

/// Periodic kernels between a target and a source point of the surface.
///
/// `single` is `G^per`; `double` is `∇_{x′}G^per · (−fx′, −fy′, 1)`; `adjoint`
/// is `∇_x G^per · (−fx, −fy, 1)` with the target normal. At coincident points
/// the singular parts are undefined and reported as zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitKernel {
    pub single: LayerSplit,
    pub double: LayerSplit,
    pub adjoint: LayerSplit,
    pub coincident: bool,
}

/// Central free-space term split into `cos` (singular) and `i sin` (smooth) parts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Central {
    /// `cos(kR)/(4πR)`.
    pub sl_cos: f64,
    /// `sin(kR)/(4πR)`.
    pub sl_sin: f64,
    /// `(cos(kR)/R + k sin(kR))/(4πR²)`, to be multiplied by `R·n`.
    pub dl_cos: f64,
    /// `(sin(kR)/R − k cos(kR))/(4πR²)`, to be multiplied by `R·n`.
    pub dl_sin: f64,
}

pub(crate) fn central(k: f64, r: f64) -> Central {
    if r == 0.0 {
        return Central { sl_cos: 0.0, sl_sin: k * INV_4PI, dl_cos: 0.0, dl_sin: k * k * k * INV_4PI / 3.0 };
    }
    let x = k * r;
    let (s, c) = x.sin_cos();
    let r2 = r * r;
    // k(sin x/x − cos x) = k(x²/3 − x⁴/30 + x⁶/840 − x⁸/45360) for small x.
    let sin_part = if x < 0.05 {
        let x2 = x * x;
        k * x2 * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 / 45360.0)))
    } else {
        s / r - k * c
    };
    Central {
        sl_cos: c * INV_4PI / r,
        sl_sin: s * INV_4PI / r,
        dl_cos: (c / r + k * s) * INV_4PI / r2,
        dl_sin: sin_part * INV_4PI / r2,
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cdot(g: &[Complex64; 3], n: [f64; 3]) -> Complex64 {
    g[0] * n[0] + g[1] * n[1] + g[2] * n[2]
}

/// Combines the central split with the remaining images (`rest`, value and gradient in `R`).
pub(crate) fn assemble_split(
    k: f64,
    r: [f64; 3],
    n_src: [f64; 3],
    n_tgt: [f64; 3],
    rest: (Complex64, [Complex64; 3]),
    phase: Complex64,
) -> SplitKernel {
    let rn = dot(r, r).sqrt();
    let c = central(k, rn);
    let i = Complex64::i();
    let rs = dot(r, n_src);
    let rt = dot(r, n_tgt);
    // ∇_{x′} = −∇_R for the double layer; the adjoint differentiates in the target.
    SplitKernel {
        single: LayerSplit { singular: phase * c.sl_cos, smooth: phase * (rest.0 + i * c.sl_sin) },
        double: LayerSplit {
            singular: phase * (c.dl_cos * rs),
            smooth: phase * (-cdot(&rest.1, n_src) + i * (c.dl_sin * rs)),
        },
        adjoint: LayerSplit {
            singular: phase * (-c.dl_cos * rt),
            smooth: phase * (cdot(&rest.1, n_tgt) - i * (c.dl_sin * rt)),
        },
        coincident: rn == 0.0,
    }
}

/// Splits the periodic kernels between target `(x, y)` and source `(x′, y′)` on the surface.
///
/// The source is used as given (no wrapping), so `R = (x − x′, y − y′, f(x, y) − f(x′, y′))`.
/// All lattice images are summed directly; this is the reference path for assembly.
pub fn split_kernel(
    spec: &KernelSpec,
    surface: &GratingSurface,
    target: (f64, f64),
    source: (f64, f64),
) -> Result<SplitKernel> {
    let t = surface.at(target.0, target.1);
    let s = surface.at(source.0, source.1);
    let r = [t.x - s.x, t.y - s.y, t.f - s.f];
    let sum = spec.rest_sum()?;
    let (g, dg) = sum.value_and_gradient(EvalPoint::new(r[0], r[1], r[2]))?;
    let (v, dv) = spec.regularizer(r);
    let rest = (g + v, [dg[0] + dv[0], dg[1] + dv[1], dg[2] + dv[2]]);
    Ok(assemble_split(spec.qp.k, r, s.normal(), t.normal(), rest, spec.phase(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wood::modified_green;

    fn spec(k: f64, choice: KernelChoice) -> KernelSpec {
        let qp = QuasiPeriodicity::new(k, 1.0, 1.0, 0.3, -0.2).unwrap();
        KernelSpec::new(qp, choice, 6.0, ShiftConfig::default()).unwrap()
    }

    #[test]
    fn plain_refused_at_wood() {
        let qp = QuasiPeriodicity::normal(2.0 * PI, 1.0, 1.0).unwrap();
        assert!(matches!(
            KernelSpec::new(qp, KernelChoice::Plain, 10.0, ShiftConfig::default()),
            Err(Error::WoodAnomaly { .. })
        ));
        assert!(KernelSpec::new(qp, KernelChoice::Modified, 10.0, ShiftConfig::default()).is_ok());
    }

    #[test]
    fn coincident_limit() {
        let sp = spec(2.0, KernelChoice::Plain);
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let sk = split_kernel(&sp, &s, (0.2, 0.3), (0.2, 0.3)).unwrap();
        assert!(sk.coincident);
        let rest = sp.rest_sum().unwrap().value(EvalPoint::new(0.0, 0.0, 0.0)).unwrap();
        let expect = rest + Complex64::new(0.0, 2.0 * INV_4PI);
        assert!((sk.single.smooth - expect).norm() < 1e-14);
    }

    #[test]
    fn split_resums_to_full_kernel() {
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        for choice in [KernelChoice::Plain, KernelChoice::Modified] {
            let sp = spec(2.0 * PI * 1.001, choice);
            let (t, src) = ((0.2, 0.3), (0.45, 0.1));
            let sk = split_kernel(&sp, &s, t, src).unwrap();
            let tp = s.at(t.0, t.1);
            let sp_ = s.at(src.0, src.1);
            let r = EvalPoint::new(tp.x - sp_.x, tp.y - sp_.y, tp.f - sp_.f);
            let full = match choice {
                KernelChoice::Plain => crate::lattice::windowed_green(&sp.qp, &sp.window, sp.a, r).unwrap(),
                _ => modified_green(&sp.qp, &sp.window, &sp.shift, &sp.grazing, sp.a, r).unwrap(),
            } * sp.phase([r.x, r.y, r.z]);
            assert!((sk.single.total() - full).norm() < 1e-12 * full.norm());
        }
    }

    #[test]
    fn double_layer_matches_gradient() {
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let sp = spec(3.0, KernelChoice::Plain);
        let (t, src) = ((0.2, 0.3), (0.45, 0.1));
        let sk = split_kernel(&sp, &s, t, src).unwrap();
        let tp = s.at(t.0, t.1);
        let sq = s.at(src.0, src.1);
        let r = EvalPoint::new(tp.x - sq.x, tp.y - sq.y, tp.f - sq.f);
        let g = crate::lattice::windowed_green_gradient(&sp.qp, &sp.window, sp.a, r).unwrap();
        let ph = sp.phase([r.x, r.y, r.z]);
        let dl = -(g[0] * sq.normal()[0] + g[1] * sq.normal()[1] + g[2]) * ph;
        let adl = (g[0] * tp.normal()[0] + g[1] * tp.normal()[1] + g[2]) * ph;
        assert!((sk.double.total() - dl).norm() < 1e-12 * dl.norm());
        assert!((sk.adjoint.total() - adl).norm() < 1e-12 * adl.norm());
    }

    #[test]
    fn flat_double_layer_singular_vanishes() {
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let sp = spec(2.0, KernelChoice::Plain);
        let sk = split_kernel(&sp, &s, (0.1, 0.2), (0.3, 0.45)).unwrap();
        assert_eq!(sk.double.singular, Complex64::new(0.0, 0.0));
        assert_eq!(sk.adjoint.singular, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn central_series_is_continuous() {
        let k = 3.0;
        for &r in &[0.016, 0.0167, 0.017] {
            let c = central(k, r);
            let x = k * r;
            let direct = ((x.sin() / r) - k * x.cos()) * INV_4PI / (r * r);
            assert!((c.dl_sin - direct).abs() < 1e-9 * direct.abs());
        }
    }
}
