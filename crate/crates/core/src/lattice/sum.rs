use std::f64::consts::PI;

use num_complex::Complex64;

use super::{EvalPoint, QuasiPeriodicity, WindowProfile};
use crate::error::{Error, Result};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// Outgoing free-space Green function `e^{ikr}/(4πr)`.
pub fn free_green(k: f64, r: f64) -> Result<Complex64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("free_green needs r > 0, got {r}")));
    }
    let (s, c) = (k * r).sin_cos();
    Ok(Complex64::new(c, s) * (INV_4PI / r))
}

/// Windowed quasi-periodic lattice sum of Helmholtz monopoles.
///
/// Every lattice point `(m, n)` carries the Bloch phase `e^{−i(α m d1 + β n d2)}`,
/// the window weight, and a list of `(weight, dz)` image sources displaced to
/// `z + dz`. The plain Green function uses the single image `(1, 0)`.
///
/// Lattice points are visited in concentric square shells `max(|m|,|n|) = s`
/// for increasing `s`, so the floating-point summation order is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSum {
    qp: QuasiPeriodicity,
    window: WindowProfile,
    a: f64,
    images: Vec<(f64, f64)>,
    compensated: bool,
    skip_central: bool,
    min_shell: u64,
    max_shell: Option<u64>,
}

impl LatticeSum {
    pub fn new(qp: QuasiPeriodicity, window: WindowProfile, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!("window scale a must be positive, got {a}")));
        }
        if !window.is_valid() {
            return Err(Error::Config(format!(
                "window radii must satisfy 0 < inner < outer, got ({}, {})",
                window.inner, window.outer
            )));
        }
        Ok(Self {
            qp,
            window,
            a,
            images: vec![(1.0, 0.0)],
            compensated: false,
            skip_central: false,
            min_shell: 0,
            max_shell: None,
        })
    }

    /// Replaces the image list; each entry is `(weight, vertical offset)`.
    pub fn with_images(mut self, images: Vec<(f64, f64)>) -> Self {
        self.images = images;
        self
    }

    /// Neumaier-compensated accumulation of the terms.
    pub fn compensated(mut self, on: bool) -> Self {
        self.compensated = on;
        self
    }

    /// Drops the first image of the central lattice point.
    pub fn skip_central(mut self, on: bool) -> Self {
        self.skip_central = on;
        self
    }

    /// Restricts the sum to shells `min ..= max`.
    pub fn shells(mut self, min: u64, max: Option<u64>) -> Self {
        self.min_shell = min;
        self.max_shell = max;
        self
    }

    pub fn qp(&self) -> &QuasiPeriodicity {
        &self.qp
    }

    pub fn window(&self) -> &WindowProfile {
        &self.window
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn images(&self) -> &[(f64, f64)] {
        &self.images
    }

    fn outer_shell(&self, pt: &EvalPoint) -> u64 {
        let qp = &self.qp;
        let mut reach = self.window.reach() * self.a / qp.d1.min(qp.d2);
        if self.window.x_dependent {
            reach += (pt.x / qp.d1).abs().max((pt.y / qp.d2).abs());
        }
        let s = reach.ceil() as u64 + 1;
        match self.max_shell {
            Some(m) => s.min(m),
            None => s,
        }
    }

    /// Number of `(m, n)` with a nonzero window weight.
    pub fn term_count(&self, pt: EvalPoint) -> usize {
        let tables = self.tables(&pt);
        let mut count = 0;
        let mut visit = |m: i64, n: i64| {
            if tables.weight(m, n, self.window) > 0.0 {
                count += 1;
            }
        };
        for_each_shell_point(self.min_shell, self.outer_shell(&pt), &mut visit);
        count
    }

    pub fn value(&self, pt: EvalPoint) -> Result<Complex64> {
        Ok(self.accumulate::<false>(pt)?.0)
    }

    pub fn gradient(&self, pt: EvalPoint) -> Result<[Complex64; 3]> {
        Ok(self.accumulate::<true>(pt)?.1)
    }

    pub fn value_and_gradient(&self, pt: EvalPoint) -> Result<(Complex64, [Complex64; 3])> {
        self.accumulate::<true>(pt)
    }

    fn tables(&self, pt: &EvalPoint) -> AxisTables {
        let s_max = self.outer_shell(pt) as i64;
        AxisTables::new(&self.qp, &self.window, self.a, pt, s_max)
    }

    fn accumulate<const GRAD: bool>(&self, pt: EvalPoint) -> Result<(Complex64, [Complex64; 3])> {
        if !(pt.x.is_finite() && pt.y.is_finite() && pt.z.is_finite()) {
            return Err(Error::Domain("evaluation point must be finite".into()));
        }
        let s_max = self.outer_shell(&pt);
        let tab = AxisTables::new(&self.qp, &self.window, self.a, &pt, s_max as i64);
        let k = self.qp.k;
        let tiny = 4.0 * f64::EPSILON * (self.qp.d1 + self.qp.d2);
        let wx_grad = GRAD && self.window.x_dependent;
        let mut acc = [Accumulator::new(self.compensated); 4];
        let mut failure = None;
        let mut visit = |m: i64, n: i64| {
            if failure.is_some() {
                return;
            }
            let (chi, chi_s, chi_t) = if wx_grad {
                tab.weight_with_gradient(m, n, self.window)
            } else {
                (tab.weight(m, n, self.window), 0.0, 0.0)
            };
            if chi <= 0.0 && chi_s == 0.0 && chi_t == 0.0 {
                return;
            }
            let im = (m + tab.offset) as usize;
            let inn = (n + tab.offset) as usize;
            let dx = tab.dx[im];
            let dy = tab.dy[inn];
            let rho2 = dx * dx + dy * dy;
            let phase = tab.px[im] * tab.py[inn];
            let mut mono = Complex64::new(0.0, 0.0);
            let mut grad = [Complex64::new(0.0, 0.0); 3];
            for (q, &(wq, dz)) in self.images.iter().enumerate() {
                if self.skip_central && q == 0 && m == 0 && n == 0 {
                    continue;
                }
                let zz = pt.z + dz;
                let r = (rho2 + zz * zz).sqrt();
                if r < tiny {
                    failure = Some(Error::SingularEvaluation { m, n, q });
                    return;
                }
                let (s, c) = (k * r).sin_cos();
                let g = Complex64::new(c, s) * (wq * INV_4PI / r);
                mono += g;
                if GRAD {
                    let radial = g * Complex64::new(-1.0 / r, k) / r;
                    grad[0] += radial * dx;
                    grad[1] += radial * dy;
                    grad[2] += radial * zz;
                }
            }
            let term = mono * phase;
            acc[0].add(term * chi);
            if GRAD {
                let wphase = phase * chi;
                acc[1].add(grad[0] * wphase + term * (chi_s / self.a));
                acc[2].add(grad[1] * wphase + term * (chi_t / self.a));
                acc[3].add(grad[2] * wphase);
            }
        };
        for_each_shell_point(self.min_shell, s_max, &mut visit);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((acc[0].total(), [acc[1].total(), acc[2].total(), acc[3].total()]))
    }
}

/// Per-axis quantities shared by all lattice points of one evaluation.
struct AxisTables {
    offset: i64,
    dx: Vec<f64>,
    dy: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    px: Vec<Complex64>,
    py: Vec<Complex64>,
}

impl AxisTables {
    fn new(qp: &QuasiPeriodicity, w: &WindowProfile, a: f64, pt: &EvalPoint, s_max: i64) -> Self {
        let len = (2 * s_max + 1) as usize;
        let mut t = Self {
            offset: s_max,
            dx: Vec::with_capacity(len),
            dy: Vec::with_capacity(len),
            sx: Vec::with_capacity(len),
            sy: Vec::with_capacity(len),
            px: Vec::with_capacity(len),
            py: Vec::with_capacity(len),
        };
        for i in -s_max..=s_max {
            let mx = i as f64 * qp.d1;
            let ny = i as f64 * qp.d2;
            t.dx.push(pt.x + mx);
            t.dy.push(pt.y + ny);
            if w.x_dependent {
                t.sx.push((pt.x + mx) / a);
                t.sy.push((pt.y + ny) / a);
            } else {
                t.sx.push(mx / a);
                t.sy.push(ny / a);
            }
            t.px.push(Complex64::from_polar(1.0, -qp.alpha * mx));
            t.py.push(Complex64::from_polar(1.0, -qp.beta * ny));
        }
        t
    }

    #[inline]
    fn weight(&self, m: i64, n: i64, w: WindowProfile) -> f64 {
        let s = self.sx[(m + self.offset) as usize];
        let t = self.sy[(n + self.offset) as usize];
        w.value(s, t)
    }

    #[inline]
    fn weight_with_gradient(&self, m: i64, n: i64, w: WindowProfile) -> (f64, f64, f64) {
        let s = self.sx[(m + self.offset) as usize];
        let t = self.sy[(n + self.offset) as usize];
        w.value_with_gradient(s, t)
    }
}

/// Visits lattice points shell by shell: row `n = −s`, then the two side
/// columns bottom to top, then row `n = s`.
pub(crate) fn for_each_shell_point(min_shell: u64, max_shell: u64, visit: &mut impl FnMut(i64, i64)) {
    for s in min_shell..=max_shell {
        let s = s as i64;
        if s == 0 {
            visit(0, 0);
            continue;
        }
        for m in -s..=s {
            visit(m, -s);
        }
        for n in (-s + 1)..s {
            visit(-s, n);
            visit(s, n);
        }
        for m in -s..=s {
            visit(m, s);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Accumulator {
    sum: Complex64,
    comp: Complex64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Self { sum: Complex64::new(0.0, 0.0), comp: Complex64::new(0.0, 0.0), compensated }
    }

    #[inline]
    fn add(&mut self, v: Complex64) {
        if !self.compensated {
            self.sum += v;
            return;
        }
        let (re, ce) = neumaier(self.sum.re, v.re);
        let (im, ci) = neumaier(self.sum.im, v.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(ce, ci);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, v: f64) -> (f64, f64) {
    let t = sum + v;
    let err = if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
    (t, err)
}

/// Windowed lattice-sum approximation `G^a` of the quasi-periodic Green function.
pub fn windowed_green(qp: &QuasiPeriodicity, w: &WindowProfile, a: f64, pt: EvalPoint) -> Result<Complex64> {
    LatticeSum::new(*qp, *w, a)?.value(pt)
}

/// Gradient of [`windowed_green`] with respect to the evaluation point.
pub fn windowed_green_gradient(
    qp: &QuasiPeriodicity,
    w: &WindowProfile,
    a: f64,
    pt: EvalPoint,
) -> Result<[Complex64; 3]> {
    LatticeSum::new(*qp, *w, a)?.gradient(pt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn free_green_examples() {
        assert!((free_green(0.0, 1.0).unwrap().re - 0.0795775).abs() < 1e-7);
        let g = free_green(PI, 1.0).unwrap();
        assert!((g.re + INV_4PI).abs() < 1e-15 && g.im.abs() < 1e-15);
        let g = free_green(2.0, 0.5).unwrap();
        let expect = Complex64::from_polar(1.0, 1.0) / (2.0 * PI);
        assert!((g - expect).norm() < 1e-16);
        assert!((g.re - 0.08601).abs() < 1e-4 && (g.im - 0.13394).abs() < 1e-4);
        assert!(free_green(1.0, 0.0).is_err());
        assert!(free_green(1.0, -1.0).is_err());
    }

    #[test]
    fn shells_cover_square_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_shell_point(0, 5, &mut |m, n| assert!(seen.insert((m, n))));
        assert_eq!(seen.len(), 121);
        assert!(seen.iter().all(|&(m, n)| m.abs() <= 5 && n.abs() <= 5));
    }

    #[test]
    fn single_static_term_gradient() {
        let qp = QuasiPeriodicity::normal(1e-300, 1.0, 1.0).unwrap();
        let sum = LatticeSum::new(qp, WindowProfile::assembly(), 1e-3).unwrap();
        let pt = EvalPoint::new(0.1, -0.2, 0.3);
        assert_eq!(sum.term_count(pt), 1);
        let r = pt.norm();
        let g = sum.gradient(pt).unwrap();
        let expect = [-pt.x, -pt.y, -pt.z].map(|c| c / (4.0 * PI * r * r * r));
        for i in 0..3 {
            assert!((g[i].re - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn z_gradient_odd_in_z() {
        let qp = QuasiPeriodicity::normal(2.5, 1.0, 1.0).unwrap();
        let w = WindowProfile::figure();
        let up = windowed_green_gradient(&qp, &w, 8.0, EvalPoint::new(0.0, 0.0, 0.4)).unwrap();
        let dn = windowed_green_gradient(&qp, &w, 8.0, EvalPoint::new(0.0, 0.0, -0.4)).unwrap();
        assert!(close(up[2], -dn[2], 1e-12));
    }

    #[test]
    fn collision_is_reported() {
        let qp = QuasiPeriodicity::normal(2.5, 1.0, 1.0).unwrap();
        let err = windowed_green(&qp, &WindowProfile::figure(), 4.0, EvalPoint::new(2.0, -1.0, 0.0)).unwrap_err();
        assert_eq!(err, Error::SingularEvaluation { m: -2, n: 1, q: 0 });
    }

    #[test]
    fn term_count_matches_support() {
        let qp = QuasiPeriodicity::normal(2.5, 1.0, 1.0).unwrap();
        let w = WindowProfile::assembly();
        let sum = LatticeSum::new(qp, w, 5.0).unwrap();
        let mut brute = 0;
        for m in -20i64..=20 {
            for n in -20i64..=20 {
                if w.value(m as f64 / 5.0, n as f64 / 5.0) > 0.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(sum.term_count(EvalPoint::new(0.1, 0.2, 0.3)), brute);
    }

    #[test]
    fn compensated_agrees_with_plain() {
        let qp = QuasiPeriodicity::new(2.5, 1.0, 1.0, 0.3, -0.2).unwrap();
        let base = LatticeSum::new(qp, WindowProfile::figure(), 30.0).unwrap();
        let pt = EvalPoint::new(0.1, 0.2, 0.5);
        let a = base.value(pt).unwrap();
        let b = base.clone().compensated(true).value(pt).unwrap();
        assert!(close(a, b, 1e-11));
    }

    #[test]
    fn gradient_matches_differences_x_dependent() {
        let qp = QuasiPeriodicity::new(3.0, 1.0, 1.2, 0.4, 0.1).unwrap();
        let w = WindowProfile::figure();
        let pt = EvalPoint::new(0.3, -0.2, 0.7);
        let g = windowed_green_gradient(&qp, &w, 6.0, pt).unwrap();
        let h = 1e-5;
        let f = |p| windowed_green(&qp, &w, 6.0, p).unwrap();
        let fd = [
            (f(pt.shifted(h, 0.0, 0.0)) - f(pt.shifted(-h, 0.0, 0.0))) / (2.0 * h),
            (f(pt.shifted(0.0, h, 0.0)) - f(pt.shifted(0.0, -h, 0.0))) / (2.0 * h),
            (f(pt.shifted(0.0, 0.0, h)) - f(pt.shifted(0.0, 0.0, -h))) / (2.0 * h),
        ];
        let scale = g.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            assert!((g[i] - fd[i]).norm() < 1e-7 * scale, "component {i}");
        }
    }
}
