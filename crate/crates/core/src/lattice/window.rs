use serde::{Deserialize, Serialize};

/// Profile of the cutoff on the transition band `[A, B]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowShape {
    /// `exp(2e^{1/(1−x)}/(x−2))` with `x = 1 + (u−A)/(B−A)`; smooth to all orders.
    FigureBump,
    /// Quintic smoothstep `1 − (6t⁵ − 15t⁴ + 10t³)`, twice continuously differentiable.
    PolynomialBlend,
}

/// Smooth cutoff `χ` used to truncate lattice sums.
///
/// Arguments are normalized lattice coordinates `s = (m d1 [+ x])/a`,
/// `t = (n d2 [+ y])/a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowProfile {
    pub inner: f64,
    pub outer: f64,
    pub shape: WindowShape,
    pub separable: bool,
    pub x_dependent: bool,
}

impl Default for WindowProfile {
    fn default() -> Self {
        Self::figure()
    }
}

impl WindowProfile {
    /// Separable, evaluation-point dependent bump used for Green-function convergence plots.
    pub const fn figure() -> Self {
        Self { inner: 1.0, outer: 2.0, shape: WindowShape::FigureBump, separable: true, x_dependent: true }
    }

    /// Radial bump with fixed lattice weights, used when assembling integral operators.
    pub const fn assembly() -> Self {
        Self { inner: 1.0, outer: 2.0, shape: WindowShape::FigureBump, separable: false, x_dependent: false }
    }

    pub fn with_shape(mut self, shape: WindowShape) -> Self {
        self.shape = shape;
        self
    }

    /// One-dimensional profile at normalized radius `u ≥ 0`.
    pub fn profile(&self, u: f64) -> f64 {
        self.profile_with_derivative(u).0
    }

    /// Profile value and its derivative with respect to `u`.
    pub fn profile_with_derivative(&self, u: f64) -> (f64, f64) {
        let u = u.abs();
        if u <= self.inner {
            return (1.0, 0.0);
        }
        if u >= self.outer {
            return (0.0, 0.0);
        }
        let width = self.outer - self.inner;
        let t = (u - self.inner) / width;
        match self.shape {
            WindowShape::FigureBump => {
                let x = 1.0 + t;
                let one_minus = 1.0 - x;
                let x_minus_two = x - 2.0;
                // e^{1/(1−x)} underflows long before the bump leaves 1, which is the right limit.
                let e = (1.0 / one_minus).exp();
                let h = 2.0 * e / x_minus_two;
                let value = h.exp();
                if value == 0.0 || e == 0.0 {
                    return (value, 0.0);
                }
                let e_over_sq = (1.0 / one_minus - 2.0 * one_minus.abs().ln()).exp();
                let dh = 2.0 * (e_over_sq / x_minus_two - e / (x_minus_two * x_minus_two));
                (value, value * dh / width)
            }
            WindowShape::PolynomialBlend => {
                let t2 = t * t;
                let t3 = t2 * t;
                let s = t3 * (10.0 - 15.0 * t + 6.0 * t2);
                let ds = 30.0 * t2 * (1.0 - t) * (1.0 - t);
                (1.0 - s, -ds / width)
            }
        }
    }

    /// `χ(s, t)`: radial `χ(√(s²+t²))` or separable `χ(s)χ(t)`.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        if self.separable {
            self.profile(s) * self.profile(t)
        } else {
            self.profile(s.hypot(t))
        }
    }

    /// `χ(s, t)` with its partial derivatives in `s` and `t`.
    pub fn value_with_gradient(&self, s: f64, t: f64) -> (f64, f64, f64) {
        if self.separable {
            let (ps, dps) = self.profile_with_derivative(s);
            let (pt, dpt) = self.profile_with_derivative(t);
            (ps * pt, dps * s.signum() * pt, ps * dpt * t.signum())
        } else {
            let u = s.hypot(t);
            let (p, dp) = self.profile_with_derivative(u);
            if dp == 0.0 {
                (p, 0.0, 0.0)
            } else {
                (p, dp * s / u, dp * t / u)
            }
        }
    }

    /// Half-width, in normalized units, of the square containing the support.
    pub fn reach(&self) -> f64 {
        self.outer
    }

    pub fn is_valid(&self) -> bool {
        self.inner.is_finite() && self.outer.is_finite() && self.inner > 0.0 && self.outer > self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_bump_examples() {
        let w = WindowProfile::figure();
        assert_eq!(w.profile(0.5), 1.0);
        let expected = (-4.0 * (-2.0f64).exp()).exp();
        assert!((w.profile(1.5) - expected).abs() < 1e-15);
        assert!((w.profile(1.5) - 0.58203).abs() < 1e-4);
        assert_eq!(w.profile(2.5), 0.0);
    }

    #[test]
    fn blend_examples() {
        let w = WindowProfile::figure().with_shape(WindowShape::PolynomialBlend);
        assert_eq!(w.profile(0.9), 1.0);
        assert!((w.profile(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(w.profile(2.0), 0.0);
    }

    #[test]
    fn monotone_and_bounded() {
        for shape in [WindowShape::FigureBump, WindowShape::PolynomialBlend] {
            let w = WindowProfile::figure().with_shape(shape);
            let mut prev = 1.0;
            for i in 0..=4000 {
                let u = 0.5 + 2.0 * i as f64 / 4000.0;
                let v = w.profile(u);
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev + 1e-15, "not monotone at u={u}");
                if u > 1.05 && u < 1.95 {
                    assert!(v > 0.0 && v < 1.0);
                }
                prev = v;
            }
        }
    }

    #[test]
    fn derivative_matches_differences() {
        for shape in [WindowShape::FigureBump, WindowShape::PolynomialBlend] {
            let w = WindowProfile::figure().with_shape(shape);
            for i in 1..40 {
                let u = 1.0 + i as f64 / 40.0;
                let h = 1e-6;
                let fd = (w.profile(u + h) - w.profile(u - h)) / (2.0 * h);
                let (_, d) = w.profile_with_derivative(u);
                assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "u={u} fd={fd} d={d}");
            }
        }
    }

    #[test]
    fn separable_and_radial_agree_on_axes() {
        let s = WindowProfile::figure();
        let r = WindowProfile { separable: false, ..s };
        for i in 0..30 {
            let u = i as f64 * 0.1;
            assert!((s.value(u, 0.0) - r.value(u, 0.0)).abs() < 1e-15);
        }
        assert!(r.value(1.5, 1.5) == 0.0);
        assert!(s.value(1.5, 1.5) > 0.0);
    }

    #[test]
    fn gradient_matches_differences() {
        for w in [WindowProfile::figure(), WindowProfile::assembly()] {
            for &(s, t) in &[(1.2, 0.3), (-0.7, 1.4), (1.1, -1.1), (0.2, 0.1)] {
                let h = 1e-6;
                let (_, gs, gt) = w.value_with_gradient(s, t);
                let fs = (w.value(s + h, t) - w.value(s - h, t)) / (2.0 * h);
                let ft = (w.value(s, t + h) - w.value(s, t - h)) / (2.0 * h);
                assert!((gs - fs).abs() < 1e-6 && (gt - ft).abs() < 1e-6);
            }
        }
    }
}
