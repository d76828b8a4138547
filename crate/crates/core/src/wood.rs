//! Shifted and modified quasi-periodic Green functions, usable at Wood anomalies.
//!
//! Each monopole is replaced by the `p`-th difference of sources displaced
//! to `z + q d`, `q = 0..p`, with weights `a_pq = (−1)^q C(p, q)`. The
//! resulting lattice sum converges algebraically even when a Rayleigh mode
//! grazes, but the same cancellation removes grazing modes from the far field;
//! a finite sum `v` of plane waves with coefficients `b_jl` puts them back.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{EvalPoint, LatticeSum, QuasiPeriodicity, WindowProfile, WoodMode, WOOD_EXACT_TOL};

/// Largest supported shift order.
pub const MAX_SHIFT_ORDER: usize = 5;

/// `|γ|·(|z| + p d)` below which the shifted z-factor is summed as a power series.
const SERIES_SWITCH: f64 = 1.0;

/// Which modes receive a regularizing plane wave, and with what coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BRule {
    pub grazing_threshold: f64,
    pub b_value: Complex64,
}

impl Default for BRule {
    fn default() -> Self {
        Self { grazing_threshold: 1e-2, b_value: Complex64::new(1.0, 0.0) }
    }
}

/// Shift order, shift distance and grazing-mode regularization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub p: usize,
    pub d: f64,
    pub b_rule: BRule,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self { p: 3, d: 1.4, b_rule: BRule::default() }
    }
}

impl ShiftConfig {
    pub fn new(p: usize, d: f64) -> Result<Self> {
        Self::with_rule(p, d, BRule::default())
    }

    pub fn with_rule(p: usize, d: f64, b_rule: BRule) -> Result<Self> {
        if p > MAX_SHIFT_ORDER {
            return Err(Error::Config(format!("shift order p must be at most {MAX_SHIFT_ORDER}, got {p}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Config(format!("shift distance must be positive, got {d}")));
        }
        if !(b_rule.grazing_threshold.is_finite() && b_rule.grazing_threshold > 0.0) {
            return Err(Error::Config("grazing threshold must be positive".into()));
        }
        if !(b_rule.b_value.re.is_finite() && b_rule.b_value.im.is_finite()) {
            return Err(Error::Config("b value must be finite".into()));
        }
        Ok(Self { p, d, b_rule })
    }

    /// `(a_pq, q d)` for `q = 0..=p`.
    pub fn images(&self) -> Vec<(f64, f64)> {
        binomial_weights(self.p).into_iter().enumerate().map(|(q, a)| (a as f64, q as f64 * self.d)).collect()
    }

    /// `b_jl` for a mode with vertical wavenumber `gamma`.
    pub fn b_for(&self, qp: &QuasiPeriodicity, gamma: Complex64) -> Complex64 {
        if gamma.norm() / qp.k < self.b_rule.grazing_threshold {
            self.b_rule.b_value
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Rejects shift distances for which `1 − e^{iγd}` nearly vanishes on a propagating mode.
    pub fn check_nondegenerate(&self, qp: &QuasiPeriodicity) -> Result<()> {
        if self.p == 0 {
            return Ok(());
        }
        let (j0, j1) = qp.j_range(1e-9);
        let (l0, l1) = qp.l_range(1e-9);
        for j in j0..=j1 {
            for l in l0..=l1 {
                let g = qp.gamma(j, l);
                if g.im == 0.0 && g.re > 0.0 && one_minus_cis(g * self.d).norm() <= 1e-6 {
                    return Err(Error::Config(format!(
                        "shift distance {} annihilates propagating mode ({j}, {l}); choose another d",
                        self.d
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Alternating binomial coefficients `a_pq = (−1)^q C(p, q)`.
pub fn binomial_weights(p: usize) -> Vec<i64> {
    let mut w = Vec::with_capacity(p + 1);
    let mut c: i64 = 1;
    for q in 0..=p {
        w.push(if q % 2 == 0 { c } else { -c });
        c = c * (p - q) as i64 / (q as i64 + 1);
    }
    w
}

/// `1 − e^{iθ}` without cancellation for small `θ`.
fn one_minus_cis(theta: Complex64) -> Complex64 {
    let half = theta * 0.5;
    Complex64::new(0.0, -2.0) * half.sin() * (Complex64::i() * half).exp()
}

/// Grazing and nearly grazing modes that receive a regularizing plane wave.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GrazingSet {
    pub modes: Vec<WoodMode>,
}

impl GrazingSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All modes with `|γ_jl|/k` below the configured threshold.
    pub fn detect(qp: &QuasiPeriodicity, sc: &ShiftConfig) -> Self {
        let tol = sc.b_rule.grazing_threshold;
        let (j0, j1) = qp.j_range(tol);
        let (l0, l1) = qp.l_range(tol);
        let mut modes = Vec::new();
        for j in j0..=j1 {
            for l in l0..=l1 {
                let m = qp.mode(j, l);
                let ratio = m.gamma.norm() / qp.k;
                if ratio < tol {
                    modes.push(WoodMode { mode: m, exact: ratio < WOOD_EXACT_TOL });
                }
            }
        }
        Self { modes }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn contains(&self, j: i64, l: i64) -> bool {
        self.modes.iter().any(|w| w.mode.j == j && w.mode.l == l)
    }
}

fn shifted_sum(qp: &QuasiPeriodicity, w: &WindowProfile, sc: &ShiftConfig, a: f64) -> Result<LatticeSum> {
    Ok(LatticeSum::new(*qp, *w, a)?.with_images(sc.images()))
}

/// Windowed lattice sum of the shifted Green function `Σ_q a_pq G(x + (0, 0, q d))`.
pub fn shifted_windowed_green(
    qp: &QuasiPeriodicity,
    w: &WindowProfile,
    sc: &ShiftConfig,
    a: f64,
    pt: EvalPoint,
) -> Result<Complex64> {
    shifted_sum(qp, w, sc, a)?.value(pt)
}

pub fn shifted_windowed_green_gradient(
    qp: &QuasiPeriodicity,
    w: &WindowProfile,
    sc: &ShiftConfig,
    a: f64,
    pt: EvalPoint,
) -> Result<[Complex64; 3]> {
    shifted_sum(qp, w, sc, a)?.gradient(pt)
}

/// `Σ_q (a_pq/γ) e^{iγ|z + q d|}`, continuous through `γ = 0` for `p ≥ 1`.
///
/// Returns `None` only for `p = 0` at `γ = 0`, where the factor is infinite.
pub fn shifted_z_factor(gamma: Complex64, z: f64, sc: &ShiftConfig) -> Option<Complex64> {
    let weights = binomial_weights(sc.p);
    let u: Vec<f64> = (0..=sc.p).map(|q| (z + q as f64 * sc.d).abs()).collect();
    let span = z.abs() + sc.p as f64 * sc.d;
    if sc.p == 0 {
        if gamma.norm() == 0.0 {
            return None;
        }
        return Some((Complex64::i() * gamma * u[0]).exp() / gamma);
    }
    if gamma.norm() * span >= SERIES_SWITCH {
        let mut s = Complex64::new(0.0, 0.0);
        for (q, &a) in weights.iter().enumerate() {
            s += (Complex64::i() * gamma * u[q]).exp() * a as f64;
        }
        return Some(s / gamma);
    }
    // Σ_q a_pq e^{iγu_q}/γ = Σ_{j≥1} i^j γ^{j−1} M_j / j! with M_j = Σ_q a_pq u_q^j;
    // the j = 0 term drops out because Σ_q a_pq = 0.
    let moment = |j: i32| -> f64 { weights.iter().zip(&u).map(|(&a, &uq)| a as f64 * uq.powi(j)).sum() };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::i();
    for j in 1..80 {
        let term = coef * moment(j);
        sum += term;
        if j > 4 && term.norm() <= 1e-18 * sum.norm().max(span) {
            break;
        }
        coef *= Complex64::i() * gamma / (j + 1) as f64;
    }
    Some(sum)
}

/// Rayleigh-series form of the shifted Green function; finite at exact Wood anomalies when `p ≥ 1`.
pub fn shifted_fourier_green(
    qp: &QuasiPeriodicity,
    sc: &ShiftConfig,
    pt: EvalPoint,
    j_max: usize,
) -> Result<Complex64> {
    for q in 0..=sc.p {
        if pt.z + q as f64 * sc.d == 0.0 {
            return Err(Error::Domain(format!("point lies on the source plane of image q={q}")));
        }
    }
    let jm = j_max as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut wood = Vec::new();
    for l in -jm..=jm {
        let by = Complex64::from_polar(1.0, qp.beta_l(l) * pt.y);
        for j in -jm..=jm {
            let g = qp.gamma(j, l);
            match shifted_z_factor(g, pt.z, sc) {
                Some(zf) => sum += Complex64::from_polar(1.0, qp.alpha_j(j) * pt.x) * by * zf,
                None => wood.push((j, l)),
            }
        }
    }
    if !wood.is_empty() {
        return Err(Error::WoodAnomaly { modes: wood });
    }
    Ok(sum * Complex64::new(0.0, 0.5 / (qp.d1 * qp.d2)))
}

/// Plane-wave regularizer `v = i/(2 d1 d2) Σ_U b_jl e^{i(α_j x + β_l y + γ_jl z)}`.
pub fn regularizer_v(qp: &QuasiPeriodicity, sc: &ShiftConfig, grazing: &GrazingSet, pt: EvalPoint) -> Complex64 {
    regularizer_v_with_gradient(qp, sc, grazing, pt).0
}

pub fn regularizer_v_gradient(
    qp: &QuasiPeriodicity,
    sc: &ShiftConfig,
    grazing: &GrazingSet,
    pt: EvalPoint,
) -> [Complex64; 3] {
    regularizer_v_with_gradient(qp, sc, grazing, pt).1
}

pub fn regularizer_v_with_gradient(
    qp: &QuasiPeriodicity,
    sc: &ShiftConfig,
    grazing: &GrazingSet,
    pt: EvalPoint,
) -> (Complex64, [Complex64; 3]) {
    let zero = Complex64::new(0.0, 0.0);
    let mut v = zero;
    let mut g = [zero; 3];
    let b = sc.b_rule.b_value;
    let pref = Complex64::new(0.0, 0.5 / (qp.d1 * qp.d2)) * b;
    for wm in &grazing.modes {
        let m = &wm.mode;
        let t = pref * (Complex64::i() * (m.alpha_j * pt.x + m.beta_l * pt.y + m.gamma * pt.z)).exp();
        v += t;
        let it = Complex64::i() * t;
        g[0] += it * m.alpha_j;
        g[1] += it * m.beta_l;
        g[2] += it * m.gamma;
    }
    (v, g)
}

/// Modified Green function: shifted windowed sum plus the grazing-mode regularizer.
pub fn modified_green(
    qp: &QuasiPeriodicity,
    w: &WindowProfile,
    sc: &ShiftConfig,
    grazing: &GrazingSet,
    a: f64,
    pt: EvalPoint,
) -> Result<Complex64> {
    Ok(shifted_windowed_green(qp, w, sc, a, pt)? + regularizer_v(qp, sc, grazing, pt))
}

pub fn modified_green_gradient(
    qp: &QuasiPeriodicity,
    w: &WindowProfile,
    sc: &ShiftConfig,
    grazing: &GrazingSet,
    a: f64,
    pt: EvalPoint,
) -> Result<[Complex64; 3]> {
    let g = shifted_windowed_green_gradient(qp, w, sc, a, pt)?;
    let v = regularizer_v_gradient(qp, sc, grazing, pt);
    Ok([g[0] + v[0], g[1] + v[1], g[2] + v[2]])
}

/// Far-field factor relating the density moment `c_jl` to the Rayleigh amplitude `B_jl`
/// for the modified kernel.
pub fn wood_factor(qp: &QuasiPeriodicity, sc: &ShiftConfig, j: i64, l: i64) -> Complex64 {
    let g = qp.gamma(j, l);
    wood_factor_for_gamma(g, qp, sc)
}

pub(crate) fn wood_factor_for_gamma(g: Complex64, qp: &QuasiPeriodicity, sc: &ShiftConfig) -> Complex64 {
    let b = sc.b_for(qp, g);
    if g.norm() / qp.k < WOOD_EXACT_TOL {
        let delta = if sc.p == 1 { Complex64::new(0.0, -sc.d) } else { Complex64::new(0.0, 0.0) };
        return delta + b;
    }
    one_minus_cis(g * sc.d).powu(sc.p as u32) / g + b
}
