use num_complex::Complex64;

use super::{EvalPoint, QuasiPeriodicity, WOOD_EXACT_TOL};
use crate::error::{Error, Result};

/// Decay `e^{−|γ||z|}` below which the outermost retained mode is negligible.
const TAIL: f64 = 1e-16;
const MIN_JMAX: usize = 10;
const MAX_JMAX: usize = 4096;

/// Smallest `j_max ≥ 10` whose outer shell of modes has decayed below `1e−16` at height `z`.
pub fn fourier_jmax(qp: &QuasiPeriodicity, z: f64) -> usize {
    let z = z.abs();
    if z == 0.0 {
        return MAX_JMAX;
    }
    let target = -TAIL.ln() / z;
    let mut j = MIN_JMAX;
    while j < MAX_JMAX {
        if shell_min_decay(qp, j as i64) > target {
            return j;
        }
        j += 1;
    }
    MAX_JMAX
}

/// Smallest `|γ|` over evanescent modes with `max(|j|, |l|) = s`; propagating modes count as zero.
fn shell_min_decay(qp: &QuasiPeriodicity, s: i64) -> f64 {
    let mut best = f64::INFINITY;
    let mut check = |j: i64, l: i64| {
        let g = qp.gamma(j, l);
        let d = if g.re > 0.0 { 0.0 } else { g.im };
        best = best.min(d);
    };
    for i in -s..=s {
        check(i, -s);
        check(i, s);
        check(-s, i);
        check(s, i);
    }
    best
}

/// Rayleigh-series form of the quasi-periodic Green function, truncated to `|j|, |l| ≤ j_max`.
///
/// `G(x) = i/(2 d1 d2) Σ e^{i(α_j x + β_l y)} e^{iγ_jl |z|}/γ_jl`, which does
/// not exist when some `γ_jl` vanishes.
pub fn fourier_green(qp: &QuasiPeriodicity, pt: EvalPoint, j_max: usize) -> Result<Complex64> {
    if !(pt.z.is_finite() && pt.z != 0.0) {
        return Err(Error::Domain(format!("the Rayleigh series needs z ≠ 0, got {}", pt.z)));
    }
    let jm = j_max as i64;
    let mut wood = Vec::new();
    for j in -jm..=jm {
        for l in -jm..=jm {
            if qp.gamma(j, l).norm() / qp.k < WOOD_EXACT_TOL {
                wood.push((j, l));
            }
        }
    }
    if !wood.is_empty() {
        return Err(Error::WoodAnomaly { modes: wood });
    }
    let z = pt.z.abs();
    let mut sum = Complex64::new(0.0, 0.0);
    for l in -jm..=jm {
        let by = Complex64::from_polar(1.0, qp.beta_l(l) * pt.y);
        for j in -jm..=jm {
            let g = qp.gamma(j, l);
            let ax = Complex64::from_polar(1.0, qp.alpha_j(j) * pt.x);
            sum += ax * by * (Complex64::i() * g * z).exp() / g;
        }
    }
    Ok(sum * Complex64::new(0.0, 0.5 / (qp.d1 * qp.d2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_propagating_mode_far_away() {
        let qp = QuasiPeriodicity::normal(1.0, 1.0, 1.0).unwrap();
        let g = fourier_green(&qp, EvalPoint::new(0.0, 0.0, 10.0), 20).unwrap();
        let expect = Complex64::new(0.0, 0.5) * Complex64::from_polar(1.0, 10.0);
        assert!((g - expect).norm() < 1e-15);
    }

    #[test]
    fn truncation_is_stable() {
        let qp = QuasiPeriodicity::new(2.5, 1.0, 1.0, 0.3, 0.7).unwrap();
        for &z in &[0.2, 0.5, -1.4] {
            let pt = EvalPoint::new(0.13, -0.41, z);
            let a = fourier_green(&qp, pt, 20).unwrap();
            let b = fourier_green(&qp, pt, 40).unwrap();
            assert!((a - b).norm() <= 1e-10 * b.norm(), "z={z}");
        }
    }

    #[test]
    fn refuses_exact_wood() {
        let qp = QuasiPeriodicity::normal(2.0 * PI, 1.0, 1.0).unwrap();
        match fourier_green(&qp, EvalPoint::new(0.0, 0.0, 0.5), 10) {
            Err(Error::WoodAnomaly { modes }) => assert_eq!(modes.len(), 4),
            other => panic!("expected Wood error, got {other:?}"),
        }
    }

    #[test]
    fn refuses_zero_height() {
        let qp = QuasiPeriodicity::normal(1.0, 1.0, 1.0).unwrap();
        assert!(fourier_green(&qp, EvalPoint::new(0.1, 0.0, 0.0), 10).is_err());
    }

    #[test]
    fn jmax_rule() {
        let qp = QuasiPeriodicity::normal(2.5, 1.0, 1.0).unwrap();
        assert_eq!(fourier_jmax(&qp, 10.0), 10);
        let j = fourier_jmax(&qp, 0.2);
        assert!((2.0 * PI * (j as f64 - 1.0) * 0.2) < 40.0);
        assert!((-qp.gamma(j as i64, 0).im * 0.2).exp() < 1e-16);
    }
}
