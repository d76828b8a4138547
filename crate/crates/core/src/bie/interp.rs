use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Periodic cardinal function of the `N`-point trigonometric interpolant on a period `d`.
///
/// `C(u) = sin(πNu/d) cot(πu/d) / N`: one at `u = 0`, zero at the other nodes.
/// The Nyquist mode is split evenly between `±N/2`, which keeps real data real.
pub fn cardinal(u: f64, n: usize, d: f64) -> f64 {
    let t = PI * u / d;
    let e = t - PI * (t / PI).round();
    let nf = n as f64;
    if e.abs() < 1e-7 {
        return 1.0 - (nf * nf + 2.0) * e * e / 6.0;
    }
    (nf * e).sin() / (nf * e.tan())
}

/// `C(x − p d/N)` for `p = 0..N`.
pub fn cardinal_weights(x: f64, n: usize, d: f64, out: &mut [f64]) {
    let h = d / n as f64;
    for (p, w) in out.iter_mut().enumerate().take(n) {
        *w = cardinal(x - p as f64 * h, n, d);
    }
}

/// Evaluates the trigonometric interpolant of grid samples at arbitrary points.
///
/// `values[q N + p]` is the sample at `(p d1/N, q d2/N)`. Coefficients come from a
/// forward 2D DFT; modes run over `−N/2..N/2` with the Nyquist terms split evenly.
pub fn fourier_interpolate(
    values: &[Complex64],
    n: usize,
    d1: f64,
    d2: f64,
    points: &[(f64, f64)],
) -> Result<Vec<Complex64>> {
    if n == 0 || n % 2 != 0 || values.len() != n * n {
        return Err(Error::Config(format!("expected {n}×{n} samples with even N, got {}", values.len())));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut coef = values.to_vec();
    for row in coef.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..n {
        for q in 0..n {
            col[q] = coef[q * n + p];
        }
        fft.process(&mut col);
        for q in 0..n {
            coef[q * n + p] = col[q] / (n * n) as f64;
        }
    }
    let half = (n / 2) as i64;
    let wave = |j: i64, u: f64, d: f64| -> Complex64 {
        if j == half {
            Complex64::new((PI * n as f64 * u / d).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, 2.0 * PI * j as f64 * u / d)
        }
    };
    let freq = |i: usize| -> i64 {
        let i = i as i64;
        if i > half {
            i - n as i64
        } else {
            i
        }
    };
    let mut ex = vec![Complex64::new(0.0, 0.0); n];
    let mut ey = vec![Complex64::new(0.0, 0.0); n];
    Ok(points
        .iter()
        .map(|&(x, y)| {
            for i in 0..n {
                ex[i] = wave(freq(i), x, d1);
                ey[i] = wave(freq(i), y, d2);
            }
            let mut s = Complex64::new(0.0, 0.0);
            for q in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for p in 0..n {
                    row += coef[q * n + p] * ex[p];
                }
                s += row * ey[q];
            }
            s
        })
        .collect())
}
