//! Dense LU and restarted GMRES for the Nyström systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESTART: usize = 50;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Direct,
    Gmres,
}

/// Outcome of a linear solve. `residual` is `‖Ax − b‖/‖b‖` recomputed from the returned solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    pub method: SolveMethod,
    pub converged: bool,
    /// Relative residual estimate after each GMRES iteration.
    pub history: Vec<f64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn relative_residual(apply: &mut impl FnMut(&[Complex64]) -> Vec<Complex64>, x: &[Complex64], b: &[Complex64]) -> f64 {
    let bn = norm(b);
    let ax = apply(x);
    let r: Vec<Complex64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
    if bn == 0.0 {
        norm(&r)
    } else {
        norm(&r) / bn
    }
}

/// LU factorization with partial pivoting.
pub fn direct_solve(matrix: &DMatrix<Complex64>, rhs: &[Complex64]) -> Result<SolveReport> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(Error::Config(format!(
            "direct solve needs a square system matching the right-hand side, got {}x{} and {}",
            n,
            matrix.ncols(),
            rhs.len()
        )));
    }
    let lu = matrix.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 0 && (max == 0.0 || min <= max * f64::EPSILON * n as f64) {
        return Err(Error::Singular { ratio: if max > 0.0 { min / max } else { 0.0 } });
    }
    let b = DVector::from_column_slice(rhs);
    let x = lu.solve(&b).ok_or(Error::Singular { ratio: 0.0 })?;
    let solution = x.as_slice().to_vec();
    let residual =
        relative_residual(&mut |v| (matrix * DVector::from_column_slice(v)).as_slice().to_vec(), &solution, rhs);
    Ok(SolveReport { solution, iterations: 1, residual, method: SolveMethod::Direct, converged: true, history: vec![] })
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations, starting from zero.
///
/// Stops once the relative residual estimate reaches `tol` or after `max_iter`
/// inner iterations in total; non-convergence is reported through `converged`.
pub fn gmres_solve(
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    rhs: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(tol > 0.0) || restart == 0 {
        return Err(Error::Config(format!("GMRES needs tol > 0 and restart >= 1, got {tol} and {restart}")));
    }
    let n = rhs.len();
    let bn = norm(rhs);
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut history = Vec::new();
    if bn == 0.0 {
        return Ok(SolveReport {
            solution: x,
            iterations: 0,
            residual: 0.0,
            method: SolveMethod::Gmres,
            converged: true,
            history,
        });
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter && !converged {
        let ax = apply(&x);
        let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bn <= tol {
            converged = true;
            break;
        }
        let m = restart.min(max_iter - iterations);
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut h = vec![vec![zero; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&v[j]);
            for (i, vi) in v.iter().enumerate() {
                let hij: Complex64 = vi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..j {
                let t = h[i][j];
                let u = h[i + 1][j];
                h[i][j] = cs[i] * t + sn[i] * u;
                h[i + 1][j] = -sn[i].conj() * t + cs[i] * u;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = zero;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            used = j + 1;
            iterations += 1;
            let est = g[j + 1].norm() / bn;
            history.push(est);
            if est <= tol {
                converged = true;
                break;
            }
            if hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in (i + 1)..used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (yi, vi) in y.iter().zip(&v) {
            for (xk, vk) in x.iter_mut().zip(vi) {
                *xk += yi * vk;
            }
        }
    }
    let residual = relative_residual(&mut apply, &x, rhs);
    Ok(SolveReport { solution: x, iterations, residual, method: SolveMethod::Gmres, converged, history })
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_system(n: usize, seed: u64) -> (DMatrix<Complex64>, Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (n as f64).sqrt()
        });
        for i in 0..n {
            a[(i, i)] += c(3.0);
        }
        let b = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (a, b)
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(3.0)]);
        let r = direct_solve(&a, &[c(4.0), c(9.0)]).unwrap();
        assert!((r.solution[0] - 2.0).norm() < 1e-15 && (r.solution[1] - 3.0).norm() < 1e-15);
    }

    #[test]
    fn identity_both_methods() {
        let b = vec![c(1.0), Complex64::new(0.0, 2.0), c(-3.0)];
        let a = DMatrix::<Complex64>::identity(3, 3);
        assert_eq!(direct_solve(&a, &b).unwrap().solution, b);
        let r = gmres_solve(|x| x.to_vec(), &b, 1e-12, 50, 500).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged && r.residual < 1e-15);
    }

    #[test]
    fn random_direct_residual() {
        let (a, b) = random_system(64, 7);
        let r = direct_solve(&a, &b).unwrap();
        assert!(r.residual <= 1e-12, "{}", r.residual);
    }

    #[test]
    fn singular_detected() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert!(matches!(direct_solve(&a, &[c(1.0), c(1.0)]), Err(Error::Singular { .. })));
    }

    #[test]
    fn gmres_agrees_with_lu_and_is_monotone() {
        let (a, b) = random_system(80, 3);
        let d = direct_solve(&a, &b).unwrap();
        let tol = 1e-10;
        let g = gmres_solve(|x| (&a * DVector::from_column_slice(x)).as_slice().to_vec(), &b, tol, 10, 500).unwrap();
        assert!(g.converged);
        let err: f64 = norm(&g.solution.iter().zip(&d.solution).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(err / norm(&d.solution) <= 10.0 * tol);
        for cycle in g.history.chunks(10) {
            for w in cycle.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let (a, b) = random_system(40, 5);
        let g = gmres_solve(|x| (&a * DVector::from_column_slice(x)).as_slice().to_vec(), &b, 1e-14, 2, 3).unwrap();
        assert!(!g.converged);
        assert_eq!(g.iterations, 3);
    }
}
