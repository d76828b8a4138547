use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_grating, IncidentWave, SolverConfig};
use crate::bie::GratingSurface;
use crate::error::{Error, Result};
use crate::lattice::{EvalPoint, LatticeSum, QuasiPeriodicity, WindowProfile};
use crate::wood::{regularizer_v, GrazingSet, ShiftConfig};

/// Green function studied by [`green_convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GreenKernel {
    Plain,
    Shifted(ShiftConfig),
    Modified(ShiftConfig),
}

/// Successive differences `max_K |G_{a_{i+1}} − G_{a_i}|` against `a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub a: Vec<f64>,
    pub diff: Vec<f64>,
    /// Least-squares log-log slope over the last five differences.
    pub slope: f64,
    /// Exactly grazing modes of the configuration.
    pub wood_modes: Vec<(i64, i64)>,
}

/// Least-squares slope of `ln y` against `ln x`; zero values are floored at the smallest positive double.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = x[..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y[..n].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Evaluation set of the convergence figures: differences `x − x̂` with `x̂ = (0, 0, 1)` and `x`
/// on an evenly spaced grid of `[0, 0.6]² × [0.6, 1.4]`, the source point itself excluded.
pub fn figure_points(per_axis: usize) -> Vec<EvalPoint> {
    let steps = per_axis.max(2);
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (steps - 1) as f64;
    let mut out = Vec::with_capacity(steps * steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            for l in 0..steps {
                let pt = EvalPoint::new(lin(0.0, 0.6, i), lin(0.0, 0.6, j), lin(0.6, 1.4, l) - 1.0);
                if pt.norm() > 1e-12 {
                    out.push(pt);
                }
            }
        }
    }
    out
}

/// Tabulates successive differences of the windowed Green function over the schedule `a`.
pub fn green_convergence_study(
    qp: &QuasiPeriodicity,
    window: &WindowProfile,
    kernel: GreenKernel,
    a_schedule: &[f64],
    points: &[EvalPoint],
) -> Result<ConvergenceStudy> {
    if a_schedule.len() < 2 || a_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("the a schedule needs at least two increasing values".into()));
    }
    if points.is_empty() {
        return Err(Error::Config("the evaluation set K is empty".into()));
    }
    let (images, grazing, sc) = match kernel {
        GreenKernel::Plain => (vec![(1.0, 0.0)], GrazingSet::empty(), ShiftConfig::default()),
        GreenKernel::Shifted(sc) => (sc.images(), GrazingSet::empty(), sc),
        GreenKernel::Modified(sc) => (sc.images(), GrazingSet::detect(qp, &sc), sc),
    };
    let values: Vec<Vec<Complex64>> = a_schedule
        .iter()
        .map(|&a| {
            let sum = LatticeSum::new(*qp, *window, a)?.with_images(images.clone());
            points
                .par_iter()
                .map(|&pt| Ok(sum.value(pt)? + regularizer_v(qp, &sc, &grazing, pt)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let diff: Vec<f64> =
        values.windows(2).map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).norm()).fold(0.0, f64::max)).collect();
    let a: Vec<f64> = a_schedule[..diff.len()].to_vec();
    let tail = diff.len().saturating_sub(5);
    let slope = fit_slope(&a[tail..], &diff[tail..]);
    Ok(ConvergenceStudy { a, diff, slope, wood_modes: qp.exact_wood_modes() })
}

/// Summary of one incidence angle of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    pub psi: f64,
    pub b00: f64,
    pub b_m1_m1: f64,
    pub b_m1_p1: f64,
    pub energy_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wood: bool,
    pub error: Option<String>,
}

/// Solves the grating problem at each `psi`; a failed angle is recorded and the sweep continues.
pub fn angle_sweep(surface: &GratingSurface, k: f64, phi: f64, psis: &[f64], cfg: &SolverConfig) -> Vec<AngleRow> {
    psis.par_iter()
        .map(|&psi| {
            let run = IncidentWave::new(k, psi, phi).and_then(|w| solve_grating(surface, &w, cfg).map(|r| (w, r)));
            match run {
                Ok((_, r)) => AngleRow {
                    psi,
                    b00: r.spectrum.amplitude(0, 0).norm(),
                    b_m1_m1: r.spectrum.amplitude(-1, -1).norm(),
                    b_m1_p1: r.spectrum.amplitude(-1, 1).norm(),
                    energy_error: Some(r.energy_error),
                    iterations: r.solve.iterations,
                    converged: r.solve.converged,
                    wood: !r.wood_modes.is_empty(),
                    error: None,
                },
                Err(e) => AngleRow {
                    psi,
                    b00: f64::NAN,
                    b_m1_m1: f64::NAN,
                    b_m1_p1: f64::NAN,
                    energy_error: None,
                    iterations: 0,
                    converged: false,
                    wood: IncidentWave::new(k, psi, phi)
                        .and_then(|w| w.quasi_periodicity(surface.d1, surface.d2))
                        .map(|qp| !qp.exact_wood_modes().is_empty())
                        .unwrap_or(false),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
