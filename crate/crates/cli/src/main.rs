mod args;
mod cache;
mod report;

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;

use clap::Parser;
use num_complex::Complex64;
use qpgreen::bie::{BoundaryCondition, CombinedFieldParams, GratingSurface, KernelChoice};
use qpgreen::lattice::{QuasiPeriodicity, WindowProfile};
use qpgreen::scattering::{
    angle_sweep, coefficient_error, figure_points, fit_slope, green_convergence_study, solve_grating, GreenKernel,
    IncidentWave, ScatterResult, SolverConfig,
};
use qpgreen::wood::{BRule, ShiftConfig};
use serde::Serialize;
use serde_json::{json, Map, Value};

use args::{BcArg, Cli, Command, GreenArgs, KernelArg, ShiftArgs, SolveArgs, SurfaceArgs, SweepArgs};

const PERIOD: f64 = 1.0;
/// `|γ|/k` below which a mode counts as near grazing for warnings and the kernel default.
const NEAR_WOOD: f64 = 1e-2;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl From<qpgreen::Error> for Failure {
    fn from(e: qpgreen::Error) -> Self {
        match e {
            qpgreen::Error::Config(_) | qpgreen::Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn usage(msg: String) -> Failure {
    Failure::Usage(msg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GreenConvergence(a) => green_convergence(&a),
        Command::GratingSolve(a) => grating_solve(&a),
        Command::AngleSweep(a) => sweep(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: not every solve converged");
            ExitCode::from(1)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn shift_config(s: &ShiftArgs) -> Result<ShiftConfig, Failure> {
    let rule = BRule { b_value: Complex64::new(s.b_value, 0.0), ..BRule::default() };
    Ok(ShiftConfig::with_rule(s.p, s.d, rule)?)
}

fn kernel_name(k: KernelChoice) -> &'static str {
    match k {
        KernelChoice::Plain => "plain",
        KernelChoice::Shifted => "shifted",
        KernelChoice::Modified => "modified",
    }
}

fn choice(k: KernelArg) -> KernelChoice {
    match k {
        KernelArg::Plain => KernelChoice::Plain,
        KernelArg::Shifted => KernelChoice::Shifted,
        KernelArg::Modified => KernelChoice::Modified,
    }
}

fn near_wood_modes(qp: &QuasiPeriodicity) -> Vec<(i64, i64)> {
    let j_max = ((qp.k + qp.alpha.abs().max(qp.beta.abs())) * qp.d1.max(qp.d2) / (2.0 * PI)).ceil() as usize + 2;
    qp.wood_modes(j_max, NEAR_WOOD).iter().map(|m| (m.mode.j, m.mode.l)).collect()
}

/// Warning emitted when the plain lattice sum is used at or near a Wood anomaly.
fn wood_warning(qp: &QuasiPeriodicity, kernel: KernelChoice) -> Option<String> {
    if kernel != KernelChoice::Plain {
        return None;
    }
    let exact = qp.exact_wood_modes();
    if !exact.is_empty() {
        return Some(format!(
            "warning: Wood anomaly, grazing modes {exact:?}; the plain lattice sum does not converge"
        ));
    }
    let near = near_wood_modes(qp);
    (!near.is_empty())
        .then(|| format!("warning: modes {near:?} are nearly grazing; the plain lattice sum converges slowly"))
}

fn surface(s: &SurfaceArgs) -> Result<GratingSurface, Failure> {
    Ok(match args::parse_surface(&s.surface).map_err(usage)? {
        None => GratingSurface::flat(PERIOD, PERIOD)?,
        Some(amp) => GratingSurface::cos_cos(amp, PERIOD, PERIOD)?,
    })
}

fn bc(b: BcArg) -> BoundaryCondition {
    match b {
        BcArg::Dirichlet => BoundaryCondition::Dirichlet,
        BcArg::Neumann => BoundaryCondition::Neumann,
    }
}

fn combined_field(s: &SurfaceArgs, k: f64) -> Result<CombinedFieldParams, Failure> {
    let d = CombinedFieldParams::for_wavenumber(k);
    Ok(CombinedFieldParams::new(s.eta.unwrap_or(d.eta), s.xi.unwrap_or(d.xi))?)
}

fn bloch(raw: &Option<String>, scaled: bool) -> Result<(f64, f64), Failure> {
    let (a, b) = match raw {
        Some(s) => args::parse_pair(s).map_err(usage)?,
        None => (0.0, 0.0),
    };
    let unit = if scaled { 2.0 * PI / PERIOD } else { 1.0 };
    Ok((a * unit, b * unit))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("{w}");
    }
}

#[derive(Serialize)]
struct GreenRow {
    a: f64,
    diff: f64,
    /// Log-log slope over the last five rows up to this one.
    slope: Option<f64>,
}

fn green_convergence(g: &GreenArgs) -> Result<bool, Failure> {
    let k = args::resolve_k(&g.wave, ("0.4", true), PERIOD).map_err(usage)?;
    let (alpha, beta) = bloch(&g.bloch, k.scaled)?;
    let qp = QuasiPeriodicity::new(k.value, PERIOD, PERIOD, alpha, beta)?;
    let sc = shift_config(&g.shift)?;
    let kind = g.shift.kernel.unwrap_or(KernelArg::Plain);
    let kernel = match kind {
        KernelArg::Plain => GreenKernel::Plain,
        KernelArg::Shifted => GreenKernel::Shifted(sc),
        KernelArg::Modified => GreenKernel::Modified(sc),
    };
    let schedule = args::parse_schedule(&g.a_schedule).map_err(usage)?;
    let window = WindowProfile::figure();
    let points = figure_points(g.points);
    let study = green_convergence_study(&qp, &window, kernel, &schedule, &points)?;
    let warnings: Vec<String> = wood_warning(&qp, choice(kind)).into_iter().collect();
    warn_all(&warnings);
    let rows: Vec<GreenRow> = (0..study.a.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(5);
            let slope = (i > lo).then(|| fit_slope(&study.a[lo..=i], &study.diff[lo..=i]));
            GreenRow { a: study.a[i], diff: study.diff[i], slope }
        })
        .collect();
    let config = json!({
        "k_input": k.input,
        "units": if k.scaled { "scaled-2pi" } else { "absolute" },
        "k": qp.k,
        "period": [PERIOD, PERIOD],
        "bloch": [qp.alpha, qp.beta],
        "kernel": kernel,
        "window": window,
        "a_schedule": schedule,
        "evaluation_points": points.len(),
    });
    let mut extra = Map::new();
    extra.insert("slope".into(), json!(study.slope));
    extra.insert("wood_modes".into(), json!(study.wood_modes));
    extra.insert("warnings".into(), json!(warnings));
    report::emit(&g.output, "green-convergence", &rows, config, extra).map_err(Failure::Run)?;
    Ok(true)
}

#[derive(Serialize)]
struct SolveRow {
    k: f64,
    n: usize,
    a: f64,
    kernel: &'static str,
    p: usize,
    d: f64,
    bc: &'static str,
    iterations: usize,
    converged: bool,
    residual: f64,
    eps: f64,
    eps1: Option<f64>,
    b00_re: f64,
    b00_im: f64,
    wood: bool,
}

fn solve_row(r: &ScatterResult, cfg: &SolverConfig, eps1: Option<f64>) -> SolveRow {
    let plain = cfg.kernel == KernelChoice::Plain;
    let b00 = r.spectrum.amplitude(0, 0);
    SolveRow {
        k: r.qp.k,
        n: r.n,
        a: r.a,
        kernel: kernel_name(cfg.kernel),
        p: if plain { 0 } else { cfg.shift.p },
        d: if plain { 0.0 } else { cfg.shift.d },
        bc: match cfg.bc {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        },
        iterations: r.solve.iterations,
        converged: r.solve.converged,
        residual: r.solve.residual,
        eps: r.energy_error,
        eps1,
        b00_re: b00.re,
        b00_im: b00.im,
        wood: !r.wood_modes.is_empty(),
    }
}

fn incident(k: f64, alpha: f64, beta: f64) -> Result<IncidentWave, Failure> {
    let t = alpha.hypot(beta);
    if t >= k {
        return Err(usage(format!("Bloch wavevector ({alpha}, {beta}) is not below the wavenumber {k}")));
    }
    Ok(IncidentWave::new(k, (t / k).asin(), beta.atan2(alpha))?)
}

fn grating_solve(s: &SolveArgs) -> Result<bool, Failure> {
    let k = args::resolve_k(&s.wave, ("1", false), PERIOD).map_err(usage)?;
    let (alpha, beta) = bloch(&s.bloch, k.scaled)?;
    let wave = incident(k.value, alpha, beta)?;
    let qp = wave.quasi_periodicity(PERIOD, PERIOD)?;
    let surf = surface(&s.surface)?;
    let ns: Vec<usize> = args::parse_list(&s.n).map_err(usage)?;
    let as_: Vec<f64> = args::parse_list(&s.a).map_err(usage)?;
    let kernel = match s.shift.kernel {
        Some(k) => choice(k),
        None if near_wood_modes(&qp).is_empty() => KernelChoice::Plain,
        None => KernelChoice::Modified,
    };
    let base = SolverConfig {
        kernel,
        shift: shift_config(&s.shift)?,
        bc: bc(s.surface.bc),
        cf: Some(combined_field(&s.surface, k.value)?),
        gmres_tol: s.surface.gmres_tol,
        ..SolverConfig::default()
    };
    let warnings: Vec<String> = wood_warning(&qp, kernel).into_iter().collect();
    warn_all(&warnings);
    let reference = if s.reference || s.ref_n.is_some() || s.ref_a.is_some() {
        let n = s.ref_n.unwrap_or_else(|| 2 * ns.iter().max().unwrap());
        let a = s.ref_a.unwrap_or_else(|| 4.0 * as_.iter().cloned().fold(0.0, f64::max));
        let cfg = SolverConfig { n, a, ..base.clone() };
        let dir = s.cache_dir.clone().unwrap_or_else(|| std::env::temp_dir().join("qpgreen-cache"));
        Some((cache::reference_solve(&dir, &surf, &wave, &cfg)?, cfg))
    } else {
        None
    };
    let mut rows = Vec::new();
    for &n in &ns {
        for &a in &as_ {
            let cfg = SolverConfig { n, a, ..base.clone() };
            let r = solve_grating(&surf, &wave, &cfg)?;
            let eps1 = match &reference {
                Some((rf, _)) => Some(coefficient_error(&r.spectrum, &rf.spectrum)?),
                None => None,
            };
            rows.push(solve_row(&r, &cfg, eps1));
        }
    }
    let all_converged = rows.iter().all(|r| r.converged) && reference.as_ref().map_or(true, |(r, _)| r.solve.converged);
    let config = json!({
        "k_input": k.input,
        "units": if k.scaled { "scaled-2pi" } else { "absolute" },
        "k": qp.k,
        "period": [PERIOD, PERIOD],
        "bloch": [qp.alpha, qp.beta],
        "incidence": wave,
        "surface": s.surface.surface,
        "solver": base,
        "n": ns,
        "a": as_,
    });
    let mut extra = Map::new();
    extra.insert("warnings".into(), json!(warnings));
    extra.insert("wood_modes".into(), json!(qp.exact_wood_modes()));
    extra.insert(
        "reference".into(),
        match &reference {
            Some((r, cfg)) => serde_json::to_value(solve_row(r, cfg, None)).map_err(|e| Failure::Run(e.to_string()))?,
            None => Value::Null,
        },
    );
    report::emit(&s.output, "grating-solve", &rows, config, extra).map_err(Failure::Run)?;
    Ok(all_converged)
}

/// `m` angles evenly spread over `center ± halfwidth`; the centre is hit exactly when `m` is odd.
fn sweep_angles(center: f64, halfwidth: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![center];
    }
    (0..m)
        .map(|i| {
            let t = (2 * i) as f64 / (m - 1) as f64 - 1.0;
            center + halfwidth * t
        })
        .collect()
}

fn sweep(s: &SweepArgs) -> Result<bool, Failure> {
    let k = args::resolve_k(&s.wave, ("2sqrt2pi", false), PERIOD).map_err(usage)?;
    if s.angles == 0 {
        return Err(usage("--angles must be at least 1".into()));
    }
    let surf = surface(&s.surface)?;
    let psis = sweep_angles(s.psi_center.unwrap_or(FRAC_PI_4), s.psi_halfwidth, s.angles);
    let kernel = choice(s.shift.kernel.unwrap_or(KernelArg::Modified));
    let cfg = SolverConfig {
        n: s.n,
        a: s.a,
        kernel,
        shift: shift_config(&s.shift)?,
        bc: bc(s.surface.bc),
        cf: Some(combined_field(&s.surface, k.value)?),
        gmres_tol: s.surface.gmres_tol,
        ..SolverConfig::default()
    };
    let mut warnings = Vec::new();
    for &psi in &psis {
        let qp = IncidentWave::new(k.value, psi, s.phi).and_then(|w| w.quasi_periodicity(PERIOD, PERIOD))?;
        warnings.extend(wood_warning(&qp, kernel).map(|w| format!("{w} (psi = {psi})")));
    }
    warn_all(&warnings);
    let rows = angle_sweep(&surf, k.value, s.phi, &psis, &cfg);
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("error at psi = {}: {e}", r.psi);
        }
    }
    let config = json!({
        "k_input": k.input,
        "units": if k.scaled { "scaled-2pi" } else { "absolute" },
        "k": k.value,
        "period": [PERIOD, PERIOD],
        "phi": s.phi,
        "psi": psis,
        "surface": s.surface.surface,
        "solver": cfg,
    });
    let mut extra = Map::new();
    extra.insert("warnings".into(), json!(warnings));
    report::emit(&s.output, "angle-sweep", &rows, config, extra).map_err(Failure::Run)?;
    Ok(rows.iter().all(|r| r.converged && r.error.is_none()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_sweep_hits_centre() {
        let p = sweep_angles(FRAC_PI_4, 0.05, 7);
        assert_eq!(p.len(), 7);
        assert_eq!(p[3], FRAC_PI_4);
        assert!((p[0] - (FRAC_PI_4 - 0.05)).abs() < 1e-15 && (p[6] - (FRAC_PI_4 + 0.05)).abs() < 1e-15);
        assert_eq!(sweep_angles(0.3, 0.1, 1), vec![0.3]);
    }

    #[test]
    fn incident_from_bloch() {
        let w = incident(2.0, 0.6, -0.8).unwrap();
        assert!((w.alpha() - 0.6).abs() < 1e-14 && (w.beta() + 0.8).abs() < 1e-14);
        assert!(incident(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn warning_only_for_plain_near_wood() {
        let wood = QuasiPeriodicity::normal(2.0 * PI, 1.0, 1.0).unwrap();
        assert!(wood_warning(&wood, KernelChoice::Plain).unwrap().contains("(0, 1)"));
        assert!(wood_warning(&wood, KernelChoice::Modified).is_none());
        let far = QuasiPeriodicity::normal(1.0, 1.0, 1.0).unwrap();
        assert!(wood_warning(&far, KernelChoice::Plain).is_none());
    }
}
