//! Plane-wave scattering by a doubly periodic grating: setup, solve, Rayleigh
//! amplitudes and energy diagnostics.

mod rayleigh;
mod study;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bie::{
    assemble, sample_surface, BoundaryCondition, CombinedFieldParams, GratingSurface, KernelChoice, KernelSpec,
    QuadratureConfig, SurfaceGrid,
};
use crate::error::{Error, Result};
use crate::lattice::{QuasiPeriodicity, WindowProfile};
use crate::linsolve::{direct_solve, gmres_solve, SolveMethod, SolveReport, DEFAULT_MAX_ITER, DEFAULT_RESTART};
use crate::wood::ShiftConfig;

pub use rayleigh::{
    coefficient_error, energy_error, rayleigh_coefficients, scattered_field, spectrum_field, RayleighMode,
    RayleighSpectrum,
};
pub use study::{
    angle_sweep, figure_points, fit_slope, green_convergence_study, AngleRow, ConvergenceStudy, GreenKernel,
};

/// Plane wave `e^{i(αx + βy − γz)}` incident from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    pub k: f64,
    /// Polar angle from the downward vertical.
    pub psi: f64,
    /// Azimuth.
    pub phi: f64,
}

impl IncidentWave {
    pub fn new(k: f64, psi: f64, phi: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {k}")));
        }
        if !(psi.is_finite() && (0.0..std::f64::consts::FRAC_PI_2).contains(&psi) && phi.is_finite()) {
            return Err(Error::Config(format!("incidence angle psi must lie in [0, pi/2), got {psi}")));
        }
        Ok(Self { k, psi, phi })
    }

    pub fn normal(k: f64) -> Result<Self> {
        Self::new(k, 0.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.k * self.psi.sin() * self.phi.cos()
    }

    pub fn beta(&self) -> f64 {
        self.k * self.psi.sin() * self.phi.sin()
    }

    pub fn gamma(&self) -> f64 {
        self.k * self.psi.cos()
    }

    pub fn quasi_periodicity(&self, d1: f64, d2: f64) -> Result<QuasiPeriodicity> {
        QuasiPeriodicity::new(self.k, d1, d2, self.alpha(), self.beta())
    }
}

/// `−e^{−iγ f}` at every node: the incident field with its Bloch phase removed, negated.
pub fn dirichlet_rhs(wave: &IncidentWave, grid: &SurfaceGrid) -> Vec<Complex64> {
    let g = wave.gamma();
    grid.points.iter().map(|p| -Complex64::from_polar(1.0, -g * p.f)).collect()
}

/// `−∂u_inc/∂n` with the unit normal and the Bloch phase removed.
pub fn neumann_rhs(wave: &IncidentWave, grid: &SurfaceGrid) -> Vec<Complex64> {
    let (a, b, g) = (wave.alpha(), wave.beta(), wave.gamma());
    grid.points
        .iter()
        .map(|p| Complex64::new(0.0, a * p.fx + b * p.fy + g) * Complex64::from_polar(1.0, -g * p.f) / p.g())
        .collect()
}

/// Discretization and solver parameters of one grating solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub a: f64,
    pub kernel: KernelChoice,
    pub shift: ShiftConfig,
    pub bc: BoundaryCondition,
    /// Defaults to `ξ = 1`, `η = −k`.
    pub cf: Option<CombinedFieldParams>,
    /// Defaults to [`QuadratureConfig::for_grid`].
    pub quadrature: Option<QuadratureConfig>,
    pub window: WindowProfile,
    pub method: SolveMethod,
    pub gmres_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Largest `|j|`, `|l|` reported; defaults to the propagating range plus two.
    pub j_max: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 8,
            a: 60.0,
            kernel: KernelChoice::Modified,
            shift: ShiftConfig::default(),
            bc: BoundaryCondition::Dirichlet,
            cf: None,
            quadrature: None,
            window: WindowProfile::assembly(),
            method: SolveMethod::Gmres,
            gmres_tol: 1e-6,
            restart: DEFAULT_RESTART,
            max_iter: DEFAULT_MAX_ITER,
            j_max: None,
        }
    }
}

/// Everything a grating solve produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterResult {
    pub qp: QuasiPeriodicity,
    pub wave: IncidentWave,
    pub n: usize,
    pub a: f64,
    pub kernel: KernelChoice,
    pub shift: ShiftConfig,
    pub bc: BoundaryCondition,
    /// Periodic density at the grid nodes, ordered `q·N + p`.
    pub density: Vec<Complex64>,
    pub spectrum: RayleighSpectrum,
    pub energy_error: f64,
    pub coefficient_error: Option<f64>,
    pub solve: SolveReport,
    /// Exactly grazing modes of the configuration.
    pub wood_modes: Vec<(i64, i64)>,
    /// `false` for the Neumann formulation, whose unique solvability is not established.
    pub well_posed: bool,
}

/// Default Rayleigh index range: the propagating modes plus two.
pub(crate) fn default_jmax(qp: &QuasiPeriodicity) -> usize {
    let s1 = (qp.k + qp.alpha.abs()) * qp.d1 / (2.0 * std::f64::consts::PI);
    let s2 = (qp.k + qp.beta.abs()) * qp.d2 / (2.0 * std::f64::consts::PI);
    s1.max(s2).ceil() as usize + 2
}

/// Assembles, solves and post-processes one grating problem.
pub fn solve_grating(surface: &GratingSurface, wave: &IncidentWave, cfg: &SolverConfig) -> Result<ScatterResult> {
    let qp = wave.quasi_periodicity(surface.d1, surface.d2)?;
    if !(cfg.gmres_tol > 0.0) {
        return Err(Error::Config(format!("GMRES tolerance must be positive, got {}", cfg.gmres_tol)));
    }
    let spec = KernelSpec::new(qp, cfg.kernel, cfg.a, cfg.shift)?.with_window(cfg.window);
    let grid = sample_surface(surface, cfg.n)?;
    let qc = cfg.quadrature.unwrap_or_else(|| QuadratureConfig::for_grid(surface, cfg.n));
    let cf = cfg.cf.unwrap_or_else(|| CombinedFieldParams::for_wavenumber(qp.k));
    let sys = assemble(&spec, surface, &grid, &qc, &cf, cfg.bc)?;
    let rhs = match cfg.bc {
        BoundaryCondition::Dirichlet => dirichlet_rhs(wave, &grid),
        BoundaryCondition::Neumann => neumann_rhs(wave, &grid),
    };
    let solve = match cfg.method {
        SolveMethod::Direct => direct_solve(&sys.matrix, &rhs)?,
        SolveMethod::Gmres => gmres_solve(|x| sys.apply(x), &rhs, cfg.gmres_tol, cfg.restart, cfg.max_iter)?,
    };
    let j_max = cfg.j_max.unwrap_or_else(|| default_jmax(&qp));
    let spectrum = rayleigh_coefficients(&solve.solution, &spec, &grid, &cf, cfg.bc, j_max)?;
    let energy_error = energy_error(&spectrum, &qp)?;
    Ok(ScatterResult {
        qp,
        wave: *wave,
        n: cfg.n,
        a: cfg.a,
        kernel: cfg.kernel,
        shift: cfg.shift,
        bc: cfg.bc,
        density: solve.solution.clone(),
        spectrum,
        energy_error,
        coefficient_error: None,
        solve,
        wood_modes: qp.exact_wood_modes(),
        well_posed: cfg.bc == BoundaryCondition::Dirichlet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incident_components() {
        let w = IncidentWave::new(2.0, 0.3, 1.1).unwrap();
        let s = w.alpha().powi(2) + w.beta().powi(2) + w.gamma().powi(2);
        assert!((s - 4.0).abs() < 1e-14);
        assert!(IncidentWave::new(1.0, std::f64::consts::FRAC_PI_2, 0.0).is_err());
    }

    #[test]
    fn rhs_examples() {
        let flat = GratingSurface::flat(1.0, 1.0).unwrap();
        let grid = sample_surface(&flat, 8).unwrap();
        let w = IncidentWave::normal(1.0).unwrap();
        assert!(dirichlet_rhs(&w, &grid).iter().all(|v| (v + 1.0).norm() < 1e-15));
        assert!(neumann_rhs(&w, &grid).iter().all(|v| (v - Complex64::new(0.0, 1.0)).norm() < 1e-15));
        let graze = IncidentWave::new(1.0, std::f64::consts::FRAC_PI_2 - 1e-9, 0.0).unwrap();
        assert!(neumann_rhs(&graze, &grid).iter().all(|v| v.norm() < 1e-8));
        let cc = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let grid = sample_surface(&cc, 8).unwrap();
        let expect = -Complex64::from_polar(1.0, -0.5);
        assert!((dirichlet_rhs(&w, &grid)[0] - expect).norm() < 1e-15);
    }

    #[test]
    fn neumann_rhs_is_periodic() {
        let cc = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let w = IncidentWave::new(3.0, 0.4, 0.2).unwrap();
        let grid = sample_surface(&cc, 8).unwrap();
        let rhs = neumann_rhs(&w, &grid);
        for q in 0..8 {
            let p = 3;
            let shifted = cc.at(grid.node(p, q).x + 1.0, grid.node(p, q).y);
            let (a, b, g) = (w.alpha(), w.beta(), w.gamma());
            let v = Complex64::new(0.0, a * shifted.fx + b * shifted.fy + g)
                * Complex64::from_polar(1.0, -g * shifted.f)
                / shifted.g();
            assert!((rhs[grid.index(p, q)] - v).norm() < 1e-12);
        }
    }
}
