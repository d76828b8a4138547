use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bie::{BoundaryCondition, CombinedFieldParams, KernelChoice, KernelSpec, SurfaceGrid};
use crate::error::{Error, Result};
use crate::lattice::{QuasiPeriodicity, WOOD_EXACT_TOL};
use crate::wood::wood_factor;

/// Amplitude of the upgoing mode `e^{i(α_j x + β_l y + γ_jl z)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighMode {
    pub j: i64,
    pub l: i64,
    pub gamma: Complex64,
    pub amplitude: Complex64,
}

impl RayleighMode {
    pub fn is_propagating(&self) -> bool {
        self.gamma.im == 0.0 && self.gamma.re > 0.0
    }
}

/// Rayleigh amplitudes of the scattered field above the grating.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RayleighSpectrum {
    pub j_max: usize,
    /// All modes with `|j|, |l| ≤ j_max` except the exactly grazing ones.
    pub modes: Vec<RayleighMode>,
    /// Exactly grazing modes: constant in `z`, carrying no vertical flux.
    pub grazing: Vec<RayleighMode>,
}

impl RayleighSpectrum {
    pub fn get(&self, j: i64, l: i64) -> Option<&RayleighMode> {
        self.modes.iter().chain(&self.grazing).find(|m| m.j == j && m.l == l)
    }

    pub fn amplitude(&self, j: i64, l: i64) -> Complex64 {
        self.get(j, l).map(|m| m.amplitude).unwrap_or_default()
    }

    /// The propagating set `P`.
    pub fn propagating(&self) -> impl Iterator<Item = &RayleighMode> {
        self.modes.iter().filter(|m| m.is_propagating())
    }
}

/// Rayleigh amplitudes `B_jl = c_jl F_jl` from a solved density.
///
/// `c_jl` is the trapezoid moment of the density against the upgoing mode and
/// `F_jl` is `1/γ_jl` for the plain kernel or the shifted far-field factor.
pub fn rayleigh_coefficients(
    density: &[Complex64],
    spec: &KernelSpec,
    grid: &SurfaceGrid,
    cf: &CombinedFieldParams,
    bc: BoundaryCondition,
    j_max: usize,
) -> Result<RayleighSpectrum> {
    let n = grid.n;
    if density.len() != n * n {
        return Err(Error::Config(format!("density has {} values, grid has {}", density.len(), n * n)));
    }
    let qp = &spec.qp;
    let jm = j_max as i64;
    let scale = grid.h1 * grid.h2 / (2.0 * qp.d1 * qp.d2);
    let (amp_a, amp_c) = match bc {
        BoundaryCondition::Dirichlet => (Complex64::new(-cf.eta, 0.0), cf.xi),
        BoundaryCondition::Neumann => (Complex64::i(), 0.0),
    };
    let mut out = RayleighSpectrum { j_max, ..Default::default() };
    for l in -jm..=jm {
        for j in -jm..=jm {
            let m = qp.mode(j, l);
            let g = m.gamma;
            let exact = g.norm() / qp.k < WOOD_EXACT_TOL;
            let factor = match spec.choice {
                KernelChoice::Plain => {
                    if exact {
                        return Err(Error::WoodAnomaly { modes: vec![(j, l)] });
                    }
                    1.0 / g
                }
                _ => wood_factor(qp, &spec.shift, j, l),
            };
            let kx = 2.0 * PI * j as f64 / qp.d1;
            let ky = 2.0 * PI * l as f64 / qp.d2;
            let mut c = Complex64::new(0.0, 0.0);
            for (p, phi) in grid.points.iter().zip(density) {
                let slope = -m.alpha_j * p.fx - m.beta_l * p.fy;
                let weight = amp_a * p.g() + (g + slope) * amp_c;
                let phase = Complex64::new(0.0, -(kx * p.x + ky * p.y)).exp() * (-Complex64::i() * g * p.f).exp();
                c += phi * phase * weight;
            }
            let mode = RayleighMode { j, l, gamma: g, amplitude: c * scale * factor };
            if exact {
                out.grazing.push(mode);
            } else {
                out.modes.push(mode);
            }
        }
    }
    Ok(out)
}

/// `ε = |Σ_P γ_jl |B_jl|² − γ_00| / γ_00`.
pub fn energy_error(spectrum: &RayleighSpectrum, qp: &QuasiPeriodicity) -> Result<f64> {
    let g00 = qp.gamma(0, 0);
    if !(g00.im == 0.0 && g00.re > 0.0) {
        return Err(Error::UndefinedMetric("energy error needs a propagating specular mode".into()));
    }
    let flux: f64 = spectrum.propagating().map(|m| m.gamma.re * m.amplitude.norm_sqr()).sum();
    Ok((flux - g00.re).abs() / g00.re)
}

/// `ε1 = |B_00 − B_00^ref| / |B_00^ref|`.
pub fn coefficient_error(spectrum: &RayleighSpectrum, reference: &RayleighSpectrum) -> Result<f64> {
    let (b, r) = match (spectrum.get(0, 0), reference.get(0, 0)) {
        (Some(b), Some(r)) => (b.amplitude, r.amplitude),
        _ => return Err(Error::UndefinedMetric("both spectra must contain mode (0, 0)".into())),
    };
    if r.norm() == 0.0 {
        return Err(Error::UndefinedMetric("reference B_00 vanishes".into()));
    }
    Ok((b - r).norm() / r.norm())
}

/// Rayleigh series `Σ B_jl e^{i(α_j x + β_l y + γ_jl z)}` at a point above the grating.
pub fn spectrum_field(spectrum: &RayleighSpectrum, qp: &QuasiPeriodicity, pt: [f64; 3]) -> Complex64 {
    spectrum
        .modes
        .iter()
        .chain(&spectrum.grazing)
        .map(|m| {
            let arg = Complex64::new(0.0, qp.alpha_j(m.j) * pt[0] + qp.beta_l(m.l) * pt[1])
                + Complex64::i() * m.gamma * pt[2];
            m.amplitude * arg.exp()
        })
        .sum()
}

/// Scattered field at `pt` from the layer potential itself, by the trapezoid rule on the grid.
///
/// Only accurate away from the surface, where the integrand is smooth.
pub fn scattered_field(
    density: &[Complex64],
    spec: &KernelSpec,
    grid: &SurfaceGrid,
    cf: &CombinedFieldParams,
    bc: BoundaryCondition,
    pt: [f64; 3],
) -> Result<Complex64> {
    let qp = &spec.qp;
    let mut u = Complex64::new(0.0, 0.0);
    for (p, phi) in grid.points.iter().zip(density) {
        let r = [pt[0] - p.x, pt[1] - p.y, pt[2] - p.f];
        let (g, dg) = spec.evaluate(r)?;
        let bloch = Complex64::from_polar(1.0, qp.alpha * p.x + qp.beta * p.y);
        let nrm = p.normal();
        let kernel = match bc {
            BoundaryCondition::Dirichlet => {
                let dl = -(dg[0] * nrm[0] + dg[1] * nrm[1] + dg[2] * nrm[2]);
                Complex64::new(0.0, cf.eta * p.g()) * g + dl * cf.xi
            }
            BoundaryCondition::Neumann => g * p.g(),
        };
        u += kernel * bloch * phi;
    }
    Ok(u * grid.h1 * grid.h2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bie::{sample_surface, GratingSurface};
    use crate::wood::ShiftConfig;

    #[test]
    fn zero_density_zero_spectrum() {
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let grid = sample_surface(&s, 8).unwrap();
        let qp = QuasiPeriodicity::normal(2.0 * PI, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Modified, 10.0, ShiftConfig::default()).unwrap();
        let cf = CombinedFieldParams::for_wavenumber(qp.k);
        let sp =
            rayleigh_coefficients(&[Complex64::new(0.0, 0.0); 64], &spec, &grid, &cf, BoundaryCondition::Dirichlet, 3)
                .unwrap();
        assert!(sp.modes.iter().chain(&sp.grazing).all(|m| m.amplitude.norm() == 0.0));
        assert_eq!(sp.grazing.len(), 4);
        assert!(sp.grazing.iter().all(|m| !m.is_propagating()));
    }

    #[test]
    fn flat_mirror_density_gives_specular_reflection() {
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let grid = sample_surface(&s, 8).unwrap();
        let k = 1.0;
        let qp = QuasiPeriodicity::normal(k, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Plain, 10.0, ShiftConfig::default()).unwrap();
        let cf = CombinedFieldParams::for_wavenumber(k);
        let phi = vec![Complex64::new(-1.0, 0.0); 64];
        let sp = rayleigh_coefficients(&phi, &spec, &grid, &cf, BoundaryCondition::Dirichlet, 2).unwrap();
        assert!((sp.amplitude(0, 0) + 1.0).norm() < 1e-14);
        assert!(energy_error(&sp, &qp).unwrap() < 1e-14);
        assert_eq!(coefficient_error(&sp, &sp).unwrap(), 0.0);
    }

    #[test]
    fn plain_extraction_refused_at_wood() {
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let grid = sample_surface(&s, 8).unwrap();
        let qp = QuasiPeriodicity::normal(2.0 * PI, 1.0, 1.0).unwrap();
        let mut spec = KernelSpec::new(qp, KernelChoice::Shifted, 10.0, ShiftConfig::default()).unwrap();
        spec.choice = KernelChoice::Plain;
        let cf = CombinedFieldParams::for_wavenumber(qp.k);
        let r =
            rayleigh_coefficients(&[Complex64::new(1.0, 0.0); 64], &spec, &grid, &cf, BoundaryCondition::Dirichlet, 2);
        assert!(matches!(r, Err(Error::WoodAnomaly { .. })));
    }

    #[test]
    fn metric_edge_cases() {
        let mut a = RayleighSpectrum::default();
        a.modes.push(RayleighMode { j: 0, l: 0, gamma: Complex64::new(1.0, 0.0), amplitude: Complex64::new(0.3, 0.4) });
        let mut b = a.clone();
        b.modes[0].amplitude = Complex64::new(0.0, 0.0);
        assert!(coefficient_error(&a, &b).is_err());
        let scale = Complex64::new(0.2, -1.7);
        let mut a2 = a.clone();
        let mut r = a.clone();
        r.modes[0].amplitude = Complex64::new(0.31, 0.38);
        let e1 = coefficient_error(&a, &r).unwrap();
        a2.modes[0].amplitude *= scale;
        r.modes[0].amplitude *= scale;
        assert!((coefficient_error(&a2, &r).unwrap() - e1).abs() < 1e-15);
    }
}
