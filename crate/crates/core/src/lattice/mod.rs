//! Doubly quasi-periodic Helmholtz Green function.
//!
//! The Green function is the lattice sum of outgoing monopoles
//!
//! ```text
//! G(x) = 1/(4π) Σ_{m,n} e^{ik r_mn} / r_mn · e^{-i(α m d1 + β n d2)},
//! r_mn² = (x + m d1)² + (y + n d2)² + z²,
//! ```
//!
//! which converges only conditionally. This module evaluates it through a
//! smooth truncation of the lattice ([`windowed_green`]) and provides the
//! dual-lattice (Rayleigh) expansion ([`fourier_green`]) as an independent
//! reference away from Wood anomalies.

mod fourier;
mod sum;
mod window;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fourier::{fourier_green, fourier_jmax};
pub(crate) use sum::for_each_shell_point;
pub use sum::{free_green, windowed_green, windowed_green_gradient, LatticeSum};
pub use window::{WindowProfile, WindowShape};

/// `|γ|/k` below which a mode is declared exactly grazing.
pub const WOOD_EXACT_TOL: f64 = 1e-12;

/// Wavenumber, periods and Bloch vector of a doubly quasi-periodic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiPeriodicity {
    pub k: f64,
    pub d1: f64,
    pub d2: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl QuasiPeriodicity {
    pub fn new(k: f64, d1: f64, d2: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {k}")));
        }
        if !(d1.is_finite() && d1 > 0.0 && d2.is_finite() && d2 > 0.0) {
            return Err(Error::Config(format!("periods must be positive, got ({d1}, {d2})")));
        }
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config("Bloch vector must be finite".into()));
        }
        Ok(Self { k, d1, d2, alpha, beta })
    }

    /// Normal incidence (zero Bloch vector).
    pub fn normal(k: f64, d1: f64, d2: f64) -> Result<Self> {
        Self::new(k, d1, d2, 0.0, 0.0)
    }

    pub fn alpha_j(&self, j: i64) -> f64 {
        self.alpha + 2.0 * PI * j as f64 / self.d1
    }

    pub fn beta_l(&self, l: i64) -> f64 {
        self.beta + 2.0 * PI * l as f64 / self.d2
    }

    /// Vertical wavenumber `γ_jl = (k² − α_j² − β_l²)^{1/2}`.
    ///
    /// Positive reals map to positive roots and negative reals to the positive
    /// imaginary axis. A radicand within rounding of zero is snapped to an
    /// exact zero: the subtraction cancels, so `γ` near a Wood anomaly is only
    /// known to about `√ε·k` anyway.
    pub fn gamma(&self, j: i64, l: i64) -> Complex64 {
        let aj = self.alpha_j(j);
        let bl = self.beta_l(l);
        let k2 = self.k * self.k;
        let t2 = aj * aj + bl * bl;
        let radicand = k2 - t2;
        if radicand.abs() <= 8.0 * f64::EPSILON * k2.max(t2) {
            Complex64::new(0.0, 0.0)
        } else if radicand > 0.0 {
            Complex64::new(radicand.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-radicand).sqrt())
        }
    }

    pub fn mode(&self, j: i64, l: i64) -> DualMode {
        DualMode { j, l, alpha_j: self.alpha_j(j), beta_l: self.beta_l(l), gamma: self.gamma(j, l) }
    }

    /// Index range `[lo, hi]` of `j` with `|α_j| ≤ k·(1 + slack)`.
    pub(crate) fn j_range(&self, slack: f64) -> (i64, i64) {
        let reach = self.k * (1.0 + slack);
        let s = self.d1 / (2.0 * PI);
        (((-reach - self.alpha) * s).floor() as i64, ((reach - self.alpha) * s).ceil() as i64)
    }

    pub(crate) fn l_range(&self, slack: f64) -> (i64, i64) {
        let reach = self.k * (1.0 + slack);
        let s = self.d2 / (2.0 * PI);
        (((-reach - self.beta) * s).floor() as i64, ((reach - self.beta) * s).ceil() as i64)
    }

    /// Modes with `|j|, |l| ≤ j_max` and `|γ_jl|/k < grazing_tol`.
    pub fn wood_modes(&self, j_max: usize, grazing_tol: f64) -> Vec<WoodMode> {
        let jm = j_max as i64;
        let mut out = Vec::new();
        for j in -jm..=jm {
            for l in -jm..=jm {
                let g = self.gamma(j, l);
                let ratio = g.norm() / self.k;
                if ratio < grazing_tol {
                    out.push(WoodMode { mode: self.mode(j, l), exact: ratio < WOOD_EXACT_TOL });
                }
            }
        }
        out
    }

    /// Exactly grazing modes anywhere in the dual lattice.
    pub fn exact_wood_modes(&self) -> Vec<(i64, i64)> {
        let (j0, j1) = self.j_range(1e-6);
        let (l0, l1) = self.l_range(1e-6);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for l in l0..=l1 {
                if self.gamma(j, l).norm() / self.k < WOOD_EXACT_TOL {
                    out.push((j, l));
                }
            }
        }
        out
    }
}

/// One point of the dual lattice with its tangential and vertical wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualMode {
    pub j: i64,
    pub l: i64,
    pub alpha_j: f64,
    pub beta_l: f64,
    pub gamma: Complex64,
}

impl DualMode {
    pub fn is_propagating(&self) -> bool {
        self.gamma.im == 0.0 && self.gamma.re > 0.0
    }
}

/// A grazing or nearly grazing Rayleigh mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WoodMode {
    pub mode: DualMode,
    pub exact: bool,
}

/// Difference vector `x − x′` at which a Green function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EvalPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn shifted(&self, dx: f64, dy: f64, dz: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl From<[f64; 3]> for EvalPoint {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}
