//! Nyström discretization of periodic boundary-integral equations on a doubly periodic grating.
//!
//! One period of the surface `z = f(x, y)` is sampled on an `N × N` grid. Each
//! kernel is split into a central singular part, integrated in polar
//! coordinates around the target under a floating partition of unity, and a
//! smooth remainder (all other images, plus the complementary part of the
//! central term) integrated with the trapezoidal rule on a period-centered
//! window. Off-grid density values come from trigonometric interpolation.

mod assemble;
mod interp;
mod kernel;
mod polar;
mod surface;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assemble::{assemble, singular_layer_apply, smooth_layer_apply, NystromSystem};
pub use interp::{cardinal, cardinal_weights, fourier_interpolate};
pub use kernel::{split_kernel, KernelChoice, KernelSpec, LayerSplit, SplitKernel};
pub use polar::{partition_of_unity, polar_limits, PolarLimits};
pub use surface::{sample_surface, GratingSurface, SurfaceGrid, SurfacePoint, SurfaceProfile};

/// Boundary condition imposed on the grating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Sound-soft: combined-field formulation `ξ/2 + ξK + iηS`.
    Dirichlet,
    /// Sound-hard: single-layer representation, `−1/2 + K′`.
    Neumann,
}

/// Real coupling constants of the combined-field potential `iηS + ξK`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedFieldParams {
    pub eta: f64,
    pub xi: f64,
}

impl CombinedFieldParams {
    /// `ξ = 1`, `η = −k`.
    pub fn for_wavenumber(k: f64) -> Self {
        Self { eta: -k, xi: 1.0 }
    }

    pub fn new(eta: f64, xi: f64) -> Result<Self> {
        let cf = Self { eta, xi };
        cf.validate()?;
        Ok(cf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.xi.is_finite() && self.xi != 0.0 && self.eta / self.xi < 0.0) {
            return Err(Error::Config(format!(
                "combined-field constants need eta/xi < 0, got eta={} xi={}",
                self.eta, self.xi
            )));
        }
        Ok(())
    }
}

/// Floating partition of unity radii and polar grid sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub r0: f64,
    pub r1: f64,
    pub n_theta: usize,
    pub n_rho: usize,
}

impl QuadratureConfig {
    /// `r1 = min(d1, d2)/4`, `r0 = r1/2`, `n_θ = N`, `n_ρ = 2N`.
    pub fn for_grid(surface: &GratingSurface, n: usize) -> Self {
        let r1 = surface.d1.min(surface.d2) / 4.0;
        Self { r0: 0.5 * r1, r1, n_theta: n, n_rho: 2 * n }
    }

    pub fn validate(&self, surface: &GratingSurface) -> Result<()> {
        let diag = surface.d1.hypot(surface.d2);
        if !(self.r0 > 0.0 && self.r1 > self.r0) {
            return Err(Error::Config(format!("need 0 < r0 < r1, got r0={} r1={}", self.r0, self.r1)));
        }
        if 4.0 * self.r1 > diag * (1.0 + 1e-12) {
            return Err(Error::Config(format!("need 4 r1 <= period diagonal {diag}, got r1={}", self.r1)));
        }
        if 2.0 * self.r1 >= surface.d1.min(surface.d2) {
            return Err(Error::Config("the partition of unity must fit inside one period".into()));
        }
        if self.n_theta == 0 || self.n_rho < 2 {
            return Err(Error::Config("polar grid needs n_theta >= 1 and n_rho >= 2".into()));
        }
        Ok(())
    }
}
