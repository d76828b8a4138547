use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, CombinedFieldParams, GratingSurface, QuadratureConfig, SurfacePoint};
use crate::lattice::{WindowProfile, WindowShape};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// Radial partition of unity: one for `ρ < r0`, zero for `ρ ≥ r1`, bump profile in between.
pub fn partition_of_unity(qc: &QuadratureConfig, rho: f64) -> f64 {
    let w = WindowProfile {
        inner: qc.r0,
        outer: qc.r1,
        shape: WindowShape::FigureBump,
        separable: false,
        x_dependent: false,
    };
    w.profile(rho)
}

/// `ρ → 0` limits of the smooth polar factors along direction `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarLimits {
    /// `|ρ|/‖R‖ → (1 + (fx cos θ + fy sin θ)²)^{−1/2}`.
    pub rho_over_r: f64,
    /// `R·(−fx′, −fy′, 1)/ρ² → (fxx cos²θ + 2 fxy cos θ sin θ + fyy sin²θ)/2`.
    pub source_normal: f64,
    /// `R·(−fx, −fy, 1)/ρ²` with the target normal; the negative of `source_normal`.
    pub target_normal: f64,
}

pub fn polar_limits(p: &SurfacePoint, theta: f64) -> PolarLimits {
    let (s, c) = theta.sin_cos();
    let dir = p.fx * c + p.fy * s;
    let curv = 0.5 * (p.fxx * c * c + 2.0 * p.fxy * c * s + p.fyy * s * s);
    PolarLimits { rho_over_r: 1.0 / (1.0 + dir * dir).sqrt(), source_normal: curv, target_normal: -curv }
}

/// Quadrature node of the local singular integral, with all factors except the density folded in.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PolarNode {
    pub x: f64,
    pub y: f64,
    pub weight: Complex64,
}

/// Nodes and weights of the polar trapezoidal rule around `target`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn polar_nodes(
    k: f64,
    alpha: f64,
    beta: f64,
    surface: &GratingSurface,
    target: &SurfacePoint,
    qc: &QuadratureConfig,
    bc: BoundaryCondition,
    cf: &CombinedFieldParams,
    out: &mut Vec<PolarNode>,
) {
    out.clear();
    let d_theta = PI / qc.n_theta as f64;
    let d_rho = 2.0 * qc.r1 / qc.n_rho as f64;
    let base = d_theta * d_rho * INV_4PI;
    let gt = target.g();
    for l in 0..qc.n_theta {
        let theta = l as f64 * d_theta;
        let (s, c) = theta.sin_cos();
        let lim = polar_limits(target, theta);
        for j in 1..qc.n_rho {
            let rho = -qc.r1 + j as f64 * d_rho;
            let eta_pu = partition_of_unity(qc, rho.abs());
            if eta_pu == 0.0 {
                continue;
            }
            let x = target.x + rho * c;
            let y = target.y + rho * s;
            let src = surface.at(x, y);
            let (ror, r, n_src, n_tgt) = if j * 2 == qc.n_rho {
                (lim.rho_over_r, 0.0, lim.source_normal, lim.target_normal)
            } else {
                let rz = target.f - src.f;
                let r = (rho * rho + rz * rz).sqrt();
                let rho2 = rho * rho;
                // R = (−ρ cos θ, −ρ sin θ, f − f′).
                let n_src = (rho * c * src.fx + rho * s * src.fy + rz) / rho2;
                let n_tgt = (rho * c * target.fx + rho * s * target.fy + rz) / rho2;
                (rho.abs() / r, r, n_src, n_tgt)
            };
            let (sk, ck) = (k * r).sin_cos();
            let cube = ror * ror * ror * (ck + k * r * sk);
            let factor = match bc {
                BoundaryCondition::Dirichlet => Complex64::new(0.0, cf.eta * ror * ck * src.g()) + cf.xi * cube * n_src,
                BoundaryCondition::Neumann => Complex64::new(-cube * n_tgt * src.g() / gt, 0.0),
            };
            let phase = Complex64::from_polar(1.0, rho * (alpha * c + beta * s));
            out.push(PolarNode { x, y, weight: factor * phase * (base * eta_pu) });
        }
    }
}
