use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::assemble_split;
use super::polar::{polar_nodes, PolarNode};
use super::table::{add_monopole, lattice_terms, zero_vg, FarTable, Term, NEAR_SHELL};
use super::{
    cardinal_weights, fourier_interpolate, partition_of_unity, split_kernel, BoundaryCondition, CombinedFieldParams,
    GratingSurface, KernelSpec, QuadratureConfig, SplitKernel, SurfaceGrid, SurfacePoint,
};
use crate::error::{Error, Result};

/// Dense Nyström discretization of the periodic integral operator.
///
/// Row `t`, column `s` use the grid ordering `q·N + p`. The right-hand side is
/// supplied by the caller since it depends on the incident field.
#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub matrix: DMatrix<Complex64>,
    pub bc: BoundaryCondition,
    pub cf: CombinedFieldParams,
    pub qc: QuadratureConfig,
    pub spec: KernelSpec,
    pub surface: GratingSurface,
    pub n: usize,
}

impl NystromSystem {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coefficient of the identity jump term.
    pub fn jump(&self) -> f64 {
        jump(self.bc, &self.cf)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.matrix * v).as_slice().to_vec()
    }
}

fn jump(bc: BoundaryCondition, cf: &CombinedFieldParams) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => 0.5 * cf.xi,
        BoundaryCondition::Neumann => -0.5,
    }
}

fn check(
    spec: &KernelSpec,
    surface: &GratingSurface,
    grid: &SurfaceGrid,
    qc: &QuadratureConfig,
    cf: &CombinedFieldParams,
) -> Result<()> {
    qc.validate(surface)?;
    cf.validate()?;
    if (spec.qp.d1 - surface.d1).abs() > 1e-12 * surface.d1 || (spec.qp.d2 - surface.d2).abs() > 1e-12 * surface.d2 {
        return Err(Error::Config("kernel periods differ from the surface periods".into()));
    }
    if grid.n % 2 != 0 || grid.is_empty() {
        return Err(Error::Config(format!("grid size must be even, got {}", grid.n)));
    }
    Ok(())
}

/// Trapezoid weight of offset `r` on the period-centered window `−N/2 ..= N/2`.
#[inline]
fn edge_weight(r: i64, half: i64) -> f64 {
    if r.abs() == half {
        0.5
    } else {
        1.0
    }
}

/// Layer kernel entering the equation for one split, with the surface measure folded in.
#[inline]
fn layer_kernel(
    sk: &SplitKernel,
    pu: f64,
    bc: BoundaryCondition,
    cf: &CombinedFieldParams,
    src: &SurfacePoint,
    tgt: &SurfacePoint,
) -> Complex64 {
    let outside = 1.0 - pu;
    match bc {
        BoundaryCondition::Dirichlet => {
            let sl = sk.single.smooth + sk.single.singular * outside;
            let dl = sk.double.smooth + sk.double.singular * outside;
            Complex64::new(0.0, cf.eta * src.g()) * sl + dl * cf.xi
        }
        BoundaryCondition::Neumann => (sk.adjoint.smooth + sk.adjoint.singular * outside) * (src.g() / tgt.g()),
    }
}

/// Assembles the Nyström matrix of the Dirichlet or Neumann periodic equation.
///
/// The smooth part of the kernel comes from direct sums over the near lattice
/// points and Chebyshev tables of the far lattice sum; the local singular part
/// from the polar rule with trigonometric interpolation weights.
pub fn assemble(
    spec: &KernelSpec,
    surface: &GratingSurface,
    grid: &SurfaceGrid,
    qc: &QuadratureConfig,
    cf: &CombinedFieldParams,
    bc: BoundaryCondition,
) -> Result<NystromSystem> {
    check(spec, surface, grid, qc, cf)?;
    let n = grid.n;
    let half = (n / 2) as i64;
    let k = spec.qp.k;
    let images = spec.images();
    let (near, far) = lattice_terms(spec)?;

    let fmin = grid.points.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
    let fmax = grid.points.iter().map(|p| p.f).fold(f64::NEG_INFINITY, f64::max);
    let span = (fmax - fmin).max(0.025);
    let shift_max = images.iter().map(|i| i.1).fold(0.0, f64::max);
    let shift_min = images.iter().map(|i| i.1).fold(0.0, f64::min);
    let zeta = (-span + shift_min - 0.01, span + shift_max + 0.01);
    let clearance = (NEAR_SHELL as f64 + 0.5) * spec.qp.d1.min(spec.qp.d2);
    let degree = FarTable::degree_for(k, zeta.0, zeta.1, clearance);
    let table =
        if far.is_empty() { None } else { Some(FarTable::build(k, &far, (grid.h1, grid.h2), half, zeta, degree)) };

    let dim = n * n;
    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map_init(
            || (Vec::<PolarNode>::new(), vec![0.0; n], vec![0.0; n]),
            |(nodes, cx, cy), t| {
                let (tp, tq) = (t % n, t / n);
                let tgt = grid.points[t];
                let mut row = vec![Complex64::new(0.0, 0.0); dim];
                row[t] += jump(bc, cf);
                let w0 = grid.h1 * grid.h2;
                for ry in -half..=half {
                    let sq = grid.wrap(tq as i64 + ry);
                    for rx in -half..=half {
                        let sp = grid.wrap(tp as i64 + rx);
                        let s = sq * n + sp;
                        let src = grid.points[s];
                        let r = [-(rx as f64) * grid.h1, -(ry as f64) * grid.h2, tgt.f - src.f];
                        let mut rest = zero_vg();
                        for &(wq, dz) in &images {
                            if let Some(tab) = &table {
                                let (v, g) = tab.eval(-rx, -ry, r[2] + dz);
                                rest.0 += v * wq;
                                for c in 0..3 {
                                    rest.1[c] += g[c] * wq;
                                }
                            }
                        }
                        add_near(k, &near, &images, r, &mut rest);
                        let (v, dv) = spec.regularizer(r);
                        rest.0 += v;
                        for c in 0..3 {
                            rest.1[c] += dv[c];
                        }
                        let sk = assemble_split(k, r, src.normal(), tgt.normal(), rest, spec.phase(r));
                        let pu = partition_of_unity(qc, r[0].hypot(r[1]));
                        let w = w0 * edge_weight(rx, half) * edge_weight(ry, half);
                        row[s] += layer_kernel(&sk, pu, bc, cf, &src, &tgt) * w;
                    }
                }
                polar_nodes(k, spec.qp.alpha, spec.qp.beta, surface, &tgt, qc, bc, cf, nodes);
                for node in nodes.iter() {
                    cardinal_weights(node.x, n, surface.d1, cx);
                    cardinal_weights(node.y, n, surface.d2, cy);
                    for (q, &wy) in cy.iter().enumerate() {
                        let wy = node.weight * wy;
                        let out = &mut row[q * n..(q + 1) * n];
                        for (o, &wx) in out.iter_mut().zip(cx.iter()) {
                            *o += wy * wx;
                        }
                    }
                }
                row
            },
        )
        .collect();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    Ok(NystromSystem { matrix, bc, cf: *cf, qc: *qc, spec: spec.clone(), surface: *surface, n })
}

/// Near lattice images summed directly; the central unshifted source is left to the split.
#[inline]
fn add_near(k: f64, near: &[Term], images: &[(f64, f64)], r: [f64; 3], acc: &mut super::table::ValueGrad) {
    for t in near {
        for (q, &(wq, dz)) in images.iter().enumerate() {
            if t.central && q == 0 {
                continue;
            }
            add_monopole(k, r[0] + t.x, r[1] + t.y, r[2] + dz, t.c * wq, acc);
        }
    }
}

/// Trapezoid part of the operator applied to `density`, by direct evaluation of [`split_kernel`].
///
/// Each target integrates over the period-centered window of source offsets
/// `−N/2 ..= N/2` with half weights on the edges; the kernel is the smooth
/// part plus the singular part outside the partition of unity, weighted as in
/// the combined-field (Dirichlet) or adjoint (Neumann) operator.
#[allow(clippy::too_many_arguments)]
pub fn smooth_layer_apply(
    spec: &KernelSpec,
    surface: &GratingSurface,
    grid: &SurfaceGrid,
    qc: &QuadratureConfig,
    cf: &CombinedFieldParams,
    bc: BoundaryCondition,
    density: &[Complex64],
) -> Result<Vec<Complex64>> {
    check(spec, surface, grid, qc, cf)?;
    let n = grid.n;
    if density.len() != n * n {
        return Err(Error::Config(format!("density has {} values, grid has {}", density.len(), n * n)));
    }
    let half = (n / 2) as i64;
    (0..n * n)
        .into_par_iter()
        .map(|t| {
            let (tp, tq) = (t % n, t / n);
            let tgt = grid.points[t];
            let mut acc = Complex64::new(0.0, 0.0);
            for ry in -half..=half {
                for rx in -half..=half {
                    let s = grid.wrap(tq as i64 + ry) * n + grid.wrap(tp as i64 + rx);
                    if density[s] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let sx = tgt.x + rx as f64 * grid.h1;
                    let sy = tgt.y + ry as f64 * grid.h2;
                    let sk = split_kernel(spec, surface, (tgt.x, tgt.y), (sx, sy))?;
                    let src = surface.at(sx, sy);
                    let pu = partition_of_unity(qc, (rx as f64 * grid.h1).hypot(ry as f64 * grid.h2));
                    let w = grid.h1 * grid.h2 * edge_weight(rx, half) * edge_weight(ry, half);
                    acc += layer_kernel(&sk, pu, bc, cf, &src, &tgt) * density[s] * w;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Local polar part of the operator applied to `density`, with off-grid values from [`fourier_interpolate`].
pub fn singular_layer_apply(
    spec: &KernelSpec,
    surface: &GratingSurface,
    grid: &SurfaceGrid,
    qc: &QuadratureConfig,
    cf: &CombinedFieldParams,
    bc: BoundaryCondition,
    density: &[Complex64],
) -> Result<Vec<Complex64>> {
    check(spec, surface, grid, qc, cf)?;
    let n = grid.n;
    if density.len() != n * n {
        return Err(Error::Config(format!("density has {} values, grid has {}", density.len(), n * n)));
    }
    (0..n * n)
        .into_par_iter()
        .map(|t| {
            let mut nodes = Vec::new();
            polar_nodes(spec.qp.k, spec.qp.alpha, spec.qp.beta, surface, &grid.points[t], qc, bc, cf, &mut nodes);
            let pts: Vec<(f64, f64)> = nodes.iter().map(|p| (p.x, p.y)).collect();
            let vals = fourier_interpolate(density, n, surface.d1, surface.d2, &pts)?;
            Ok(nodes.iter().zip(vals).map(|(p, v)| p.weight * v).sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bie::{sample_surface, KernelChoice};
    use crate::lattice::QuasiPeriodicity;
    use crate::wood::ShiftConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn brute_force(
        spec: &KernelSpec,
        s: &GratingSurface,
        bc: BoundaryCondition,
        n: usize,
        density: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let grid = sample_surface(s, n).unwrap();
        let qc = QuadratureConfig::for_grid(s, n);
        let cf = CombinedFieldParams::for_wavenumber(spec.qp.k);
        let sys = assemble(spec, s, &grid, &qc, &cf, bc).unwrap();
        let a = sys.apply(density);
        let sm = smooth_layer_apply(spec, s, &grid, &qc, &cf, bc, density).unwrap();
        let sg = singular_layer_apply(spec, s, &grid, &qc, &cf, bc, density).unwrap();
        let j = sys.jump();
        let b = (0..density.len()).map(|i| density[i] * j + sm[i] + sg[i]).collect();
        (a, b)
    }

    fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn matvec_matches_direct_plain() {
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let qp = QuasiPeriodicity::new(3.0, 1.0, 1.0, 0.7, -0.4).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Plain, 8.0, ShiftConfig::default()).unwrap();
        let d = random_density(64, 1);
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let (a, b) = brute_force(&spec, &s, bc, 8, &d);
            assert!(rel(&a, &b) < 1e-10, "{bc:?}: {:e}", rel(&a, &b));
        }
    }

    #[test]
    fn matvec_matches_direct_modified_at_wood() {
        let s = GratingSurface::cos_cos(0.5, 1.0, 1.0).unwrap();
        let qp = QuasiPeriodicity::normal(2.0 * std::f64::consts::PI, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Modified, 6.0, ShiftConfig::default()).unwrap();
        assert!(!spec.grazing.is_empty());
        let d = random_density(64, 2);
        let (a, b) = brute_force(&spec, &s, BoundaryCondition::Dirichlet, 8, &d);
        assert!(rel(&a, &b) < 1e-10, "{:e}", rel(&a, &b));
    }

    #[test]
    fn identity_coefficient_once_per_row() {
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let qp = QuasiPeriodicity::normal(1.0, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Plain, 4.0, ShiftConfig::default()).unwrap();
        let grid = sample_surface(&s, 8).unwrap();
        let qc = QuadratureConfig::for_grid(&s, 8);
        let cf = CombinedFieldParams::for_wavenumber(1.0);
        let sys = assemble(&spec, &s, &grid, &qc, &cf, BoundaryCondition::Dirichlet).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 64];
        let sm = smooth_layer_apply(&spec, &s, &grid, &qc, &cf, BoundaryCondition::Dirichlet, &zero).unwrap();
        assert!(sm.iter().all(|v| v.norm() == 0.0));
        // With the layer parts removed, the diagonal holds exactly ξ/2.
        let mut e = vec![Complex64::new(0.0, 0.0); 64];
        e[9] = Complex64::new(1.0, 0.0);
        let col = sys.apply(&e);
        let layer = smooth_layer_apply(&spec, &s, &grid, &qc, &cf, BoundaryCondition::Dirichlet, &e).unwrap();
        let sing = singular_layer_apply(&spec, &s, &grid, &qc, &cf, BoundaryCondition::Dirichlet, &e).unwrap();
        assert!((col[9] - layer[9] - sing[9] - 0.5).norm() < 1e-12);
    }

    #[test]
    fn flat_double_layer_vanishes() {
        // On a plane R·n = 0, so the Dirichlet operator reduces to ξ/2 + iηS.
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let qp = QuasiPeriodicity::normal(1.0, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Plain, 6.0, ShiftConfig::default()).unwrap();
        let grid = sample_surface(&s, 8).unwrap();
        let qc = QuadratureConfig::for_grid(&s, 8);
        let sl_only = CombinedFieldParams { eta: -1.0, xi: 1e-300 };
        let full = CombinedFieldParams { eta: -1.0, xi: 1.0 };
        let a = assemble(&spec, &s, &grid, &qc, &sl_only, BoundaryCondition::Dirichlet).unwrap();
        let b = assemble(&spec, &s, &grid, &qc, &full, BoundaryCondition::Dirichlet).unwrap();
        let diff = &b.matrix - &a.matrix;
        for i in 0..64 {
            for j in 0..64 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((diff[(i, j)] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn flat_constant_density_gives_plane_layer() {
        // S[1] over a plane at normal incidence is i/(2k) per unit cell area; the
        // coplanar windowed sum converges slowly, which sets the tolerance at a = 60.
        let s = GratingSurface::flat(1.0, 1.0).unwrap();
        let k = 1.0;
        let qp = QuasiPeriodicity::normal(k, 1.0, 1.0).unwrap();
        let spec = KernelSpec::new(qp, KernelChoice::Plain, 60.0, ShiftConfig::default()).unwrap();
        let grid = sample_surface(&s, 16).unwrap();
        let qc = QuadratureConfig::for_grid(&s, 16);
        let cf = CombinedFieldParams::for_wavenumber(k);
        let sys = assemble(&spec, &s, &grid, &qc, &cf, BoundaryCondition::Dirichlet).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); 256];
        let out = sys.apply(&ones);
        let expect = 0.5 + Complex64::new(0.0, cf.eta) * Complex64::new(0.0, 0.5 / k);
        for v in out {
            assert!((v - expect).norm() < 1e-3, "{v} vs {expect}");
        }
    }
}
