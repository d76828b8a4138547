use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height profile of one period of the grating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SurfaceProfile {
    Flat,
    /// `f(x, y) = A cos(2πx/d1) cos(2πy/d2)`.
    CosCos {
        amplitude: f64,
    },
}

/// Height and derivatives of `z = f(x, y)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

impl SurfacePoint {
    /// Surface element `g = (1 + fx² + fy²)^{1/2}`.
    pub fn g(&self) -> f64 {
        (1.0 + self.fx * self.fx + self.fy * self.fy).sqrt()
    }

    /// Unnormalized upward normal `(−fx, −fy, 1)`.
    pub fn normal(&self) -> [f64; 3] {
        [-self.fx, -self.fy, 1.0]
    }
}

/// Doubly periodic surface `z = f(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingSurface {
    pub profile: SurfaceProfile,
    pub d1: f64,
    pub d2: f64,
}

impl GratingSurface {
    pub fn new(profile: SurfaceProfile, d1: f64, d2: f64) -> Result<Self> {
        if !(d1.is_finite() && d1 > 0.0 && d2.is_finite() && d2 > 0.0) {
            return Err(Error::Config(format!("periods must be positive, got ({d1}, {d2})")));
        }
        if let SurfaceProfile::CosCos { amplitude } = profile {
            if !amplitude.is_finite() {
                return Err(Error::Config("surface amplitude must be finite".into()));
            }
        }
        Ok(Self { profile, d1, d2 })
    }

    pub fn flat(d1: f64, d2: f64) -> Result<Self> {
        Self::new(SurfaceProfile::Flat, d1, d2)
    }

    pub fn cos_cos(amplitude: f64, d1: f64, d2: f64) -> Result<Self> {
        Self::new(SurfaceProfile::CosCos { amplitude }, d1, d2)
    }

    pub fn at(&self, x: f64, y: f64) -> SurfacePoint {
        match self.profile {
            SurfaceProfile::Flat => SurfacePoint { x, y, ..Default::default() },
            SurfaceProfile::CosCos { amplitude: a } => {
                let w1 = 2.0 * PI / self.d1;
                let w2 = 2.0 * PI / self.d2;
                let (sx, cx) = (w1 * x).sin_cos();
                let (sy, cy) = (w2 * y).sin_cos();
                SurfacePoint {
                    x,
                    y,
                    f: a * cx * cy,
                    fx: -a * w1 * sx * cy,
                    fy: -a * w2 * cx * sy,
                    fxx: -a * w1 * w1 * cx * cy,
                    fxy: a * w1 * w2 * sx * sy,
                    fyy: -a * w2 * w2 * cx * cy,
                }
            }
        }
    }

    fn max_height(&self) -> f64 {
        match self.profile {
            SurfaceProfile::Flat => 0.0,
            SurfaceProfile::CosCos { amplitude } => amplitude.abs(),
        }
    }

    fn margin(&self) -> f64 {
        0.01 * self.d1.min(self.d2)
    }

    /// Strict upper bound of `f`.
    pub fn z_plus(&self) -> f64 {
        self.max_height() + self.margin()
    }

    /// Strict lower bound of `f`.
    pub fn z_minus(&self) -> f64 {
        -self.max_height() - self.margin()
    }
}

/// Surface sampled on the `N × N` grid `(p d1/N, q d2/N)`; node `(p, q)` is stored at `q N + p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub n: usize,
    pub h1: f64,
    pub h2: f64,
    pub points: Vec<SurfacePoint>,
}

impl SurfaceGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, p: usize, q: usize) -> usize {
        q * self.n + p
    }

    pub fn node(&self, p: usize, q: usize) -> &SurfacePoint {
        &self.points[self.index(p, q)]
    }

    /// Wraps a possibly negative or overflowing index into `[0, N)`.
    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.n as i64) as usize
    }
}

/// Samples the surface and its derivatives on an even `N × N` grid with `N ≥ 8`.
pub fn sample_surface(surface: &GratingSurface, n: usize) -> Result<SurfaceGrid> {
    if n % 2 != 0 || n < 8 {
        return Err(Error::Config(format!("grid size N must be even and at least 8, got {n}")));
    }
    let h1 = surface.d1 / n as f64;
    let h2 = surface.d2 / n as f64;
    let mut points = Vec::with_capacity(n * n);
    for q in 0..n {
        for p in 0..n {
            points.push(surface.at(p as f64 * h1, q as f64 * h2));
        }
    }
    Ok(SurfaceGrid { n, h1, h2, points })
}
