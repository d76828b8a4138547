use thiserror::Error;

/// Errors reported by the lattice sums, the grating solver and the drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of a function (negative radius, non-finite input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An evaluation point coincides with a retained lattice source.
    #[error("singular evaluation: point coincides with source (m={m}, n={n}, q={q})")]
    SingularEvaluation { m: i64, n: i64, q: usize },

    /// A Rayleigh mode is exactly grazing, so the plain quasi-periodic Green function does not exist.
    #[error("exact Wood anomaly at modes {modes:?}; use the shifted or modified kernel")]
    WoodAnomaly { modes: Vec<(i64, i64)> },

    /// Invalid discretization or physical parameters.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Dense LU factorization met a pivot that is zero to working precision.
    #[error("matrix is singular to working precision (pivot ratio {ratio:.3e})")]
    Singular { ratio: f64 },

    /// A diagnostic whose denominator vanishes.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
