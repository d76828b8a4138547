//! Quasi-periodic Helmholtz Green functions and doubly periodic grating scattering.

pub mod bie;
pub mod error;
pub mod lattice;
pub mod linsolve;
pub mod scattering;
pub mod wood;

pub use error::{Error, Result};
