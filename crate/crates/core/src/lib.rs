//! Forward and inverse spectral tools for the Bessel-type operator
//! `-f'' + ℓ(ℓ+1)x⁻² f + q f` on (0,1) with a Robin or Dirichlet condition at 1.

pub mod cli;
pub mod error;
pub mod hfield;
pub mod inverse;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod roots;
pub mod solver;
pub mod spectrum;
pub mod stats;
pub mod uniqueness;

pub use error::{Error, Result};
pub use potential::{Exponent, Potential, SmoothnessTag};
