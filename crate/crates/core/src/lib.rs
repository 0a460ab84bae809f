//! Quasi-interpolation on scattered nodes with fast-decaying polynomial reproduction.
//!
//! Two engines compute the basis values `a*(x)` that reproduce polynomials of degree `m`:
//! moving least squares ([`mls`]) and a weighted 1-norm linear program ([`lp`]).
//! [`analysis`] measures Lebesgue constants, errors, convergence rates and the
//! theoretical stability constants.

pub mod analysis;
pub mod basis;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod lp;
pub mod mls;
pub mod scheme;
pub mod weights;

pub use error::{Error, Result};
