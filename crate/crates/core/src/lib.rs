//! Cartier-Manin matrices, Frobenius traces and L-polynomials mod p of smooth
//! plane quartics, one prime at a time or for all good primes up to a bound.

pub mod algebra;
pub mod curve;
pub mod engine;
pub mod error;
pub mod forest;
pub mod oracle;
pub mod transition;

pub use error::{Error, Result};
