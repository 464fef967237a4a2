//! Uniform attachment trees with freezing.
//!
//! Trees are grown from a ±1 sign sequence: a `+1` step attaches a new vertex
//! to a uniformly chosen active vertex, a `-1` step freezes a uniformly chosen
//! active vertex. Frozen vertices accept no further attachments. The crate
//! provides the forward construction, the time-reversed growth-coalescent
//! construction, the exact finite-n laws of both, the bijection with
//! increasing binary plane trees, the asymptotic constants of the linear
//! regime, an SIR contact-tracing application, and a Monte Carlo harness that
//! verifies the limit theorems at desk scale.

pub mod asymptotics;
pub mod attach;
pub mod bijection;
pub mod coalescent;
pub mod export;
pub mod harness;
pub mod rng;
pub mod scalar;
pub mod seq;
pub mod seqgen;
pub mod sir;
pub mod stats;
pub mod tree;
pub mod verify;

mod error;
mod mem;

#[cfg(test)]
pub(crate) mod fixtures;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact scalar for the finite-n laws: arbitrary-precision rational.
pub type Exact = num_rational::BigRational;

/// Floating-point scalar used by the Monte Carlo paths.
pub type Real = f64;

/// Shorthand for building an [`Exact`] value from an integer ratio.
pub fn exact(numer: i64, denom: i64) -> Exact {
    Exact::new(numer.into(), denom.into())
}
