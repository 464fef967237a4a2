//! Scalar abstraction for the walk functionals and finite-n laws.
//!
//! The same formulas are evaluated in `f64` on the Monte Carlo paths and in
//! [`crate::Exact`] (arbitrary-precision rationals) wherever a check demands
//! rational equality, so the core math is written once, generic over the
//! scalar.

use num_traits::{FromPrimitive, Num};

/// Field-like scalar: `f32`, `f64` and [`crate::Exact`] all qualify.
pub trait Scalar: Num + FromPrimitive + Clone + PartialOrd {
    /// `1 / n` in the scalar type.
    fn recip_of(n: u64) -> Self {
        Self::one() / Self::from_u64(n).expect("scalar from u64")
    }

    /// Embed a non-negative integer.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("scalar from u64")
    }
}

impl<T: Num + FromPrimitive + Clone + PartialOrd> Scalar for T {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{exact, Exact};

    #[test]
    fn recip_in_both_scalars() {
        assert_eq!(f64::recip_of(4), 0.25);
        assert_eq!(Exact::recip_of(3), exact(1, 3));
    }
}
