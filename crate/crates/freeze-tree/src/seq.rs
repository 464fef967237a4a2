//! Sign sequences and their walks.
//!
//! A sign sequence `x` drives the whole model: `S_0 = 1`,
//! `S_i = S_{i-1} + x_i`, and `tau` is the first time the walk hits zero
//! (the time when every vertex is frozen). Steps are 1-based throughout, as
//! in `x_1, ..., x_n`.

use crate::{Error, Result, Scalar};

/// One step of the driving sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn is_plus(self) -> bool {
        matches!(self, Sign::Plus)
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::OutOfRange(format!(
                "sign must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// Finite ±1 sequence driving the dynamics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignSequence {
    signs: Vec<Sign>,
}

impl SignSequence {
    pub fn new(signs: Vec<Sign>) -> Self {
        SignSequence { signs }
    }

    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Result<Self> {
        let signs = values
            .into_iter()
            .map(Sign::from_value)
            .collect::<Result<_>>()?;
        Ok(SignSequence { signs })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    /// The step `x_i`, 1-based. Panics if `i` is 0 or past the end.
    pub fn step(&self, i: usize) -> Sign {
        self.signs[i - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = Sign> + '_ {
        self.signs.iter().copied()
    }
}

impl FromIterator<Sign> for SignSequence {
    fn from_iter<I: IntoIterator<Item = Sign>>(iter: I) -> Self {
        SignSequence::new(iter.into_iter().collect())
    }
}

/// The walk `S_0..S_n` derived from a sign sequence, with its hitting time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkProfile {
    s: Vec<i64>,
    tau: Option<usize>,
}

/// Materializes the walk of `x`. `S` is stored as an array because every
/// downstream law indexes it randomly.
pub fn compute_walk(x: &SignSequence) -> WalkProfile {
    let mut s = Vec::with_capacity(x.len() + 1);
    let mut cur = 1i64;
    let mut tau = None;
    s.push(cur);
    for (idx, sign) in x.iter().enumerate() {
        cur += sign.value();
        s.push(cur);
        if cur == 0 && tau.is_none() {
            tau = Some(idx + 1);
        }
    }
    WalkProfile { s, tau }
}

impl WalkProfile {
    /// Number of steps covered, i.e. the largest valid index into `S`.
    pub fn horizon(&self) -> usize {
        self.s.len() - 1
    }

    /// `S_i`. Panics if `i` exceeds the horizon.
    pub fn s(&self, i: usize) -> i64 {
        self.s[i]
    }

    pub fn values(&self) -> &[i64] {
        &self.s
    }

    /// First hitting time of zero, if the walk was absorbed within the horizon.
    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    /// `tau > n`: the walk stays positive through step `n`.
    pub fn survives_past(&self, n: usize) -> bool {
        self.tau.is_none_or(|t| t > n)
    }

    /// `tau >= n`: the walk stays positive strictly before step `n`.
    pub fn survives_before(&self, n: usize) -> bool {
        self.tau.is_none_or(|t| t >= n)
    }

    /// The sign of step `i`, 1-based, recovered from the walk increments.
    pub fn step_sign(&self, i: usize) -> Sign {
        if self.s[i] > self.s[i - 1] {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    fn require_admissible(&self, n: usize) -> Result<()> {
        if n > self.horizon() {
            return Err(Error::OutOfRange(format!(
                "horizon {n} exceeds walk length {}",
                self.horizon()
            )));
        }
        if !self.survives_past(n) {
            return Err(Error::WalkAbsorbed {
                tau: self.tau.unwrap(),
                requested: n,
            });
        }
        Ok(())
    }

    /// Total vertex count of the tree after `n` steps: `(S_n + n + 1) / 2`.
    /// Valid for `n <= tau`.
    pub fn num_vertices(&self, n: usize) -> Result<u64> {
        if n > self.horizon() || !self.survives_before(n) {
            return Err(Error::OutOfRange(format!(
                "num_vertices needs n <= tau, got n = {n}"
            )));
        }
        Ok(((self.s[n] + n as i64 + 1) / 2) as u64)
    }

    /// `h+`: the height scale `sum 1/S_i` over the `+1` steps up to `n`.
    /// Requires `tau > n`.
    pub fn h_plus<T: Scalar>(&self, n: usize) -> Result<T> {
        self.require_admissible(n)?;
        let mut acc = T::zero();
        for i in 1..=n {
            if self.step_sign(i).is_plus() {
                acc = acc + T::recip_of(self.s[i] as u64);
            }
        }
        Ok(acc)
    }

    /// `h-`: the same sum over the `-1` steps.
    pub fn h_minus<T: Scalar>(&self, n: usize) -> Result<T> {
        self.require_admissible(n)?;
        let mut acc = T::zero();
        for i in 1..=n {
            if !self.step_sign(i).is_plus() {
                acc = acc + T::recip_of(self.s[i] as u64);
            }
        }
        Ok(acc)
    }

    /// Diagnostic for the local-limit criterion: the partial sum of
    /// `(1/S_i) 1{x_i = -1}` at horizon `n`. Divergence is not decidable from
    /// a finite prefix, so callers compare the partial sums across horizons;
    /// `still_growing` reports whether the sum increased over the second half
    /// of the window.
    pub fn local_limit_diagnostic<T: Scalar>(&self, n: usize) -> Result<DivergenceDiagnostic<T>> {
        self.require_admissible(n)?;
        let at_half: T = self.h_minus(n / 2)?;
        let partial_sum: T = self.h_minus(n)?;
        let still_growing = partial_sum > at_half;
        Ok(DivergenceDiagnostic {
            partial_sum,
            still_growing,
        })
    }
}

/// Partial-sum diagnostic returned by
/// [`WalkProfile::local_limit_diagnostic`]. Not a verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceDiagnostic<T> {
    pub partial_sum: T,
    pub still_growing: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{exact, Exact};

    /// The running-example sequence used across the module tests.
    pub(crate) fn five_step_sequence() -> SignSequence {
        SignSequence::from_values([1, -1, 1, 1, -1]).unwrap()
    }

    #[test]
    fn walk_of_five_step_example() {
        let w = compute_walk(&five_step_sequence());
        assert_eq!(w.values(), &[1, 2, 1, 2, 3, 2]);
        assert_eq!(w.tau(), None);
        assert_eq!(w.num_vertices(5).unwrap(), 4);
    }

    #[test]
    fn walk_of_empty_sequence() {
        let w = compute_walk(&SignSequence::new(vec![]));
        assert_eq!(w.values(), &[1]);
        assert_eq!(w.tau(), None);
    }

    #[test]
    fn immediate_absorption() {
        let w = compute_walk(&SignSequence::from_values([-1]).unwrap());
        assert_eq!(w.values(), &[1, 0]);
        assert_eq!(w.tau(), Some(1));
        assert!(!w.survives_past(1));
        assert!(w.survives_before(1));
    }

    #[test]
    fn tau_is_first_zero() {
        // 1, 0, 1, 0: tau must be 1, not 3.
        let w = compute_walk(&SignSequence::from_values([-1, 1, -1]).unwrap());
        assert_eq!(w.tau(), Some(1));
    }

    #[test]
    fn h_plus_five_step_example() {
        let w = compute_walk(&five_step_sequence());
        // 1/S_1 + 1/S_3 + 1/S_4 = 1/2 + 1/2 + 1/3
        assert_eq!(w.h_plus::<Exact>(5).unwrap(), exact(4, 3));
        assert!((w.h_plus::<f64>(5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn h_plus_all_plus() {
        let x = SignSequence::new(vec![Sign::Plus; 3]);
        let w = compute_walk(&x);
        // S_i = i + 1: 1/2 + 1/3 + 1/4
        assert_eq!(w.h_plus::<Exact>(3).unwrap(), exact(13, 12));
    }

    #[test]
    fn h_plus_empty_sum() {
        let w = compute_walk(&SignSequence::new(vec![]));
        assert_eq!(w.h_plus::<Exact>(0).unwrap(), Exact::from_integer(0.into()));
    }

    #[test]
    fn h_plus_rejects_absorbed_walk() {
        let w = compute_walk(&SignSequence::from_values([-1, 1]).unwrap());
        assert!(matches!(
            w.h_plus::<f64>(2),
            Err(Error::WalkAbsorbed {
                tau: 1,
                requested: 2
            })
        ));
    }

    #[test]
    fn h_minus_five_step_example() {
        let w = compute_walk(&five_step_sequence());
        // -1 steps at i = 2 (S_2 = 1) and i = 5 (S_5 = 2): 1 + 1/2.
        assert_eq!(w.h_minus::<Exact>(5).unwrap(), exact(3, 2));
    }

    #[test]
    fn h_minus_no_minus_steps() {
        let x = SignSequence::new(vec![Sign::Plus; 6]);
        let w = compute_walk(&x);
        assert_eq!(w.h_minus::<f64>(6).unwrap(), 0.0);
    }

    #[test]
    fn h_minus_single_minus_step() {
        let w = compute_walk(&SignSequence::from_values([1, -1]).unwrap());
        // step 2 contributes 1/S_2 = 1
        assert_eq!(w.h_minus::<Exact>(2).unwrap(), exact(1, 1));
    }

    #[test]
    fn local_limit_all_plus_is_zero() {
        let x = SignSequence::new(vec![Sign::Plus; 8]);
        let w = compute_walk(&x);
        let d = w.local_limit_diagnostic::<Exact>(8).unwrap();
        assert_eq!(d.partial_sum, exact(0, 1));
        assert!(!d.still_growing);
    }

    #[test]
    fn local_limit_alternating_grows_linearly() {
        // +1, -1 repeated: every -1 lands on S_i = 1, partial sum at n = 2k is k.
        let x: SignSequence = (0..10)
            .map(|i| if i % 2 == 0 { Sign::Plus } else { Sign::Minus })
            .collect();
        let w = compute_walk(&x);
        let d = w.local_limit_diagnostic::<Exact>(10).unwrap();
        assert_eq!(d.partial_sum, exact(5, 1));
        assert!(d.still_growing);
    }

    #[test]
    fn local_limit_five_step_example() {
        let w = compute_walk(&five_step_sequence());
        // same summand convention as h-: 1/S_2 + 1/S_5 = 3/2
        let d = w.local_limit_diagnostic::<Exact>(5).unwrap();
        assert_eq!(d.partial_sum, exact(3, 2));
    }

    #[test]
    fn compute_walk_is_pure() {
        let x = five_step_sequence();
        assert_eq!(compute_walk(&x), compute_walk(&x));
    }
}
