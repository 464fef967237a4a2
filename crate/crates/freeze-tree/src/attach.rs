//! Forward construction: read the sequence left to right, attaching on +1
//! and freezing on -1, each time at a uniformly chosen active vertex. Also
//! the exact product law of the resulting tree distribution, attainability
//! checking, and exhaustive small-n enumeration.

use std::collections::BTreeMap;

use num_traits::One;
use rand::Rng;

use crate::rng::{seeded_rng, SimRng};
use crate::seq::{compute_walk, Sign, SignSequence, WalkProfile};
use crate::tree::{FreezeTree, VertexId};
use crate::{Error, Exact, Result, Scalar};

/// Default cap on the exhaustive enumeration state space.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Tree under construction plus the dense active-vertex pool that gives O(1)
/// uniform pick and swap-remove.
#[derive(Clone, Debug)]
pub struct AttachState {
    tree: FreezeTree,
    active: Vec<VertexId>,
}

impl AttachState {
    pub fn new() -> Self {
        AttachState {
            tree: FreezeTree::single_active(),
            active: vec![0],
        }
    }

    pub fn with_capacity(steps: usize) -> Self {
        let mut state = AttachState::new();
        state.tree.reserve(steps + 1);
        state.active.reserve(steps + 1);
        crate::mem::advise_huge(&state.active);
        state
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Applies step `i` with the active vertex at pool slot `slot`.
    fn apply(&mut self, i: u32, sign: Sign, slot: usize) {
        match sign {
            Sign::Plus => {
                let target = self.active[slot];
                let v = self.tree.attach_new(target, i);
                self.active.push(v);
            }
            Sign::Minus => {
                let v = self.active.swap_remove(slot);
                self.tree.freeze(v, i);
            }
        }
    }

    fn finish(mut self, steps: usize) -> FreezeTree {
        self.tree.set_steps(steps);
        self.tree
    }
}

impl Default for AttachState {
    fn default() -> Self {
        Self::new()
    }
}

/// Steps planned per batch: the pool size at every step is determined by the
/// sign sequence alone, so the uniform slots can be drawn ahead of their use
/// and their targets prefetched, which hides the memory latency of the
/// random accesses on large builds.
const PLAN_BLOCK: usize = 128;

/// Runs the forward construction for `n` steps of `x`. If the walk is
/// absorbed before `n` the tree stops evolving at that point.
pub fn build_attach(x: &SignSequence, n: usize, rng: &mut SimRng) -> Result<FreezeTree> {
    if n > x.len() {
        return Err(Error::OutOfRange(format!(
            "n = {n} exceeds sequence length {}",
            x.len()
        )));
    }
    let mut state = AttachState::with_capacity(n);
    let mut slots = [0usize; PLAN_BLOCK];
    let mut i = 1usize;
    let mut pool = 1usize; // = S_{i-1} while the walk is alive
    while i <= n && pool > 0 {
        let mut planned = 0;
        while planned < PLAN_BLOCK && i + planned <= n && pool > 0 {
            let slot = rng.gen_range(0..pool);
            slots[planned] = slot;
            crate::mem::prefetch_index(&state.active, slot);
            pool = if x.step(i + planned).is_plus() {
                pool + 1
            } else {
                pool - 1
            };
            planned += 1;
        }
        for (k, &slot) in slots.iter().enumerate().take(planned) {
            debug_assert!(slot < state.active.len());
            state.apply((i + k) as u32, x.step(i + k), slot);
        }
        i += planned;
    }
    Ok(state.finish(n))
}

pub fn build_attach_seeded(x: &SignSequence, n: usize, seed: u64) -> Result<FreezeTree> {
    build_attach(x, n, &mut seeded_rng(seed))
}

/// The probability of any single attainable tree: `prod_{i=1..n} 1/S_{i-1}`.
/// Valid for `n <= tau`.
pub fn tree_probability<T: Scalar>(walk: &WalkProfile, n: usize) -> Result<T> {
    check_enumerable(walk, n)?;
    let mut p = T::one();
    for i in 1..=n {
        p = p / T::from_count(walk.s(i - 1) as u64);
    }
    Ok(p)
}

/// Number of distinct choice paths of the forward construction:
/// `prod_{i=1..n} S_{i-1}`, saturating at `u128::MAX`.
pub fn state_space_size(walk: &WalkProfile, n: usize) -> Result<u128> {
    check_enumerable(walk, n)?;
    let mut size: u128 = 1;
    for i in 1..=n {
        size = size.saturating_mul(walk.s(i - 1) as u128);
    }
    Ok(size)
}

fn check_enumerable(walk: &WalkProfile, n: usize) -> Result<()> {
    if n > walk.horizon() {
        return Err(Error::OutOfRange(format!(
            "horizon {n} exceeds walk length {}",
            walk.horizon()
        )));
    }
    if !walk.survives_before(n) {
        return Err(Error::WalkAbsorbed {
            tau: walk.tau().unwrap(),
            requested: n,
        });
    }
    Ok(())
}

/// True iff `t` could have been produced by the forward construction on
/// `(x, n)`: label sets, counts and the increasing-label constraints all
/// match. Comparison is against the effective horizon `min(n, tau)`, past
/// which the dynamics are constant.
pub fn is_attainable(t: &FreezeTree, x: &SignSequence, n: usize) -> bool {
    if n > x.len() {
        return false;
    }
    let walk = compute_walk(x);
    let m = walk.tau().map_or(n, |tau| tau.min(n));
    let expected_frozen: Vec<u32> = (1..=m)
        .filter(|&i| !x.step(i).is_plus())
        .map(|i| i as u32)
        .collect();
    let expected_edges: Vec<u32> = (1..=m)
        .filter(|&i| x.step(i).is_plus())
        .map(|i| i as u32)
        .collect();
    let mut frozen = t.frozen_labels();
    frozen.sort_unstable();
    let mut edges = t.edge_labels();
    edges.sort_unstable();
    if frozen != expected_frozen || edges != expected_edges {
        return false;
    }
    if t.active_count() as i64 != walk.s(m) {
        return false;
    }
    if t.num_vertices() as u64 != walk.num_vertices(m).expect("m <= tau") {
        return false;
    }
    t.is_increasing()
}

/// Exhaustively expands every choice path of the forward construction,
/// invoking `visit` once per attainable tree with its exact probability.
/// Requires `tau >= n` and a state space within `cap`.
pub fn enumerate_trees_with(
    x: &SignSequence,
    n: usize,
    cap: u128,
    mut visit: impl FnMut(&FreezeTree),
) -> Result<Exact> {
    if n > x.len() {
        return Err(Error::OutOfRange(format!(
            "n = {n} exceeds sequence length {}",
            x.len()
        )));
    }
    let walk = compute_walk(x);
    let size = state_space_size(&walk, n)?;
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let probability: Exact = tree_probability(&walk, n)?;
    let mut state = AttachState::new();
    expand(&mut state, x, 1, n, &mut visit);
    Ok(probability)
}

fn expand(
    state: &mut AttachState,
    x: &SignSequence,
    i: usize,
    n: usize,
    visit: &mut impl FnMut(&FreezeTree),
) {
    if i > n {
        let mut tree = state.tree.clone();
        tree.set_steps(n);
        visit(&tree);
        return;
    }
    let sign = x.step(i);
    for slot in 0..state.active_count() {
        let mut next = state.clone();
        next.apply(i as u32, sign, slot);
        expand(&mut next, x, i + 1, n, visit);
    }
}

/// Exhaustive enumeration keyed by canonical form, each with its exact
/// probability. Every attainable tree appears exactly once and the
/// probabilities sum to one.
pub fn enumerate_trees(x: &SignSequence, n: usize, cap: u128) -> Result<Vec<(String, Exact)>> {
    let mut map: BTreeMap<String, Exact> = BTreeMap::new();
    let p = enumerate_trees_with(x, n, cap, |tree| {
        let prior = map.insert(tree.canonical_key(), Exact::one());
        assert!(
            prior.is_none(),
            "distinct choice paths produced the same labelled tree"
        );
    })?;
    Ok(map.into_keys().map(|k| (k, p.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{five_step_sequence, five_step_tree};
    use crate::rng::stream_rng;
    use crate::{exact, Exact};
    use num_traits::Zero;

    #[test]
    fn empty_build_is_single_active_root() {
        let t = build_attach_seeded(&SignSequence::new(vec![]), 0, 1).unwrap();
        assert_eq!(t.num_vertices(), 1);
        assert_eq!(t.active_count(), 1);
    }

    #[test]
    fn single_minus_freezes_the_root() {
        let t = build_attach_seeded(&SignSequence::from_values([-1]).unwrap(), 1, 1).unwrap();
        assert_eq!(t.num_vertices(), 1);
        assert_eq!(t.frozen_labels(), vec![1]);
    }

    #[test]
    fn build_stops_evolving_after_absorption() {
        let x = SignSequence::from_values([1, -1, -1, 1, 1]).unwrap();
        let t = build_attach_seeded(&x, 5, 3).unwrap();
        assert_eq!(t.num_vertices(), 2);
        assert_eq!(t.active_count(), 0);
        assert!(is_attainable(&t, &x, 5));
    }

    #[test]
    fn tree_probability_five_step_example() {
        let walk = compute_walk(&five_step_sequence());
        assert_eq!(tree_probability::<Exact>(&walk, 5).unwrap(), exact(1, 12));
    }

    #[test]
    fn tree_probability_forced_step() {
        let walk = compute_walk(&SignSequence::from_values([1]).unwrap());
        assert_eq!(tree_probability::<Exact>(&walk, 1).unwrap(), exact(1, 1));
    }

    #[test]
    fn tree_probability_all_plus() {
        let walk = compute_walk(&SignSequence::new(vec![Sign::Plus; 3]));
        assert_eq!(tree_probability::<Exact>(&walk, 3).unwrap(), exact(1, 6));
    }

    #[test]
    fn tree_probability_rejects_past_absorption() {
        let walk = compute_walk(&SignSequence::from_values([-1, 1]).unwrap());
        assert!(tree_probability::<Exact>(&walk, 2).is_err());
        // n = tau itself is fine
        assert_eq!(tree_probability::<Exact>(&walk, 1).unwrap(), exact(1, 1));
    }

    #[test]
    fn builds_hit_the_five_step_example_tree_with_its_probability() {
        let x = five_step_sequence();
        let target = five_step_tree().canonical_key();
        let reps = 120_000;
        let mut hits = 0u64;
        for rep in 0..reps {
            let mut rng = stream_rng(99, rep);
            let t = build_attach(&x, 5, &mut rng).unwrap();
            if t.canonical_key() == target {
                hits += 1;
            }
        }
        // p = 1/12; four-sigma binomial band
        let p = 1.0 / 12.0;
        let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits as f64 - reps as f64 * p).abs() < 4.0 * sigma,
            "hits = {hits}"
        );
    }

    #[test]
    fn enumerate_five_step_example() {
        let x = five_step_sequence();
        let trees = enumerate_trees(&x, 5, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(trees.len(), 12);
        let total: Exact = trees
            .iter()
            .map(|(_, p)| p.clone())
            .fold(Exact::zero(), |a, b| a + b);
        assert_eq!(total, exact(1, 1));
        assert!(trees
            .iter()
            .any(|(k, _)| *k == five_step_tree().canonical_key()));
    }

    #[test]
    fn enumerate_tau_equals_horizon() {
        // +1, -1, -1 absorbs exactly at n = 3: two trees, each 1/2.
        let x = SignSequence::from_values([1, -1, -1]).unwrap();
        let trees = enumerate_trees(&x, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(trees.len(), 2);
        for (_, p) in &trees {
            assert_eq!(*p, exact(1, 2));
        }
    }

    #[test]
    fn enumerate_single_plus() {
        let x = SignSequence::from_values([1]).unwrap();
        let trees = enumerate_trees(&x, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].1, exact(1, 1));
    }

    #[test]
    fn enumerate_two_plus() {
        let x = SignSequence::from_values([1, 1]).unwrap();
        let trees = enumerate_trees(&x, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(trees.len(), 2);
        for (_, p) in &trees {
            assert_eq!(*p, exact(1, 2));
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let x = SignSequence::new(vec![Sign::Plus; 10]);
        assert!(matches!(
            enumerate_trees(&x, 10, 100),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn exhaustive_check_at_depth_eight() {
        // alternating signs keep the state space at 16 paths for n = 8
        let x = SignSequence::from_values([1, -1, 1, -1, 1, -1, 1, -1]).unwrap();
        let walk = compute_walk(&x);
        let p: Exact = tree_probability(&walk, 8).unwrap();
        assert_eq!(p, exact(1, 16));
        let trees = enumerate_trees(&x, 8, DEFAULT_ENUMERATION_CAP).unwrap();
        let total: Exact = trees
            .iter()
            .map(|(_, q)| q.clone())
            .fold(Exact::zero(), |a, b| a + b);
        assert!(trees.iter().all(|(_, q)| *q == p));
        assert_eq!(total, exact(1, 1));
    }

    #[test]
    fn attainability_examples() {
        let x = five_step_sequence();
        assert!(is_attainable(&five_step_tree(), &x, 5));
        // count mismatch: an active vertex pretending S_n = 0
        let y = SignSequence::from_values([1, -1, -1]).unwrap();
        assert!(!is_attainable(&five_step_tree(), &y, 3));
    }

    #[test]
    fn attainability_rejects_label_order_violation() {
        use crate::tree::VertexStatus;
        // frozen 2 carries child edge 3: vertex label smaller than adjacent edge
        let bad = FreezeTree::from_parts(
            5,
            0,
            vec![0, 0, 1, 1],
            vec![
                VertexStatus::Frozen { time: 5 },
                VertexStatus::Active,
                VertexStatus::Frozen { time: 2 },
                VertexStatus::Active,
            ],
            vec![0, 1, 3, 4],
        )
        .unwrap();
        assert!(!is_attainable(&bad, &five_step_sequence(), 5));
    }

    #[test]
    fn monte_carlo_matches_exact_distribution() {
        // product of S_{i-1} is 1*2*3*4 = 24
        let x = SignSequence::from_values([1, 1, 1, -1]).unwrap();
        let exact_dist = enumerate_trees(&x, 4, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(exact_dist.len(), 24);
        let reps = 100_000u64;
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for rep in 0..reps {
            let mut rng = stream_rng(7, rep);
            let t = build_attach(&x, 4, &mut rng).unwrap();
            *counts.entry(t.canonical_key()).or_insert(0) += 1;
        }
        let p = 1.0 / 24.0;
        let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
        for (key, _) in &exact_dist {
            let observed = *counts.get(key).unwrap_or(&0) as f64;
            assert!(
                (observed - reps as f64 * p).abs() < 4.0 * sigma,
                "key {key} observed {observed}"
            );
        }
    }
}
