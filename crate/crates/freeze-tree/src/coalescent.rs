//! Time-reversed growth-coalescent construction: read the sequence from step
//! `n` down to 1, inserting a one-vertex tree on -1 and merging two distinct
//! uniformly chosen trees root-to-root on +1. After relabelling of active
//! vertices the output has the same distribution as the forward build.
//!
//! Also the exact laws of the birth and coalescence times, and the
//! Bernoulli-sum sampler of any fixed vertex's height law.

use std::collections::BTreeMap;

use num_traits::One;
use rand::Rng;

use crate::rng::{seeded_rng, SimRng};
use crate::seq::{compute_walk, SignSequence, WalkProfile};
use crate::tree::{FreezeTree, VertexId, VertexStatus};
use crate::{Error, Exact, Result, Scalar};

/// One root-to-root merge: the tree rooted at `merged_root` was attached
/// below `kept_root` by an edge labelled `time`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeEvent {
    pub time: u32,
    pub kept_root: VertexId,
    pub merged_root: VertexId,
}

/// Handle of one tree in the transient pool.
#[derive(Clone, Copy, Debug)]
pub struct TreeHandle {
    pub root: VertexId,
    pub active_count: u32,
}

/// Dense pool of rooted trees supporting O(1) uniform ordered-pair merge.
#[derive(Clone, Debug, Default)]
pub struct ForestState {
    pool: Vec<TreeHandle>,
}

impl ForestState {
    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn handles(&self) -> &[TreeHandle] {
        &self.pool
    }

    fn insert(&mut self, handle: TreeHandle) {
        self.pool.push(handle);
    }

    /// Merges slot `second` into slot `first`, returning the two roots.
    /// The pair is drawn by two uniform slot draws with equal draws rejected,
    /// so it is uniform over the `k (k - 1)` ordered pairs.
    fn merge_slots(&mut self, first: usize, second: usize) -> (VertexId, VertexId) {
        let kept = self.pool[first];
        let merged = self.pool[second];
        self.pool[first].active_count = kept.active_count + merged.active_count;
        self.pool.swap_remove(second);
        (kept.root, merged.root)
    }
}

/// Result of one growth-coalescent run: the final tree, the per-vertex birth
/// times, and the full merge log in processing order (times descending).
#[derive(Clone, Debug)]
pub struct CoalescentBuild {
    pub tree: FreezeTree,
    pub birth: Vec<u32>,
    pub merge_log: Vec<MergeEvent>,
}

impl CoalescentBuild {
    /// Per-vertex heights in the final tree.
    pub fn heights(&self) -> Vec<u32> {
        self.tree.depths()
    }

    /// Merge log as CSV `i,root1,root2`, one row per merge in processing
    /// order, for downstream coalescent-process analysis.
    pub fn merge_log_to_csv(&self) -> String {
        let mut out = String::from("i,root1,root2\n");
        for event in &self.merge_log {
            out.push_str(&format!(
                "{},{},{}\n",
                event.time, event.kept_root, event.merged_root
            ));
        }
        out
    }
}

/// Runs the growth-coalescent construction over the first `n` steps of `x`.
/// Requires `tau > n`, so the initial forest has `S_n >= 1` trees.
pub fn build_coalescent(x: &SignSequence, n: usize, rng: &mut SimRng) -> Result<CoalescentBuild> {
    if n > x.len() {
        return Err(Error::OutOfRange(format!(
            "n = {n} exceeds sequence length {}",
            x.len()
        )));
    }
    let walk = compute_walk(x);
    if !walk.survives_past(n) {
        return Err(Error::WalkAbsorbed {
            tau: walk.tau().unwrap(),
            requested: n,
        });
    }
    let s_n = walk.s(n) as usize;
    let total = walk.num_vertices(n)? as usize;

    // parent id and edge label interleaved: each merge writes one cache line
    let mut link: Vec<(VertexId, u32)> = Vec::with_capacity(total);
    crate::mem::advise_huge(&link);
    link.extend((0..total as VertexId).map(|v| (v, 0)));
    let mut status = Vec::with_capacity(total);
    crate::mem::advise_huge(&status);
    status.resize(total, VertexStatus::Active);
    let mut birth = Vec::with_capacity(total);
    crate::mem::advise_huge(&birth);
    birth.resize(total, 0u32);
    let plus_steps = (n + s_n).saturating_sub(1) / 2;
    let mut merge_log = Vec::with_capacity(plus_steps);
    crate::mem::advise_huge(&merge_log);

    let mut forest = ForestState {
        pool: Vec::with_capacity(s_n + (n + 1 - s_n) / 2),
    };
    crate::mem::advise_huge(&forest.pool);
    for id in 0..s_n as VertexId {
        birth[id as usize] = n as u32;
        forest.insert(TreeHandle {
            root: id,
            active_count: 1,
        });
    }
    let mut next_id = s_n as VertexId;

    // Pool sizes are determined by the signs alone, so ordered pairs can be
    // drawn a block ahead of the merges and their handles prefetched.
    const PLAN_BLOCK: usize = 128;
    let mut pairs = [(0usize, 0usize); PLAN_BLOCK];
    let mut i = n;
    let mut pool = s_n;
    while i >= 1 {
        let mut planned = 0;
        let mut drawn = 0;
        let mut step = i;
        while planned < PLAN_BLOCK && step >= 1 {
            if x.step(step).is_plus() {
                debug_assert!(pool >= 2);
                let first = rng.gen_range(0..pool);
                let mut second = rng.gen_range(0..pool);
                while second == first {
                    second = rng.gen_range(0..pool);
                }
                pairs[drawn] = (first, second);
                drawn += 1;
                crate::mem::prefetch_index(&forest.pool, first);
                crate::mem::prefetch_index(&forest.pool, second);
                pool -= 1;
            } else {
                pool += 1;
            }
            planned += 1;
            step -= 1;
        }
        let mut pair_idx = 0;
        for k in 0..planned {
            let time = (i - k) as u32;
            if x.step(i - k).is_plus() {
                let (first, second) = pairs[pair_idx];
                pair_idx += 1;
                debug_assert!(first < forest.len() && second < forest.len());
                let (kept, merged) = forest.merge_slots(first, second);
                merge_log.push(MergeEvent {
                    time,
                    kept_root: kept,
                    merged_root: merged,
                });
            } else {
                status[next_id as usize] = VertexStatus::Frozen { time };
                birth[next_id as usize] = time - 1;
                forest.insert(TreeHandle {
                    root: next_id,
                    active_count: 0,
                });
                next_id += 1;
            }
        }
        i -= planned;
    }
    debug_assert_eq!(forest.len(), 1);
    debug_assert_eq!(next_id as usize, total);

    // The links land at random vertex positions; writing them in one pass
    // over the log with a prefetch window keeps the merge loop itself free
    // of scattered stores.
    const WRITE_AHEAD: usize = 64;
    for (k, event) in merge_log.iter().enumerate() {
        if let Some(ahead) = merge_log.get(k + WRITE_AHEAD) {
            crate::mem::prefetch_index(&link, ahead.merged_root as usize);
        }
        link[event.merged_root as usize] = (event.kept_root, event.time);
    }
    let parent: Vec<VertexId> = link.iter().map(|l| l.0).collect();
    let edge_time: Vec<u32> = link.iter().map(|l| l.1).collect();
    let root = forest.handles()[0].root;
    let tree = FreezeTree::from_parts_unchecked(n, root, parent, status, edge_time);
    Ok(CoalescentBuild {
        tree,
        birth,
        merge_log,
    })
}

pub fn build_coalescent_seeded(x: &SignSequence, n: usize, seed: u64) -> Result<CoalescentBuild> {
    build_coalescent(x, n, &mut seeded_rng(seed))
}

/// Law of the birth time of a uniform vertex:
/// `P(birth < m) = (m + 1 - S_m) / (n + 1 + S_n)` for `1 <= m <= n <= tau`.
pub fn birth_time_cdf<T: Scalar>(walk: &WalkProfile, n: usize, m: usize) -> Result<T> {
    if m < 1 || m > n {
        return Err(Error::OutOfRange(format!(
            "need 1 <= m <= n, got m = {m}, n = {n}"
        )));
    }
    check_range(walk, n)?;
    let numer = (m as i64 + 1 - walk.s(m)) as u64;
    let denom = (n as i64 + 1 + walk.s(n)) as u64;
    Ok(T::from_count(numer) / T::from_count(denom))
}

/// Birth times of the deterministic vertex label set after `n` steps:
/// `n` for each of the `S_n` active vertices, `u - 1` for the vertex frozen
/// at time `u`.
pub fn label_births(walk: &WalkProfile, n: usize) -> Result<Vec<u32>> {
    check_range(walk, n)?;
    let mut births = vec![n as u32; walk.s(n) as usize];
    births.extend(
        (1..=n)
            .filter(|&i| !walk.step_sign(i).is_plus())
            .map(|i| i as u32 - 1),
    );
    Ok(births)
}

/// Law of the coalescence time of two vertices with birth times `bu`, `bv`:
/// for `0 <= c < min(bu, bv)` with `x_{c+1} = +1`,
/// `P(coal = c) = (1/C(S_{c+1},2)) prod_{i=c+2..min(bu,bv), x_i=+1} (1 - 1/C(S_i,2))`;
/// zero, by convention, at `c` with `x_{c+1} = -1`.
pub fn coalescence_pmf<T: Scalar>(
    walk: &WalkProfile,
    n: usize,
    birth_u: u32,
    birth_v: u32,
    c: usize,
) -> Result<T> {
    let b = birth_u.min(birth_v) as usize;
    check_range(walk, n)?;
    if birth_u as usize > n || birth_v as usize > n {
        return Err(Error::OutOfRange("birth times exceed the horizon".into()));
    }
    if c >= b {
        return Err(Error::OutOfRange(format!(
            "need c < min birth, got c = {c}, min = {b}"
        )));
    }
    if !walk.step_sign(c + 1).is_plus() {
        return Ok(T::zero());
    }
    let mut p = T::one() / T::from_count(choose2(walk.s(c + 1)));
    for i in c + 2..=b {
        if walk.step_sign(i).is_plus() {
            let q = T::one() / T::from_count(choose2(walk.s(i)));
            p = p * (T::one() - q);
        }
    }
    Ok(p)
}

/// Sum of [`coalescence_pmf`] over its whole support; telescopes to one.
pub fn coalescence_support_sum<T: Scalar>(
    walk: &WalkProfile,
    n: usize,
    birth_u: u32,
    birth_v: u32,
) -> Result<T> {
    let b = birth_u.min(birth_v) as usize;
    let mut total = T::zero();
    for c in 0..b {
        total = total + coalescence_pmf(walk, n, birth_u, birth_v, c)?;
    }
    Ok(total)
}

fn choose2(s: i64) -> u64 {
    debug_assert!(s >= 2);
    (s * (s - 1) / 2) as u64
}

fn check_range(walk: &WalkProfile, n: usize) -> Result<()> {
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

/// Independent sampler of a fixed vertex's height law:
/// `sum_{i <= birth, x_i = +1} Bernoulli(1/S_i)`.
pub fn height_oracle_sample(walk: &WalkProfile, birth: usize, rng: &mut SimRng) -> Result<u32> {
    if birth > walk.horizon() {
        return Err(Error::OutOfRange("birth exceeds the walk horizon".into()));
    }
    if !walk.survives_before(birth) {
        return Err(Error::WalkAbsorbed {
            tau: walk.tau().unwrap(),
            requested: birth,
        });
    }
    let mut height = 0u32;
    for i in 1..=birth {
        if walk.step_sign(i).is_plus() && rng.gen_range(0..walk.s(i) as u64) == 0 {
            height += 1;
        }
    }
    Ok(height)
}

/// Coalescence time of two vertices, recovered from the merge log by a
/// union-find replay: the returned `c` is the largest reversed-time index at
/// which both already share a tree. For `u == v` this is the birth time.
pub fn coalescence_time(build: &CoalescentBuild, u: VertexId, v: VertexId) -> Option<u32> {
    if u == v {
        return Some(build.birth[u as usize]);
    }
    let mut find = UnionFind::new(build.tree.num_vertices());
    for event in &build.merge_log {
        find.union(event.kept_root, event.merged_root);
        if find.connected(u, v) {
            return Some(event.time - 1);
        }
    }
    None
}

struct UnionFind {
    parent: Vec<VertexId>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as VertexId).collect(),
        }
    }

    fn find(&mut self, mut v: VertexId) -> VertexId {
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    fn union(&mut self, a: VertexId, b: VertexId) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[rb as usize] = ra;
        }
    }

    fn connected(&mut self, a: VertexId, b: VertexId) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Exhaustively expands every ordered-pair choice of the growth-coalescent
/// construction, visiting each leaf tree (active vertices keep their
/// `a_1..a_k` identities as vertex ids). Returns the common leaf probability
/// `prod_{x_i = +1} 1/(S_i (S_i - 1))`. Accepts `tau >= n`.
pub fn enumerate_relabeled_with(
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
    check_range(&walk, n)?;
    let mut size: u128 = 1;
    let mut probability = Exact::one();
    for i in 1..=n {
        if walk.step_sign(i).is_plus() {
            let pairs = (walk.s(i) * (walk.s(i) - 1)) as u128;
            size = size.saturating_mul(pairs);
            probability /= Exact::from_integer((pairs as i64).into());
        }
    }
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }

    let s_n = walk.s(n) as usize;
    let total = walk.num_vertices(n)? as usize;
    let mut state = EnumState {
        parent: (0..total as VertexId).collect(),
        status: vec![VertexStatus::Active; total],
        edge_time: vec![0u32; total],
        pool: (0..s_n as VertexId).collect(),
        next_id: s_n as VertexId,
    };
    expand(&mut state, x, n, n, &mut visit);
    Ok(probability)
}

#[derive(Clone)]
struct EnumState {
    parent: Vec<VertexId>,
    status: Vec<VertexStatus>,
    edge_time: Vec<u32>,
    pool: Vec<VertexId>,
    next_id: VertexId,
}

fn expand(
    state: &mut EnumState,
    x: &SignSequence,
    i: usize,
    n: usize,
    visit: &mut impl FnMut(&FreezeTree),
) {
    if i == 0 {
        debug_assert_eq!(state.pool.len(), 1);
        let tree = FreezeTree::from_parts_unchecked(
            n,
            state.pool[0],
            state.parent.clone(),
            state.status.clone(),
            state.edge_time.clone(),
        );
        visit(&tree);
        return;
    }
    if x.step(i).is_plus() {
        for first in 0..state.pool.len() {
            for second in 0..state.pool.len() {
                if first == second {
                    continue;
                }
                let mut next = state.clone();
                let kept = next.pool[first];
                let merged = next.pool[second];
                next.parent[merged as usize] = kept;
                next.edge_time[merged as usize] = i as u32;
                next.pool.swap_remove(second);
                expand(&mut next, x, i - 1, n, visit);
            }
        }
    } else {
        let id = state.next_id;
        state.status[id as usize] = VertexStatus::Frozen { time: i as u32 };
        state.pool.push(id);
        state.next_id += 1;
        expand(state, x, i - 1, n, visit);
        state.next_id -= 1;
        state.pool.pop();
        state.status[id as usize] = VertexStatus::Active;
    }
}

/// Exhaustive distribution over relabelled trees (active identities kept),
/// each with the common probability of `(1/S_n!) prod 1/S_{i-1}`.
pub fn enumerate_relabeled(x: &SignSequence, n: usize, cap: u128) -> Result<Vec<(String, Exact)>> {
    let mut map: BTreeMap<String, Exact> = BTreeMap::new();
    let p = enumerate_relabeled_with(x, n, cap, |tree| {
        let prior = map.insert(tree.labeled_key(), Exact::one());
        assert!(
            prior.is_none(),
            "distinct choice paths produced the same relabelled tree"
        );
    })?;
    Ok(map.into_keys().map(|k| (k, p.clone())).collect())
}

/// The growth-coalescent distribution over canonical trees (active labels
/// collapsed), for comparison with the forward construction.
pub fn canonical_distribution(
    x: &SignSequence,
    n: usize,
    cap: u128,
) -> Result<Vec<(String, Exact)>> {
    let mut map: BTreeMap<String, Exact> = BTreeMap::new();
    let p = enumerate_relabeled_with(x, n, cap, |tree| {
        let entry = map
            .entry(tree.canonical_key())
            .or_insert_with(|| Exact::from_integer(0.into()));
        *entry = entry.clone() + Exact::one();
    })?;
    Ok(map
        .into_iter()
        .map(|(k, count)| (k, count * p.clone()))
        .collect())
}
