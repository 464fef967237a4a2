//! The bijection between increasing double-labelled trees and increasing
//! binary plane trees, and tangent-number counting of the fully frozen
//! members.
//!
//! Splitting a tree at the minimum edge label at its root maps it to a binary
//! node carrying that label, with the detached subtree on the left and the
//! remainder on the right; the inverse re-attaches left below right.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;

use crate::attach;
use crate::seq::{Sign, SignSequence};
use crate::tree::{FreezeTree, VertexStatus};
use crate::{Error, Result};

/// Vertex label of a binary tree: `a` or an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryLabel {
    Active,
    Time(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryNode {
    pub label: BinaryLabel,
    /// `(left, right)` indices; `None` for a leaf. Plane order matters.
    pub children: Option<(usize, usize)>,
}

/// Rooted binary plane tree with increasing integer labels along root paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncreasingBinaryTree {
    nodes: Vec<BinaryNode>,
    root: usize,
}

impl IncreasingBinaryTree {
    pub fn new(nodes: Vec<BinaryNode>, root: usize) -> Self {
        IncreasingBinaryTree { nodes, root }
    }

    pub fn num_vertices(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, idx: usize) -> &BinaryNode {
        &self.nodes[idx]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_none()).count()
    }

    pub fn active_leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.children.is_none() && n.label == BinaryLabel::Active)
            .count()
    }

    /// Plane-order serialization; equal keys mean equal trees.
    pub fn key(&self) -> String {
        fn rec(tree: &IncreasingBinaryTree, idx: usize, out: &mut String) {
            let node = &tree.nodes[idx];
            let label = match node.label {
                BinaryLabel::Active => "a".to_string(),
                BinaryLabel::Time(t) => t.to_string(),
            };
            match node.children {
                None => out.push_str(&label),
                Some((left, right)) => {
                    out.push('(');
                    out.push_str(&label);
                    out.push(' ');
                    rec(tree, left, out);
                    out.push(' ');
                    rec(tree, right, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        rec(self, self.root, &mut out);
        out
    }

    /// Membership check: every vertex has zero or two children, `a` labels
    /// sit on leaves only, integer labels are distinct and increase along
    /// paths directed from the root, and the arena is a tree on the root.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.root >= n {
            return Err(Error::NotIncreasingBinary("root out of range".into()));
        }
        let mut seen = vec![false; n];
        let mut labels = HashSet::new();
        let mut stack = vec![self.root];
        let mut visited = 0usize;
        while let Some(idx) = stack.pop() {
            if seen[idx] {
                return Err(Error::NotIncreasingBinary("node reached twice".into()));
            }
            seen[idx] = true;
            visited += 1;
            let node = &self.nodes[idx];
            match node.label {
                BinaryLabel::Active => {
                    if node.children.is_some() {
                        return Err(Error::NotIncreasingBinary(
                            "an 'a' label sits on an internal vertex".into(),
                        ));
                    }
                }
                BinaryLabel::Time(t) => {
                    if !labels.insert(t) {
                        return Err(Error::NotIncreasingBinary(format!("label {t} repeats")));
                    }
                }
            }
            if let Some((left, right)) = node.children {
                if left >= n || right >= n || left == right {
                    return Err(Error::NotIncreasingBinary("bad child indices".into()));
                }
                let parent_label = match node.label {
                    BinaryLabel::Time(t) => t,
                    BinaryLabel::Active => unreachable!(),
                };
                for child in [left, right] {
                    if let BinaryLabel::Time(t) = self.nodes[child].label {
                        if t <= parent_label {
                            return Err(Error::NotIncreasingBinary(format!(
                                "label {t} not above {parent_label}"
                            )));
                        }
                    }
                    stack.push(child);
                }
            }
        }
        if visited != n {
            return Err(Error::NotIncreasingBinary("disconnected arena".into()));
        }
        Ok(())
    }
}

/// Recursive scratch form shared by both directions.
#[derive(Clone, Debug)]
struct Scratch {
    label: BinaryLabel,
    /// `(edge label, subtree)`, kept sorted by edge label.
    children: Vec<(u32, Scratch)>,
}

fn scratch_from_tree(t: &FreezeTree) -> Scratch {
    fn rec(
        t: &FreezeTree,
        children: &[Vec<crate::tree::VertexId>],
        v: crate::tree::VertexId,
    ) -> Scratch {
        let label = match t.status(v) {
            VertexStatus::Active => BinaryLabel::Active,
            VertexStatus::Frozen { time } => BinaryLabel::Time(time),
        };
        let kids = children[v as usize]
            .iter()
            .map(|&c| (t.edge_time(c).unwrap(), rec(t, children, c)))
            .collect();
        Scratch {
            label,
            children: kids,
        }
    }
    let children = t.children_sorted();
    rec(t, &children, t.root())
}

fn scratch_to_tree(root: Scratch) -> FreezeTree {
    fn rec(
        scratch: &Scratch,
        parent: u32,
        edge: u32,
        parents: &mut Vec<u32>,
        statuses: &mut Vec<VertexStatus>,
        edges: &mut Vec<u32>,
        max_label: &mut u32,
    ) -> u32 {
        let id = parents.len() as u32;
        let status = match scratch.label {
            BinaryLabel::Active => VertexStatus::Active,
            BinaryLabel::Time(t) => {
                *max_label = (*max_label).max(t);
                VertexStatus::Frozen { time: t }
            }
        };
        parents.push(if edge == 0 { id } else { parent });
        statuses.push(status);
        edges.push(edge);
        for (e, sub) in &scratch.children {
            *max_label = (*max_label).max(*e);
            rec(sub, id, *e, parents, statuses, edges, max_label);
        }
        id
    }
    let mut parents = Vec::new();
    let mut statuses = Vec::new();
    let mut edges = Vec::new();
    let mut max_label = 0u32;
    rec(
        &root,
        0,
        0,
        &mut parents,
        &mut statuses,
        &mut edges,
        &mut max_label,
    );
    FreezeTree::from_parts(max_label as usize, 0, parents, statuses, edges)
        .expect("scratch is a tree")
}

/// Maps an increasing double-labelled tree to its increasing binary plane
/// tree: recursively split off the subtree under the smallest edge label at
/// the root; that label becomes a binary node with the split subtree on the
/// left and the remainder on the right.
pub fn phi(t: &FreezeTree) -> Result<IncreasingBinaryTree> {
    if !t.is_increasing() {
        return Err(Error::NotIncreasingTree(
            "input violates the increasing-label constraints".into(),
        ));
    }
    fn rec(mut scratch: Scratch, nodes: &mut Vec<BinaryNode>) -> usize {
        if scratch.children.is_empty() {
            nodes.push(BinaryNode {
                label: scratch.label,
                children: None,
            });
            return nodes.len() - 1;
        }
        // children are sorted: the first carries the minimum edge label
        let (min_edge, subtree) = scratch.children.remove(0);
        let left = rec(subtree, nodes);
        let right = rec(scratch, nodes);
        nodes.push(BinaryNode {
            label: BinaryLabel::Time(min_edge),
            children: Some((left, right)),
        });
        nodes.len() - 1
    }
    let mut nodes = Vec::new();
    let root = rec(scratch_from_tree(t), &mut nodes);
    let out = IncreasingBinaryTree { nodes, root };
    debug_assert!(out.validate().is_ok());
    Ok(out)
}

/// Inverse of [`phi`]: a binary node labelled `l` attaches the image of its
/// left subtree below the root of its right subtree's image with an edge
/// labelled `l`.
pub fn psi(b: &IncreasingBinaryTree) -> Result<FreezeTree> {
    b.validate()?;
    fn rec(b: &IncreasingBinaryTree, idx: usize) -> Scratch {
        let node = b.node(idx);
        match node.children {
            None => Scratch {
                label: node.label,
                children: Vec::new(),
            },
            Some((left, right)) => {
                let edge = match node.label {
                    BinaryLabel::Time(t) => t,
                    BinaryLabel::Active => unreachable!("validated"),
                };
                let attached = rec(b, left);
                let mut base = rec(b, right);
                let pos = base.children.partition_point(|(e, _)| *e < edge);
                base.children.insert(pos, (edge, attached));
                base
            }
        }
    }
    Ok(scratch_to_tree(rec(b, b.root)))
}

/// Visits every member of the increasing double-labelled trees with
/// `total_vertices` vertices of which `actives` are active, by exhausting
/// the admissible sign sequences and every construction path of each.
pub fn enumerate_increasing_trees(
    total_vertices: usize,
    actives: usize,
    visit: &mut impl FnMut(&FreezeTree),
) -> Result<()> {
    if actives > total_vertices || total_vertices == 0 {
        return Err(Error::OutOfRange(
            "need 0 <= actives <= vertices, vertices >= 1".into(),
        ));
    }
    let steps = 2 * total_vertices - actives - 1;
    let mut signs = Vec::with_capacity(steps);
    enumerate_sequences(&mut signs, 1, steps, actives as i64, &mut |x| {
        attach::enumerate_trees_with(x, steps, u128::MAX, |tree| visit(tree)).map(|_| ())
    })
}

/// Recursively extends a sign prefix, keeping the walk positive before the
/// final step and ending at `target`.
fn enumerate_sequences(
    signs: &mut Vec<Sign>,
    current: i64,
    remaining: usize,
    target: i64,
    apply: &mut impl FnMut(&SignSequence) -> Result<()>,
) -> Result<()> {
    if remaining == 0 {
        if current == target {
            apply(&SignSequence::new(signs.clone()))?;
        }
        return Ok(());
    }
    // feasibility: parity and range
    if (current - target).abs() > remaining as i64 {
        return Ok(());
    }
    for sign in [Sign::Plus, Sign::Minus] {
        let next = current + sign.value();
        // the walk may reach zero only on the last step (tau >= steps)
        if next == 0 && (remaining > 1 || target != 0) {
            continue;
        }
        if next < 0 {
            continue;
        }
        signs.push(sign);
        enumerate_sequences(signs, next, remaining - 1, target, apply)?;
        signs.pop();
    }
    Ok(())
}

/// All members of the increasing binary plane trees with parameters
/// `(actives, n)`: `2n - 1` vertices, `actives` leaves labelled `a`, the
/// remaining `2n - actives - 1` vertices labelled `1..` increasingly along
/// root paths.
pub fn enumerate_increasing_binary(actives: usize, n: usize) -> Result<Vec<IncreasingBinaryTree>> {
    if n == 0 || actives > n {
        return Err(Error::OutOfRange("need 1 <= n and actives <= n".into()));
    }
    let mut out = Vec::new();
    for shape in build_shapes(n) {
        let mut parent = vec![usize::MAX; shape.len()];
        for (v, children) in shape.iter().enumerate() {
            if let Some((left, right)) = children {
                parent[*left] = v;
                parent[*right] = v;
            }
        }
        let leaves: Vec<usize> = (0..shape.len()).filter(|&i| shape[i].is_none()).collect();
        for active_set in combinations(&leaves, actives) {
            let is_active: Vec<bool> = (0..shape.len()).map(|i| active_set.contains(&i)).collect();
            let total_labels = (shape.len() - actives) as u32;
            let mut labels = vec![0u32; shape.len()];
            assign_labels(
                &shape,
                &parent,
                &is_active,
                &mut labels,
                1,
                total_labels,
                &mut out,
            );
        }
    }
    Ok(out)
}

/// All full binary tree shapes with `leaves` leaves, as preorder arenas:
/// `shape[i] = Some((left, right))` or `None` for a leaf; the root is 0.
fn build_shapes(leaves: usize) -> Vec<Vec<Option<(usize, usize)>>> {
    if leaves == 1 {
        return vec![vec![None]];
    }
    let mut out = Vec::new();
    for left_leaves in 1..leaves {
        for left in build_shapes(left_leaves) {
            for right in build_shapes(leaves - left_leaves) {
                let mut arena = Vec::with_capacity(1 + left.len() + right.len());
                arena.push(Some((1, 1 + left.len())));
                for node in &left {
                    arena.push(node.map(|(a, b)| (a + 1, b + 1)));
                }
                let shift = 1 + left.len();
                for node in &right {
                    arena.push(node.map(|(a, b)| (a + shift, b + shift)));
                }
                out.push(arena);
            }
        }
    }
    out
}

fn combinations(items: &[usize], k: usize) -> Vec<HashSet<usize>> {
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<HashSet<usize>>,
    ) {
        if current.len() == k {
            out.push(current.iter().copied().collect());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Backtracking assignment of labels `next..=total`: a vertex may take the
/// next label once its parent is labelled, which enumerates exactly the
/// increasing labelings.
fn assign_labels(
    shape: &[Option<(usize, usize)>],
    parent: &[usize],
    is_active: &[bool],
    labels: &mut Vec<u32>,
    next: u32,
    total: u32,
    out: &mut Vec<IncreasingBinaryTree>,
) {
    if next > total {
        let nodes: Vec<BinaryNode> = (0..shape.len())
            .map(|i| BinaryNode {
                label: if is_active[i] {
                    BinaryLabel::Active
                } else {
                    BinaryLabel::Time(labels[i])
                },
                children: shape[i],
            })
            .collect();
        let tree = IncreasingBinaryTree { nodes, root: 0 };
        debug_assert!(tree.validate().is_ok());
        out.push(tree);
        return;
    }
    for v in 0..shape.len() {
        if is_active[v] || labels[v] != 0 {
            continue;
        }
        if parent[v] == usize::MAX || labels[parent[v]] != 0 {
            labels[v] = next;
            assign_labels(shape, parent, is_active, labels, next + 1, total, out);
            labels[v] = 0;
        }
    }
}

/// Tangent numbers by the Seidel-Entringer boustrophedon triangle:
/// the count of fully frozen increasing double-labelled trees on `n`
/// vertices. Exact for all `n`.
pub fn count_t0n(n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::OutOfRange("need n >= 1".into()));
    }
    // zigzag numbers a(m) via T(m, k) = T(m, k-1) + T(m-1, m-k); tangent
    // numbers are the odd-indexed zigzags a(2n - 1).
    let m = 2 * n - 1;
    let mut row: Vec<BigUint> = vec![BigUint::from(1u32)];
    for step in 1..=m {
        let mut next: Vec<BigUint> = Vec::with_capacity(step + 1);
        next.push(BigUint::from(0u32));
        for k in 1..=step {
            let val = next[k - 1].clone() + row[step - k].clone();
            next.push(val);
        }
        row = next;
    }
    Ok(row[m].clone())
}

/// Cap for [`count_t0n_exhaustive`].
pub const EXHAUSTIVE_COUNT_CAP: usize = 7;

/// Counts the fully frozen trees by exhausting the freeze/attach sequences of
/// length `2n - 1` absorbed exactly at the end. Up to `n = 5` the canonical
/// trees are collected in a set (cross-checking distinctness); for `n = 6, 7`
/// construction paths are counted directly, distinct paths giving distinct
/// trees.
pub fn count_t0n_exhaustive(n: usize) -> Result<BigUint> {
    if n == 0 || n > EXHAUSTIVE_COUNT_CAP {
        return Err(Error::OutOfRange(format!(
            "exhaustive mode supports 1 <= n <= {EXHAUSTIVE_COUNT_CAP}"
        )));
    }
    if n <= 5 {
        let mut keys = HashSet::new();
        let mut total = 0u64;
        enumerate_increasing_trees(n, 0, &mut |tree| {
            total += 1;
            assert!(
                keys.insert(tree.canonical_key()),
                "duplicate canonical tree"
            );
        })?;
        assert_eq!(keys.len() as u64, total);
        Ok(BigUint::from(total))
    } else {
        let steps = 2 * n - 1;
        let mut total = BigUint::from(0u32);
        let mut signs = Vec::with_capacity(steps);
        enumerate_sequences(&mut signs, 1, steps, 0, &mut |x| {
            let walk = crate::seq::compute_walk(x);
            let paths = attach::state_space_size(&walk, steps)?;
            total += BigUint::from(paths);
            Ok(())
        })?;
        Ok(total)
    }
}

/// Distribution helper for tests and the verify suite: groups an exhaustive
/// enumeration by canonical key with multiplicities.
pub fn enumeration_census(total_vertices: usize, actives: usize) -> Result<BTreeMap<String, u64>> {
    let mut census = BTreeMap::new();
    enumerate_increasing_trees(total_vertices, actives, &mut |tree| {
        *census.entry(tree.canonical_key()).or_insert(0) += 1;
    })?;
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::eight_vertex_tree;

    fn leaf(label: BinaryLabel) -> BinaryNode {
        BinaryNode {
            label,
            children: None,
        }
    }

    fn internal(t: u32, left: usize, right: usize) -> BinaryNode {
        BinaryNode {
            label: BinaryLabel::Time(t),
            children: Some((left, right)),
        }
    }

    /// The image of the eight-vertex fixture, written out node by node.
    fn eight_vertex_image() -> IncreasingBinaryTree {
        // indices: 0..=14
        let nodes = vec![
            internal(1, 1, 2),           // 0: root
            internal(2, 3, 4),           // 1
            internal(3, 5, 6),           // 2
            leaf(BinaryLabel::Time(4)),  // 3
            internal(6, 7, 8),           // 4
            internal(5, 9, 10),          // 5
            leaf(BinaryLabel::Active),   // 6
            internal(9, 11, 12),         // 7
            leaf(BinaryLabel::Time(8)),  // 8
            leaf(BinaryLabel::Time(7)),  // 9
            internal(10, 13, 14),        // 10
            leaf(BinaryLabel::Time(11)), // 11
            leaf(BinaryLabel::Active),   // 12
            leaf(BinaryLabel::Active),   // 13
            leaf(BinaryLabel::Active),   // 14
        ];
        IncreasingBinaryTree { nodes, root: 0 }
    }

    #[test]
    fn phi_of_worked_example() {
        let image = phi(&eight_vertex_tree()).unwrap();
        image.validate().unwrap();
        assert_eq!(image.key(), eight_vertex_image().key());
    }

    #[test]
    fn psi_of_worked_example() {
        let back = psi(&eight_vertex_image()).unwrap();
        assert_eq!(back.canonical_key(), eight_vertex_tree().canonical_key());
    }

    #[test]
    fn single_vertex_maps_to_itself() {
        let t = FreezeTree::single_active();
        let image = phi(&t).unwrap();
        assert_eq!(image.num_vertices(), 1);
        assert_eq!(image.node(image.root()).label, BinaryLabel::Active);
        let back = psi(&image).unwrap();
        assert_eq!(back.canonical_key(), t.canonical_key());
    }

    #[test]
    fn two_vertex_trees_map_to_the_two_arrangements() {
        // root frozen 2, active child attached by edge 1
        let a = FreezeTree::from_parts(
            2,
            0,
            vec![0, 0],
            vec![VertexStatus::Frozen { time: 2 }, VertexStatus::Active],
            vec![0, 1],
        )
        .unwrap();
        assert_eq!(phi(&a).unwrap().key(), "(1 a 2)");
        // root active, frozen-2 child attached by edge 1
        let b = FreezeTree::from_parts(
            2,
            0,
            vec![0, 0],
            vec![VertexStatus::Active, VertexStatus::Frozen { time: 2 }],
            vec![0, 1],
        )
        .unwrap();
        assert_eq!(phi(&b).unwrap().key(), "(1 2 a)");
    }

    #[test]
    fn phi_rejects_invalid_input() {
        let bad = FreezeTree::from_parts(
            2,
            0,
            vec![0, 0],
            vec![VertexStatus::Frozen { time: 1 }, VertexStatus::Active],
            vec![0, 2],
        )
        .unwrap();
        // frozen label 1 below its adjacent edge 2
        assert!(phi(&bad).is_err());
    }

    #[test]
    fn round_trip_over_all_small_members() {
        // all increasing double-labelled trees with at most 5 vertices
        for total in 1..=5usize {
            for actives in 0..=total {
                let mut count = 0u64;
                let mut images = HashSet::new();
                enumerate_increasing_trees(total, actives, &mut |tree| {
                    count += 1;
                    let image = phi(tree).unwrap();
                    image.validate().unwrap();
                    assert_eq!(image.num_vertices(), 2 * total - 1);
                    assert_eq!(image.active_leaf_count(), actives);
                    images.insert(image.key());
                    let back = psi(&image).unwrap();
                    assert_eq!(back.canonical_key(), tree.canonical_key());
                })
                .unwrap();
                // injectivity on the enumerated set
                assert_eq!(images.len() as u64, count, "({total}, {actives})");
            }
        }
    }

    #[test]
    fn binary_enumeration_matches_tree_enumeration() {
        // |B+_{k,n}| equals |T+_{k,n}|; phi maps onto the enumerated binary
        // set and psi returns from it.
        for n in 1..=4usize {
            for k in 0..=n {
                let binaries = enumerate_increasing_binary(k, n).unwrap();
                let mut tree_count = 0u64;
                let mut image_keys = HashSet::new();
                enumerate_increasing_trees(n, k, &mut |tree| {
                    tree_count += 1;
                    image_keys.insert(phi(tree).unwrap().key());
                })
                .unwrap();
                assert_eq!(binaries.len() as u64, tree_count, "({k}, {n})");
                for b in &binaries {
                    assert!(image_keys.contains(&b.key()), "({k}, {n}): {}", b.key());
                    let t = psi(b).unwrap();
                    assert_eq!(phi(&t).unwrap().key(), b.key());
                }
            }
        }
    }

    #[test]
    fn tangent_numbers_by_recurrence() {
        let expected: [u64; 7] = [1, 2, 16, 272, 7936, 353_792, 22_368_256];
        for (i, &want) in expected.iter().enumerate() {
            assert_eq!(
                count_t0n(i + 1).unwrap(),
                BigUint::from(want),
                "n = {}",
                i + 1
            );
        }
    }

    #[test]
    fn exhaustive_count_matches_recurrence_small() {
        for n in 1..=4usize {
            assert_eq!(
                count_t0n_exhaustive(n).unwrap(),
                count_t0n(n).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn exhaustive_count_cap() {
        assert!(count_t0n_exhaustive(8).is_err());
        assert!(count_t0n(12).is_ok());
    }

    #[test]
    fn census_is_uniform_multiplicity_one() {
        let census = enumeration_census(3, 0).unwrap();
        assert_eq!(census.len(), 16);
        assert!(census.values().all(|&c| c == 1));
    }
}
