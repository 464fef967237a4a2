//! Rooted trees with frozen/active vertices and edge creation times.
//!
//! Vertex ids are dense integers in creation order: Algorithm-1 order for
//! forward builds, appearance order for growth-coalescent builds. The two
//! constructions are compared only up to relabelling of active vertices, via
//! [`FreezeTree::canonical_key`].

use std::collections::HashSet;

use crate::{Error, Result};

pub type VertexId = u32;

/// Per-vertex state. Frozen vertices carry their freeze time as label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexStatus {
    Active,
    Frozen { time: u32 },
}

/// Rooted tree with per-vertex status and per-edge creation-time labels.
///
/// `parent[root] == root`; every other vertex stores the label of the edge to
/// its parent. `steps` is the number of sequence steps the tree accounts for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreezeTree {
    steps: usize,
    root: VertexId,
    parent: Vec<VertexId>,
    status: Vec<VertexStatus>,
    edge_time: Vec<u32>,
}

impl FreezeTree {
    /// The tree at time zero: a sole active root.
    pub fn single_active() -> Self {
        FreezeTree {
            steps: 0,
            root: 0,
            parent: vec![0],
            status: vec![VertexStatus::Active],
            edge_time: vec![0],
        }
    }

    /// Assembles a tree from raw arrays, validating shape and connectivity.
    pub fn from_parts(
        steps: usize,
        root: VertexId,
        parent: Vec<VertexId>,
        status: Vec<VertexStatus>,
        edge_time: Vec<u32>,
    ) -> Result<Self> {
        let n = parent.len();
        if n == 0 || status.len() != n || edge_time.len() != n || root as usize >= n {
            return Err(Error::OutOfRange("inconsistent tree arrays".into()));
        }
        if parent[root as usize] != root || edge_time[root as usize] != 0 {
            return Err(Error::OutOfRange(
                "root must be its own parent with no edge".into(),
            ));
        }
        for v in 0..n {
            if v as VertexId != root {
                if parent[v] as usize >= n || parent[v] as usize == v {
                    return Err(Error::OutOfRange(format!("vertex {v} has a bad parent")));
                }
                if edge_time[v] == 0 {
                    return Err(Error::OutOfRange(format!("vertex {v} lacks an edge label")));
                }
            }
        }
        let tree = FreezeTree {
            steps,
            root,
            parent,
            status,
            edge_time,
        };
        let reached = tree.depths().len();
        if reached != n {
            return Err(Error::OutOfRange("tree is not connected".into()));
        }
        Ok(tree)
    }

    pub fn num_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        if v == self.root {
            None
        } else {
            Some(self.parent[v as usize])
        }
    }

    pub fn status(&self, v: VertexId) -> VertexStatus {
        self.status[v as usize]
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.status[v as usize] == VertexStatus::Active
    }

    /// The label of the edge between `v` and its parent.
    pub fn edge_time(&self, v: VertexId) -> Option<u32> {
        if v == self.root {
            None
        } else {
            Some(self.edge_time[v as usize])
        }
    }

    pub fn active_vertices(&self) -> Vec<VertexId> {
        (0..self.num_vertices() as VertexId)
            .filter(|&v| self.is_active(v))
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| **s == VertexStatus::Active)
            .count()
    }

    pub fn frozen_labels(&self) -> Vec<u32> {
        self.status
            .iter()
            .filter_map(|s| match s {
                VertexStatus::Frozen { time } => Some(*time),
                VertexStatus::Active => None,
            })
            .collect()
    }

    pub fn edge_labels(&self) -> Vec<u32> {
        (0..self.num_vertices() as VertexId)
            .filter_map(|v| self.edge_time(v))
            .collect()
    }

    pub(crate) fn reserve(&mut self, additional: usize) {
        self.parent.reserve(additional);
        self.status.reserve(additional);
        self.edge_time.reserve(additional);
        crate::mem::advise_huge(&self.parent);
        crate::mem::advise_huge(&self.status);
        crate::mem::advise_huge(&self.edge_time);
    }

    pub(crate) fn attach_new(&mut self, parent: VertexId, time: u32) -> VertexId {
        let v = self.parent.len() as VertexId;
        self.parent.push(parent);
        self.status.push(VertexStatus::Active);
        self.edge_time.push(time);
        v
    }

    pub(crate) fn freeze(&mut self, v: VertexId, time: u32) {
        debug_assert!(self.is_active(v));
        self.status[v as usize] = VertexStatus::Frozen { time };
    }

    pub(crate) fn set_steps(&mut self, steps: usize) {
        self.steps = steps;
    }

    /// Builder-internal constructor: callers guarantee the arrays describe a
    /// connected rooted tree.
    pub(crate) fn from_parts_unchecked(
        steps: usize,
        root: VertexId,
        parent: Vec<VertexId>,
        status: Vec<VertexStatus>,
        edge_time: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(parent.len(), status.len());
        debug_assert_eq!(parent.len(), edge_time.len());
        debug_assert_eq!(parent[root as usize], root);
        FreezeTree {
            steps,
            root,
            parent,
            status,
            edge_time,
        }
    }

    /// Children of every vertex, each list sorted by edge label.
    pub fn children_sorted(&self) -> Vec<Vec<VertexId>> {
        let n = self.num_vertices();
        let mut children = vec![Vec::new(); n];
        for v in 0..n as VertexId {
            if v != self.root {
                children[self.parent[v as usize] as usize].push(v);
            }
        }
        for list in &mut children {
            list.sort_unstable_by_key(|&c| self.edge_time[c as usize]);
        }
        children
    }

    /// Depth of every vertex reachable from the root, in vertex-id order.
    /// For a valid tree this covers all vertices. Flat CSR adjacency; no
    /// per-vertex allocation.
    pub fn depths(&self) -> Vec<u32> {
        let n = self.num_vertices();
        let mut start = vec![0u32; n + 1];
        for v in 0..n {
            if v as VertexId != self.root {
                start[self.parent[v] as usize + 1] += 1;
            }
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut cursor = start.clone();
        let mut kids = vec![0 as VertexId; n.saturating_sub(1)];
        for v in 0..n {
            if v as VertexId != self.root {
                let p = self.parent[v] as usize;
                kids[cursor[p] as usize] = v as VertexId;
                cursor[p] += 1;
            }
        }
        let mut depth = vec![u32::MAX; n];
        let mut stack = vec![self.root];
        depth[self.root as usize] = 0;
        let mut seen = 0usize;
        while let Some(v) = stack.pop() {
            seen += 1;
            let (lo, hi) = (start[v as usize] as usize, start[v as usize + 1] as usize);
            for &c in &kids[lo..hi] {
                if depth[c as usize] == u32::MAX {
                    depth[c as usize] = depth[v as usize] + 1;
                    stack.push(c);
                }
            }
        }
        if seen < n {
            depth.retain(|&d| d != u32::MAX);
        }
        depth
    }

    pub fn height(&self) -> u32 {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Graph distance between two vertices, given the precomputed depths.
    pub fn distance(&self, depths: &[u32], u: VertexId, v: VertexId) -> u32 {
        let (mut a, mut b) = (u, v);
        let mut dist = 0u32;
        while depths[a as usize] > depths[b as usize] {
            a = self.parent[a as usize];
            dist += 1;
        }
        while depths[b as usize] > depths[a as usize] {
            b = self.parent[b as usize];
            dist += 1;
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
            dist += 2;
        }
        dist
    }

    /// Smallest edge label on the path between `u` and `v`; `None` if `u == v`.
    pub fn min_edge_on_path(&self, depths: &[u32], u: VertexId, v: VertexId) -> Option<u32> {
        let (mut a, mut b) = (u, v);
        let mut min = u32::MAX;
        while depths[a as usize] > depths[b as usize] {
            min = min.min(self.edge_time[a as usize]);
            a = self.parent[a as usize];
        }
        while depths[b as usize] > depths[a as usize] {
            min = min.min(self.edge_time[b as usize]);
            b = self.parent[b as usize];
        }
        while a != b {
            min = min
                .min(self.edge_time[a as usize])
                .min(self.edge_time[b as usize]);
            a = self.parent[a as usize];
            b = self.parent[b as usize];
        }
        (min != u32::MAX).then_some(min)
    }

    /// Total-order key invariant under relabelling of active vertices:
    /// the tree is serialized with the children of each vertex sorted by edge
    /// label and vertices identified by status class and freeze label.
    pub fn canonical_key(&self) -> String {
        self.key_impl(false)
    }

    /// Like [`Self::canonical_key`] but distinguishing active vertices by id,
    /// for distribution checks where the `a_1, ..., a_k` labels matter.
    pub fn labeled_key(&self) -> String {
        self.key_impl(true)
    }

    fn key_impl(&self, label_actives: bool) -> String {
        let children = self.children_sorted();
        let mut order = Vec::with_capacity(self.num_vertices());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend_from_slice(&children[v as usize]);
        }
        let mut keys: Vec<String> = vec![String::new(); self.num_vertices()];
        for &v in order.iter().rev() {
            let mut key = match self.status[v as usize] {
                VertexStatus::Active if label_actives => format!("a{v}"),
                VertexStatus::Active => "a".to_string(),
                VertexStatus::Frozen { time } => format!("f{time}"),
            };
            if !children[v as usize].is_empty() {
                key.push('[');
                for (idx, &c) in children[v as usize].iter().enumerate() {
                    if idx > 0 {
                        key.push(',');
                    }
                    key.push_str(&format!(
                        "{}>{}",
                        self.edge_time[c as usize], keys[c as usize]
                    ));
                }
                key.push(']');
            }
            keys[v as usize] = key;
        }
        keys.swap_remove(self.root as usize)
    }

    /// Membership check for the increasing double-labelled trees: all labels
    /// distinct, edge labels increase along every root-to-leaf path, and each
    /// frozen label exceeds the labels of all its adjacent edges.
    pub fn is_increasing(&self) -> bool {
        let mut labels = HashSet::new();
        for v in 0..self.num_vertices() as VertexId {
            if let Some(e) = self.edge_time(v) {
                if !labels.insert(e) {
                    return false;
                }
            }
            if let VertexStatus::Frozen { time } = self.status(v) {
                if !labels.insert(time) {
                    return false;
                }
            }
        }
        let children = self.children_sorted();
        for v in 0..self.num_vertices() as VertexId {
            let parent_edge = self.edge_time(v);
            if let VertexStatus::Frozen { time } = self.status(v) {
                if let Some(e) = parent_edge {
                    if time <= e {
                        return false;
                    }
                }
            }
            for &c in &children[v as usize] {
                let child_edge = self.edge_time[c as usize];
                if let Some(e) = parent_edge {
                    if child_edge <= e {
                        return false;
                    }
                }
                if let VertexStatus::Frozen { time } = self.status(v) {
                    if time <= child_edge {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::five_step_tree as running_tree;

    /// Test-only inverse of the canonical serialization: parses
    /// `tag` `[edge>child,...]` back into a tree.
    fn rebuild_from_key(key: &str) -> FreezeTree {
        struct Parser<'a> {
            bytes: &'a [u8],
            pos: usize,
            parent: Vec<VertexId>,
            status: Vec<VertexStatus>,
            edge_time: Vec<u32>,
        }
        impl Parser<'_> {
            fn number(&mut self) -> u32 {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                std::str::from_utf8(&self.bytes[start..self.pos])
                    .unwrap()
                    .parse()
                    .unwrap()
            }

            fn node(&mut self, parent: VertexId, edge: u32) -> VertexId {
                let id = self.parent.len() as VertexId;
                let status = match self.bytes[self.pos] {
                    b'a' => {
                        self.pos += 1;
                        VertexStatus::Active
                    }
                    b'f' => {
                        self.pos += 1;
                        VertexStatus::Frozen {
                            time: self.number(),
                        }
                    }
                    other => panic!("bad tag byte {other}"),
                };
                self.parent.push(if edge == 0 { id } else { parent });
                self.status.push(status);
                self.edge_time.push(edge);
                if self.pos < self.bytes.len() && self.bytes[self.pos] == b'[' {
                    loop {
                        self.pos += 1; // '[' or ','
                        let edge = self.number();
                        assert_eq!(self.bytes[self.pos], b'>');
                        self.pos += 1;
                        self.node(id, edge);
                        if self.bytes[self.pos] == b']' {
                            self.pos += 1;
                            break;
                        }
                    }
                }
                id
            }
        }
        let mut parser = Parser {
            bytes: key.as_bytes(),
            pos: 0,
            parent: Vec::new(),
            status: Vec::new(),
            edge_time: Vec::new(),
        };
        parser.node(0, 0);
        FreezeTree::from_parts(0, 0, parser.parent, parser.status, parser.edge_time).unwrap()
    }

    #[test]
    fn canonical_key_is_idempotent_under_rebuild() {
        let mut checked = 0u64;
        for total in 1..=4usize {
            for actives in 0..=total {
                crate::bijection::enumerate_increasing_trees(total, actives, &mut |t| {
                    let key = t.canonical_key();
                    assert_eq!(rebuild_from_key(&key).canonical_key(), key);
                    checked += 1;
                })
                .unwrap();
            }
        }
        assert!(checked > 400);
    }

    #[test]
    fn counts_and_labels() {
        let t = running_tree();
        assert_eq!(t.num_vertices(), 4);
        assert_eq!(t.active_count(), 2);
        let mut frozen = t.frozen_labels();
        frozen.sort_unstable();
        assert_eq!(frozen, vec![2, 5]);
        let mut edges = t.edge_labels();
        edges.sort_unstable();
        assert_eq!(edges, vec![1, 3, 4]);
    }

    #[test]
    fn depths_height_distance() {
        let t = running_tree();
        let d = t.depths();
        assert_eq!(d, vec![0, 1, 2, 2]);
        assert_eq!(t.height(), 2);
        assert_eq!(t.distance(&d, 2, 3), 2);
        assert_eq!(t.distance(&d, 0, 2), 2);
        assert_eq!(t.distance(&d, 1, 1), 0);
    }

    #[test]
    fn min_edge_on_path_matches_structure() {
        let t = running_tree();
        let d = t.depths();
        assert_eq!(t.min_edge_on_path(&d, 2, 3), Some(3));
        assert_eq!(t.min_edge_on_path(&d, 0, 3), Some(1));
        assert_eq!(t.min_edge_on_path(&d, 1, 1), None);
    }

    #[test]
    fn canonical_key_ignores_active_ids_labeled_key_does_not() {
        let t = running_tree();
        // same tree with the two active vertices created in the other order
        let u = FreezeTree::from_parts(
            5,
            0,
            vec![0, 3, 3, 0],
            vec![
                VertexStatus::Frozen { time: 2 },
                VertexStatus::Active,
                VertexStatus::Frozen { time: 5 },
                VertexStatus::Active,
            ],
            vec![0, 4, 3, 1],
        )
        .unwrap();
        assert_eq!(t.canonical_key(), u.canonical_key());
        assert_ne!(t.labeled_key(), u.labeled_key());
    }

    #[test]
    fn canonical_key_distinguishes_frozen_labels() {
        let t = running_tree();
        // swap the frozen labels 2 and 5
        let u = FreezeTree::from_parts(
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
        assert_ne!(t.canonical_key(), u.canonical_key());
    }

    #[test]
    fn increasing_check_accepts_valid_and_rejects_swapped_labels() {
        let t = running_tree();
        assert!(t.is_increasing());
        // frozen label 2 adjacent to child edge 3 violates the vertex rule
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
        assert!(!bad.is_increasing());
    }

    #[test]
    fn from_parts_rejects_cycles_and_orphans() {
        assert!(FreezeTree::from_parts(
            0,
            0,
            vec![0, 2, 1],
            vec![VertexStatus::Active; 3],
            vec![0, 1, 2],
        )
        .is_err());
    }
}
