//! Shared test fixtures: the small trees used across module tests.

use crate::seq::SignSequence;
use crate::tree::{FreezeTree, VertexStatus};

/// The five-step example sequence: +1, -1, +1, +1, -1.
pub(crate) fn five_step_sequence() -> SignSequence {
    SignSequence::from_values([1, -1, 1, 1, -1]).unwrap()
}

/// One realisation of the five-step example: frozen 2 at the
/// root's end of edge 1, an active vertex above carrying frozen 5 (edge 3)
/// and an active leaf (edge 4). Rooted at the frozen-2 vertex.
pub(crate) fn five_step_tree() -> FreezeTree {
    FreezeTree::from_parts(
        5,
        0,
        vec![0, 0, 1, 1],
        vec![
            VertexStatus::Frozen { time: 2 },
            VertexStatus::Active,
            VertexStatus::Frozen { time: 5 },
            VertexStatus::Active,
        ],
        vec![0, 1, 3, 4],
    )
    .unwrap()
}

/// An 8-vertex member of the increasing double-labelled trees with 4 active
/// vertices, edge labels {1,2,3,5,6,9,10} and frozen labels {4,7,8,11}.
///
/// ids: 0 = root a, 1 = frozen 8, 2 = a, 3 = frozen 4, 4 = a, 5 = frozen 7,
/// 6 = a, 7 = frozen 11.
pub(crate) fn eight_vertex_tree() -> FreezeTree {
    FreezeTree::from_parts(
        11,
        0,
        vec![0, 0, 0, 1, 1, 2, 2, 4],
        vec![
            VertexStatus::Active,
            VertexStatus::Frozen { time: 8 },
            VertexStatus::Active,
            VertexStatus::Frozen { time: 4 },
            VertexStatus::Active,
            VertexStatus::Frozen { time: 7 },
            VertexStatus::Active,
            VertexStatus::Frozen { time: 11 },
        ],
        vec![0, 1, 3, 2, 6, 5, 10, 9],
    )
    .unwrap()
}
