//! Property tests: structural invariants that must hold for every sequence
//! and seed, checked over randomized inputs.

use proptest::prelude::*;

use freeze_tree::attach::{build_attach_seeded, is_attainable};
use freeze_tree::bijection::{phi, psi};
use freeze_tree::coalescent::build_coalescent_seeded;
use freeze_tree::export::{tree_from_json, tree_to_json};
use freeze_tree::seq::{compute_walk, Sign, SignSequence};
use freeze_tree::Exact;

fn sign_sequence(max_len: usize) -> impl Strategy<Value = SignSequence> {
    prop::collection::vec(prop::bool::ANY, 0..max_len).prop_map(|bits| {
        bits.into_iter()
            .map(|b| if b { Sign::Plus } else { Sign::Minus })
            .collect()
    })
}

/// A sequence whose walk stays positive through its whole length, obtained
/// by cutting a random sequence just before absorption.
fn surviving_sequence(max_len: usize) -> impl Strategy<Value = SignSequence> {
    prop::collection::vec(prop::bool::ANY, 0..max_len).prop_map(|bits| {
        let mut s = 1i64;
        bits.into_iter()
            .map(|b| if b { Sign::Plus } else { Sign::Minus })
            .take_while(|sign| {
                s += sign.value();
                s > 0
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn walk_steps_are_unit_and_tau_is_first_zero(x in sign_sequence(64)) {
        let w = compute_walk(&x);
        prop_assert_eq!(w.s(0), 1);
        let mut first_zero = None;
        for i in 1..=x.len() {
            prop_assert_eq!((w.s(i) - w.s(i - 1)).abs(), 1);
            if w.s(i) == 0 && first_zero.is_none() {
                first_zero = Some(i);
            }
        }
        prop_assert_eq!(w.tau(), first_zero);
    }

    #[test]
    fn forward_build_satisfies_core_invariants(x in sign_sequence(48), seed: u64) {
        let n = x.len();
        let t = build_attach_seeded(&x, n, seed).unwrap();
        prop_assert!(is_attainable(&t, &x, n));
        let w = compute_walk(&x);
        let m = w.tau().map_or(n, |tau| tau.min(n));
        prop_assert_eq!(t.active_count() as i64, w.s(m));
        prop_assert_eq!(t.num_vertices() as u64, w.num_vertices(m).unwrap());
        prop_assert!(t.is_increasing());
    }

    #[test]
    fn reversed_build_satisfies_core_invariants(x in surviving_sequence(48), seed: u64) {
        let n = x.len();
        let b = build_coalescent_seeded(&x, n, seed).unwrap();
        prop_assert!(is_attainable(&b.tree, &x, n));
        // one merge per +1 step, and births follow the definition
        let plus_steps = (1..=n).filter(|&i| x.step(i).is_plus()).count();
        prop_assert_eq!(b.merge_log.len(), plus_steps);
        for v in 0..b.tree.num_vertices() as u32 {
            match b.tree.status(v) {
                freeze_tree::tree::VertexStatus::Active =>
                    prop_assert_eq!(b.birth[v as usize] as usize, n),
                freeze_tree::tree::VertexStatus::Frozen { time } =>
                    prop_assert_eq!(b.birth[v as usize], time - 1),
            }
        }
    }

    #[test]
    fn hplus_is_scalar_agnostic(x in surviving_sequence(40)) {
        let n = x.len();
        let w = compute_walk(&x);
        let exact: Exact = w.h_plus(n).unwrap();
        let float: f64 = w.h_plus(n).unwrap();
        let exact_as_float =
            num_traits::ToPrimitive::to_f64(&exact).unwrap();
        prop_assert!((exact_as_float - float).abs() < 1e-12);
    }

    #[test]
    fn bijection_round_trips_on_built_trees(x in sign_sequence(24), seed: u64) {
        let n = x.len();
        let t = build_attach_seeded(&x, n, seed).unwrap();
        let image = phi(&t).unwrap();
        prop_assert!(image.validate().is_ok());
        prop_assert_eq!(image.active_leaf_count(), t.active_count());
        let back = psi(&image).unwrap();
        prop_assert_eq!(back.canonical_key(), t.canonical_key());
    }

    #[test]
    fn tree_json_round_trips(x in sign_sequence(32), seed: u64) {
        let t = build_attach_seeded(&x, x.len(), seed).unwrap();
        let back = tree_from_json(&tree_to_json(&t)).unwrap();
        prop_assert_eq!(back, t);
    }
}
