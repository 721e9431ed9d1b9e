mod common;

use std::collections::BTreeSet;

use common::*;
use dynkernel::automata::itw_bruteforce;
use dynkernel::graph::Graph;
use dynkernel::hypergraph::{support_hypergraph, EdgeId, VertexId};
use dynkernel::treewidth::{exact_treewidth, treewidth_by_permutations};
use dynkernel::verify::{lipschitz_check, GraphOp};
use dynkernel::welllinked::{is_well_linked, is_well_linked_bruteforce, partition_well_linked, well_linked_number};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn isomorphism_class_counts() {
    let counts: Vec<usize> = (1..=6).map(|n| nonisomorphic_graphs(n).len()).collect();
    assert_eq!(counts, vec![1, 2, 4, 11, 34, 156]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lambda_symmetric_and_submodular(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_hypergraph(&mut r, 7, 9, 3);
        let all: Vec<EdgeId> = h.edges().collect();
        let a = random_subset(&mut r, &all, 0.5);
        let b = random_subset(&mut r, &all, 0.5);
        prop_assert_eq!(h.lambda(&a), h.lambda(&difference(&all, &a)));
        prop_assert!(h.lambda(&union(&a, &b)) + h.lambda(&intersection(&a, &b)) <= h.lambda(&a) + h.lambda(&b));
    }

    #[test]
    fn uncrossing_with_well_linked_sets(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_hypergraph(&mut r, 7, 10, 3);
        let all: Vec<EdgeId> = h.edges().collect();
        let found = (0..50)
            .map(|_| random_subset(&mut r, &all, 0.4))
            .find(|a| a.len() > 1 && is_well_linked(&h, a));
        prop_assume!(found.is_some());
        let a = found.unwrap();
        for _ in 0..10 {
            let b = random_subset(&mut r, &all, 0.5);
            let lb = h.lambda(&b);
            prop_assert!(h.lambda(&union(&b, &a)) <= lb || h.lambda(&difference(&b, &a)) <= lb);
        }
    }

    #[test]
    fn itw_union_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 8, 0.35);
        let h = support_hypergraph(&g);
        let all: Vec<EdgeId> = h.edges().collect();
        let a = random_subset(&mut r, &all, 0.5);
        let b = random_subset(&mut r, &all, 0.5);
        let itw = |x: &[EdgeId]| itw_bruteforce(&h, x).unwrap();
        let bound = itw(&a).max(itw(&b)) + h.lambda(&a).min(h.lambda(&b)) as i32;
        prop_assert!(itw(&union(&a, &b)) <= bound);
    }

    #[test]
    fn internally_connected_containment(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_hypergraph(&mut r, 7, 9, 3);
        let all: Vec<EdgeId> = h.edges().collect();
        let found = (0..50)
            .map(|_| random_subset(&mut r, &all, 0.4))
            .find(|a| a.len() > 1 && h.is_internally_connected(a));
        prop_assume!(found.is_some());
        let a = found.unwrap();
        let int_a: BTreeSet<VertexId> = h.interior(&a).into_iter().collect();
        for mask in 1u32..1 << all.len() {
            let b: Vec<EdgeId> = (0..all.len()).filter(|&i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            if h.bd(&b).iter().all(|v| !int_a.contains(v)) && !intersection(&a, &b).is_empty() {
                prop_assert!(difference(&a, &b).is_empty());
            }
        }
    }

    #[test]
    fn flow_test_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nv = r.gen_range(3..9);
        let h = random_hypergraph(&mut r, nv, 12, 3);
        let all: Vec<EdgeId> = h.edges().collect();
        let a = random_subset(&mut r, &all, 0.6);
        prop_assert_eq!(is_well_linked(&h, &a), is_well_linked_bruteforce(&h, &a).unwrap());
    }

    #[test]
    fn partition_parts_are_well_linked(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_hypergraph(&mut r, 8, 12, 3);
        let all: Vec<EdgeId> = h.edges().collect();
        let b = random_subset(&mut r, &all, 0.7);
        let parts = partition_well_linked(&h, &b);
        prop_assert!(parts.len() <= 1 << h.lambda(&b));
        let mut cover: Vec<EdgeId> = parts.concat();
        cover.sort_unstable();
        let mut want = b.clone();
        want.sort_unstable();
        prop_assert_eq!(cover, want);
        for p in &parts {
            prop_assert!(is_well_linked_bruteforce(&h, p).unwrap());
        }
    }

    #[test]
    fn tw_modulator_changes_by_at_most_two(seed in any::<u64>(), eta in 1i32..=2) {
        let mut r = rng(seed);
        let n = r.gen_range(4..=12u64);
        let mut g = random_graph(&mut r, n, 0.3);
        let op = match r.gen_range(0..4) {
            0 => GraphOp::AddVertex(n),
            1 => {
                let v = r.gen_range(0..n);
                for u in g.neighbors(v).collect::<Vec<_>>() {
                    g.remove_edge(u, v);
                }
                GraphOp::DeleteVertex(v)
            }
            2 => {
                let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
                prop_assume!(u != v && !g.has_edge(u, v));
                GraphOp::AddEdge(u, v)
            }
            _ => {
                let e: Vec<_> = g.edges().collect();
                prop_assume!(!e.is_empty());
                let (u, v) = e[r.gen_range(0..e.len())];
                GraphOp::DeleteEdge(u, v)
            }
        };
        let verdict = lipschitz_check(&g, op, eta).unwrap();
        prop_assert!(verdict.is_pass(), "{:?}", verdict);
    }
}

#[test]
fn exact_treewidth_matches_permutations() {
    let mut r = rng(3);
    for _ in 0..60 {
        let g = random_graph(&mut r, 7, 0.4);
        assert_eq!(exact_treewidth(&g).unwrap(), treewidth_by_permutations(&g));
    }
}

#[test]
fn well_linked_number_bounded_by_treewidth_on_six_vertices() {
    for adj in (1..=6).flat_map(nonisomorphic_graphs) {
        let g: Graph = graph_of_masks(&adj);
        let h = support_hypergraph(&g);
        let tw = exact_treewidth(&g).unwrap();
        let bound = 3 * (tw + 1) as usize;
        let all: Vec<EdgeId> = h.edges().collect();
        if all.len() <= 14 {
            assert!(well_linked_number(&h, &all).unwrap() <= bound);
        } else {
            // λ never exceeds |V|
            assert!(g.num_vertices() <= bound);
        }
    }
}
