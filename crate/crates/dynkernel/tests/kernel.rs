mod common;

use common::*;
use dynkernel::engine::{Engine, EngineConfig};
use dynkernel::kernelplug::{
    default_store, glue_b, glue_u, normalize, synthesize_representatives, table_join, table_of, Problem, RepresentativeStore,
};
use dynkernel::stream::{generate, GenKind};
use dynkernel::verify::opt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROBLEMS: [Problem; 2] = [Problem::VertexCover, Problem::DominatingSet];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gluing_is_associative(seed in any::<u64>(), t in 0usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = random_boundaried(&mut r, t, 2, 0.4);
        let y = random_boundaried(&mut r, t, 3, 0.4);
        let z = random_boundaried(&mut r, t, 2, 0.4);
        let left = glue_b(&glue_b(&x, &y).unwrap(), &z).unwrap();
        let right = glue_b(&x, &glue_b(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left.graph.num_vertices(), right.graph.num_vertices());
        prop_assert_eq!(left.graph.num_edges(), right.graph.num_edges());
        for p in PROBLEMS {
            prop_assert_eq!(table_of(p, &left).unwrap(), table_of(p, &right).unwrap());
        }
    }

    #[test]
    fn join_matches_table_of_glue(seed in any::<u64>(), t in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = random_boundaried(&mut r, t, 3, 0.4);
        let y = random_boundaried(&mut r, t, 3, 0.4);
        let glued = glue_b(&x, &y).unwrap();
        for p in PROBLEMS {
            let joined = table_join(p, &table_of(p, &x).unwrap(), &table_of(p, &y).unwrap(), t);
            prop_assert_eq!(joined, table_of(p, &glued).unwrap());
        }
    }

    #[test]
    fn table_entries_match_unconstrained_opt(seed in any::<u64>(), t in 0usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = random_boundaried(&mut r, t, 4, 0.4);
        for p in PROBLEMS {
            // a DS boundary vertex in the unconstrained state may stay undominated
            let base = p.base();
            let best = table_of(p, &x)
                .unwrap()
                .into_iter()
                .enumerate()
                .filter(|&(mut i, _)| {
                    let mut ok = true;
                    for _ in 0..t {
                        ok &= !(p == Problem::DominatingSet && i % base == 2);
                        i /= base;
                    }
                    ok
                })
                .map(|(_, c)| c)
                .min()
                .unwrap();
            prop_assert_eq!(best, opt(p, &x.graph).unwrap() as u64);
        }
    }

    #[test]
    fn kernel_is_exact_on_small_streams(seed in any::<u64>(), ds in any::<bool>()) {
        let p = if ds { Problem::DominatingSet } else { Problem::VertexCover };
        let ups = generate(GenKind::MixedInsertDelete, 10, seed);
        let mut e = Engine::new(EngineConfig { plugin: Some(p), ..EngineConfig::default() }).unwrap();
        for u in &ups {
            u.apply(&mut e).unwrap();
            let k = e.kernel().unwrap();
            prop_assert_eq!(opt(p, &k.graph()).unwrap() as u64 + k.delta(), opt(p, e.graph()).unwrap() as u64, "after {}", u);
        }
    }
}

fn context_glue_checks(store: &RepresentativeStore, seed: u64, checks: usize) -> (usize, usize) {
    let p = store.problem;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut misses) = (0, 0);
    while done < checks {
        let t = r.gen_range(0..=store.t_max);
        let inner = r.gen_range(0..5);
        let g = random_boundaried(&mut r, t, inner, 0.45);
        let st = normalize(&table_of(p, &g).unwrap());
        let Some(rep) = store.get(t, &st.costs) else {
            misses += 1;
            continue;
        };
        let inner = r.gen_range(0..4);
        let f = random_boundaried(&mut r, t, inner, 0.45);
        let lhs = opt(p, &glue_u(&f, &g)).unwrap() as i64;
        let rhs = opt(p, &glue_u(&f, &rep.boundaried())).unwrap() as i64 + st.shift as i64 - rep.offset as i64;
        assert_eq!(lhs, rhs, "t={t} costs={:?}", st.costs);
        done += 1;
    }
    (done, misses)
}

#[test]
fn default_stores_verify_and_replace_soundly() {
    for p in PROBLEMS {
        let store = default_store(p);
        store.self_check().unwrap();
        let (done, _) = context_glue_checks(store, 7, 60);
        assert_eq!(done, 60);
    }
}

#[test]
fn store_text_roundtrip_is_deterministic() {
    let a = synthesize_representatives(Problem::DominatingSet, 2, 5, u64::MAX).unwrap();
    let b = synthesize_representatives(Problem::DominatingSet, 2, 5, u64::MAX).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let back = RepresentativeStore::from_text(&a.to_text()).unwrap();
    assert_eq!(back, a);
    back.self_check().unwrap();
}

#[test]
fn vc_single_boundary_store() {
    let s = synthesize_representatives(Problem::VertexCover, 1, 3, 1 << 20).unwrap();
    s.self_check().unwrap();
    // (out, in) classes up to shift: (0,1), (0,0), (1,0) and the empty boundary
    assert_eq!(s.len(), 4);
    assert_eq!(s.max_sizes()[&1], 3);
}
