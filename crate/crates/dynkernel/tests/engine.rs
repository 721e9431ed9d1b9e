use dynkernel::engine::{Engine, EngineConfig, EngineError};
use dynkernel::kernelplug::Problem;
use dynkernel::stream::{generate, GenKind, Update};
use dynkernel::verify::{find_semi_mergeable, validate_decomposition};
use proptest::prelude::*;

fn paranoid(plugin: Option<Problem>) -> Engine {
    Engine::new(EngineConfig { paranoid: true, plugin, ..EngineConfig::default() }).unwrap()
}

/// K_{2,m}: hubs 0 and 1, spokes 2..m+2.
fn k2m(m: u64) -> Vec<Update> {
    let mut out: Vec<Update> = (0..m + 2).map(Update::AddVertex).collect();
    for v in 2..m + 2 {
        out.push(Update::AddEdge(0, v));
        out.push(Update::AddEdge(1, v));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fuzz_keeps_every_invariant(seed in any::<u64>(), kind in 0usize..4, plugin in 0usize..3) {
        let plugin = [None, Some(Problem::VertexCover), Some(Problem::DominatingSet)][plugin];
        let ups = generate(GenKind::ALL[kind], 30, seed);
        let mut e = paranoid(plugin);
        for u in &ups {
            u.apply(&mut e).unwrap();
            let v = validate_decomposition(&e);
            prop_assert!(v.is_pass(), "after {}: {:?}", u, v);
        }
    }
}

#[test]
fn rejects_invalid_updates() {
    let mut e = paranoid(None);
    e.add_vertex(1).unwrap();
    e.add_vertex(2).unwrap();
    assert_eq!(e.add_vertex(1).unwrap_err(), EngineError::VertexExists(1));
    assert_eq!(e.delete_vertex(9).unwrap_err(), EngineError::MissingVertex(9));
    assert_eq!(e.add_edge(1, 1).unwrap_err(), EngineError::SelfLoop(1));
    assert!(matches!(e.add_edge(1, 7).unwrap_err(), EngineError::MissingVertex(7)));
    e.add_edge(1, 2).unwrap();
    assert!(matches!(e.add_edge(2, 1).unwrap_err(), EngineError::EdgeExists(..)));
    assert_eq!(e.delete_vertex(1).unwrap_err(), EngineError::NonIsolatedVertex(1));
    e.delete_edge(2, 1).unwrap();
    assert!(matches!(e.delete_edge(1, 2).unwrap_err(), EngineError::MissingEdge(..)));
    e.delete_vertex(1).unwrap();
    assert!(validate_decomposition(&e).is_pass());
}

#[test]
fn metrics_replay_identically() {
    let ups = generate(GenKind::MixedInsertDelete, 40, 9);
    let run = || {
        let mut e = Engine::new(EngineConfig { plugin: Some(Problem::VertexCover), ..EngineConfig::default() }).unwrap();
        let mut lines = Vec::new();
        for (i, u) in ups.iter().enumerate() {
            let rep = u.apply(&mut e).unwrap();
            lines.push(serde_json::to_string(&e.metrics(i, u.op_name(), &rep)).unwrap());
        }
        lines
    };
    assert_eq!(run(), run());
}

#[test]
fn duplicate_children_trigger_merge() {
    let mut e = paranoid(Some(Problem::VertexCover));
    for u in k2m(16) {
        u.apply(&mut e).unwrap();
    }
    assert!(e.total_merges() >= 1);
    assert!(validate_decomposition(&e).is_pass());
}

#[test]
fn no_merge_on_a_path_is_certified() {
    let cfg = EngineConfig { s1: 4, s2: 8, ..EngineConfig::default() };
    let mut e = Engine::new(cfg.clone()).unwrap();
    for v in 0..6 {
        e.add_vertex(v).unwrap();
        if v > 0 {
            e.add_edge(v - 1, v).unwrap();
        }
        if e.chips().query().is_none() && e.root_degree() <= 20 {
            let found = find_semi_mergeable(e.superbranch(), cfg.s1, cfg.s2, cfg.k, cfg.omega).unwrap();
            assert_eq!(found, None);
        }
    }
}

#[test]
fn teardown_to_empty() {
    let ups = generate(GenKind::Grid, 16, 0);
    let mut e = paranoid(Some(Problem::DominatingSet));
    for u in &ups {
        u.apply(&mut e).unwrap();
    }
    for u in ups.iter().rev() {
        let inv = match *u {
            Update::AddVertex(v) => Update::DeleteVertex(v),
            Update::AddEdge(a, b) => Update::DeleteEdge(a, b),
            _ => unreachable!(),
        };
        inv.apply(&mut e).unwrap();
    }
    assert_eq!(e.graph().num_vertices(), 0);
    assert_eq!(e.root_degree(), 0);
    assert_eq!(e.kernel().unwrap().num_vertices(), 0);
    assert_eq!(e.kernel().unwrap().delta(), 0);
}
