//! Brute-force oracles and structural validators.

use std::collections::{BTreeMap, BTreeSet};

use crate::automata::{build_td, interior_graph, AnnotatedTd, GEdge};
use crate::chips::{ChipParams, Oracle};
use crate::engine::Engine;
use crate::graph::Graph;
use crate::hypergraph::{EdgeId, Hypergraph, VertexId};
use crate::superbranch::{NodeId, Superbranch, PARENT_LABEL};
use crate::treewidth::{exact_treewidth, treewidth_at_most, TwError};
use crate::welllinked::{is_well_linked, is_well_linked_bruteforce, well_linked_number};

/// Largest graph the exact solvers accept.
pub const OPT_LIMIT: usize = 40;
/// Largest graph tw_mod_eta accepts.
pub const TWMOD_LIMIT: usize = 20;
/// Largest leaf set checked for well-linkedness directly in H(G).
pub const WL_DIRECT_LIMIT: usize = 48;
/// Largest leaf set checked by bipartition enumeration or wl computation.
pub const WL_ENUM_LIMIT: usize = 10;
/// Largest torso(r) searched for semi-mergeable sets.
pub const SEMI_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("graph with {size} vertices exceeds the oracle limit {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
}

/// Pass, or fail with a witness naming the offending node, set or value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn into_result(self) -> Result<(), String> {
        match self {
            Verdict::Pass => Ok(()),
            Verdict::Fail(w) => Err(w),
        }
    }
}

impl From<Result<(), String>> for Verdict {
    fn from(r: Result<(), String>) -> Self {
        match r {
            Ok(()) => Verdict::Pass,
            Err(w) => Verdict::Fail(w),
        }
    }
}

// ---------------------------------------------------------------------------
// exact optima

fn masks(g: &Graph, limit: usize) -> Result<Vec<u64>, VerifyError> {
    let n = g.num_vertices();
    if n > limit.min(64) {
        return Err(VerifyError::SizeLimitExceeded { size: n, limit });
    }
    let (c, _) = g.compact();
    Ok((0..n as u64).map(|v| c.neighbors(v).fold(0u64, |m, u| m | 1 << u)).collect())
}

fn vc_rec(adj: &[u64], alive: u64, best: &mut u32, used: u32) {
    if used >= *best {
        return;
    }
    let mut pick = None;
    let mut maxd = 0;
    let mut a = alive;
    while a != 0 {
        let v = a.trailing_zeros() as usize;
        a &= a - 1;
        let d = (adj[v] & alive).count_ones();
        if d == 1 {
            // take the neighbor of a degree-one vertex
            let u = (adj[v] & alive).trailing_zeros() as usize;
            vc_rec(adj, alive & !(1 << u), best, used + 1);
            return;
        }
        if d > maxd {
            maxd = d;
            pick = Some(v);
        }
    }
    let Some(v) = pick else {
        *best = used;
        return;
    };
    vc_rec(adj, alive & !(1 << v), best, used + 1);
    let nb = adj[v] & alive;
    vc_rec(adj, alive & !nb & !(1 << v), best, used + nb.count_ones());
}

/// Minimum vertex cover by branching on a maximum-degree vertex.
pub fn opt_vc(g: &Graph) -> Result<usize, VerifyError> {
    let adj = masks(g, OPT_LIMIT)?;
    let n = adj.len();
    let alive = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = n as u32;
    vc_rec(&adj, alive, &mut best, 0);
    Ok(best as usize)
}

fn ds_rec(closed: &[u64], undominated: u64, used: u32, best: &mut u32) {
    if undominated == 0 {
        *best = (*best).min(used);
        return;
    }
    if used + 1 >= *best {
        return;
    }
    let maxcov = closed.iter().map(|c| (c & undominated).count_ones()).max().unwrap_or(0);
    if maxcov == 0 || used + undominated.count_ones().div_ceil(maxcov) >= *best {
        return;
    }
    // the undominated vertex with the fewest dominators
    let mut a = undominated;
    let mut target = 0;
    let mut fewest = u32::MAX;
    while a != 0 {
        let v = a.trailing_zeros() as usize;
        a &= a - 1;
        let c = closed[v].count_ones();
        if c < fewest {
            fewest = c;
            target = v;
        }
    }
    let mut cands = closed[target];
    let mut order = Vec::new();
    while cands != 0 {
        let u = cands.trailing_zeros() as usize;
        cands &= cands - 1;
        order.push(u);
    }
    order.sort_by_key(|&u| std::cmp::Reverse((closed[u] & undominated).count_ones()));
    for u in order {
        ds_rec(closed, undominated & !closed[u], used + 1, best);
    }
}

/// Minimum dominating set by branching on the dominators of a hardest vertex.
pub fn opt_ds(g: &Graph) -> Result<usize, VerifyError> {
    let adj = masks(g, OPT_LIMIT)?;
    let n = adj.len();
    let closed: Vec<u64> = adj.iter().enumerate().map(|(v, m)| m | 1 << v).collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = n as u32;
    ds_rec(&closed, all, 0, &mut best);
    Ok(best as usize)
}

pub fn opt(p: crate::kernelplug::Problem, g: &Graph) -> Result<usize, VerifyError> {
    match p {
        crate::kernelplug::Problem::VertexCover => opt_vc(g),
        crate::kernelplug::Problem::DominatingSet => opt_ds(g),
    }
}

// ---------------------------------------------------------------------------
// treewidth modulators

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            if rec(i + 1, n, k, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(0, n, k, &mut Vec::new(), f)
}

/// Size of a smallest X with tw(G − X) ≤ η, by smallest-first enumeration.
pub fn tw_mod_eta(g: &Graph, eta: i32) -> Result<usize, VerifyError> {
    let n = g.num_vertices();
    if n > TWMOD_LIMIT {
        return Err(VerifyError::SizeLimitExceeded { size: n, limit: TWMOD_LIMIT });
    }
    let verts: Vec<VertexId> = g.vertices().collect();
    for k in 0..=n {
        let found = for_each_subset(n, k, &mut |idx: &[usize]| {
            let drop: BTreeSet<VertexId> = idx.iter().map(|&i| verts[i]).collect();
            treewidth_at_most(&g.without(&drop), eta).unwrap_or(false)
        });
        if found {
            return Ok(k);
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphOp {
    AddVertex(VertexId),
    DeleteVertex(VertexId),
    AddEdge(VertexId, VertexId),
    DeleteEdge(VertexId, VertexId),
}

/// Checks the bounds on how tw-mod_η moves under `op`: deleting a vertex
/// lowers it by at most 1, deleting an edge by at most 2, and deletions never
/// raise it (insertions are the reverse direction).
pub fn lipschitz_check(g: &Graph, op: GraphOp, eta: i32) -> Result<Verdict, VerifyError> {
    let mut h = g.clone();
    let (small, big, slack) = match op {
        GraphOp::AddVertex(v) => {
            h.add_vertex(v);
            (g, &h, 1)
        }
        GraphOp::DeleteVertex(v) => {
            h.remove_vertex(v);
            (&h, g, 1)
        }
        GraphOp::AddEdge(u, v) => {
            h.add_edge(u, v);
            (g, &h, 2)
        }
        GraphOp::DeleteEdge(u, v) => {
            h.remove_edge(u, v);
            (&h, g, 2)
        }
    };
    let a = tw_mod_eta(small, eta)?;
    let b = tw_mod_eta(big, eta)?;
    Ok(if a <= b && b <= a + slack {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("{op:?}: tw-mod went between {a} and {b}, allowed slack {slack}"))
    })
}

// ---------------------------------------------------------------------------
// chips and semi-mergeable sets

/// All chips of `h` by subset enumeration.
pub fn brute_force_chips(h: &Hypergraph, p: ChipParams, oracle: &Oracle) -> BTreeMap<Vec<EdgeId>, Vec<VertexId>> {
    let edges: Vec<EdgeId> = h.edges().collect();
    assert!(edges.len() <= 20, "brute force over {} hyperedges", edges.len());
    let budget = p.s2 * p.r.max(h.rank()).max(1);
    let mut out = BTreeMap::new();
    for mask in 1u32..(1u32 << edges.len()) {
        if mask.count_ones() as usize > p.s2 {
            continue;
        }
        let a: Vec<EdgeId> = (0..edges.len()).filter(|&i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        let (va, bd) = h.boundary(&a).unwrap();
        if bd.len() > p.k || va.len() > budget || !h.is_internally_connected(&a) {
            continue;
        }
        if oracle(&a, &bd) {
            out.insert(a, bd);
        }
    }
    out
}

/// itw(B ▷ 𝒯) computed from the leaves below the root children `b`.
pub fn itw_of_children(sb: &Superbranch, b: &[NodeId]) -> Result<i32, TwError> {
    let leaves: Vec<EdgeId> = b.iter().flat_map(|&c| sb.leaf_set(c)).collect();
    exact_treewidth(&interior_graph(sb.hypergraph(), &leaves))
}

/// A semi-mergeable set of root children with size in [s1, s2]: λ ≤ k,
/// itw ≤ ω, and every internal component with the boundary of the whole set.
pub fn find_semi_mergeable(sb: &Superbranch, s1: usize, s2: usize, k: usize, omega: i32) -> Result<Option<Vec<NodeId>>, VerifyError> {
    let r = sb.root();
    let torso = sb.torso(r);
    let edges: Vec<EdgeId> = torso.edges().collect();
    if edges.len() > SEMI_LIMIT {
        return Err(VerifyError::SizeLimitExceeded { size: edges.len(), limit: SEMI_LIMIT });
    }
    for mask in 1u32..(1u32 << edges.len()) {
        let size = mask.count_ones() as usize;
        if size < s1 || size > s2 {
            continue;
        }
        let b: Vec<EdgeId> = (0..edges.len()).filter(|&i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        let bd = torso.bd(&b);
        if bd.len() > k {
            continue;
        }
        let comps = torso.internal_components(&b).unwrap();
        if comps.iter().any(|c| torso.bd(c) != bd) {
            continue;
        }
        match itw_of_children(sb, &b) {
            Ok(w) if w <= omega => return Ok(Some(b)),
            Ok(_) => {}
            Err(_) => return Err(VerifyError::SizeLimitExceeded { size: 0, limit: 0 }),
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// decompositions

/// Tree decomposition axioms, correspondence with `sb`, normality, and the
/// placement of every graph edge at the shallowest node covering it.
pub fn validate_td(sb: &Superbranch, td: &AnnotatedTd) -> Verdict {
    validate_td_inner(sb, td).into()
}

fn validate_td_inner(sb: &Superbranch, td: &AnnotatedTd) -> Result<(), String> {
    let h = sb.hypergraph();
    let mut holders: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, n) in td.nodes.iter().enumerate() {
        if n.bag.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("bag of node {i} is not a sorted set"));
        }
        for &v in &n.bag {
            if !h.has_vertex(v) {
                return Err(format!("bag of node {i} holds unknown vertex {v}"));
            }
            holders.entry(v).or_default().push(i);
        }
    }
    let in_bag = |i: usize, v: VertexId| td.nodes[i].bag.binary_search(&v).is_ok();
    for v in h.vertices() {
        let Some(hs) = holders.get(&v) else {
            return Err(format!("vertex {v} lies in no bag"));
        };
        let tops = hs.iter().filter(|&&i| td.nodes[i].parent.is_none_or(|p| !in_bag(p, v))).count();
        if tops != 1 {
            return Err(format!("bags holding vertex {v} are not connected"));
        }
    }
    // normality: every support hyperedge inside some non-root bag
    for e in h.edges() {
        let vs = h.verts(e);
        let ok = holders[&vs[0]].iter().any(|&i| i != td.root && vs.iter().all(|&v| in_bag(i, v)));
        if !ok {
            return Err(format!("hyperedge {e} on {vs:?} fits no non-root bag"));
        }
    }
    // correspondence
    let r = sb.root();
    let mut rb: Vec<VertexId> = sb.torso(r).vertices().collect();
    rb.sort_unstable();
    if td.nodes[td.root].bag != rb {
        return Err("bag(r) differs from V(torso(r))".into());
    }
    let mut tchd: Vec<NodeId> = td.nodes[td.root].children.iter().map(|&i| td.nodes[i].origin).collect();
    let mut schd = sb.children(r).to_vec();
    tchd.sort_unstable();
    schd.sort_unstable();
    if tchd != schd {
        return Err("root children differ".into());
    }
    for &i in &td.nodes[td.root].children {
        let c = td.nodes[i].origin;
        let mut below = BTreeSet::new();
        let mut stack = vec![i];
        while let Some(x) = stack.pop() {
            below.extend(td.nodes[x].bag.iter().copied());
            stack.extend(td.nodes[x].children.iter().copied());
        }
        let lv: BTreeSet<VertexId> = sb.leaf_set(c).into_iter().flat_map(|e| h.verts(e).to_vec()).collect();
        if below != lv {
            return Err(format!("bags below root child {c} differ from V(L[{c}])"));
        }
    }
    // edges partition
    let mut seen: BTreeSet<GEdge> = BTreeSet::new();
    for (i, n) in td.nodes.iter().enumerate() {
        for &(u, v) in &n.edges {
            if !in_bag(i, u) || !in_bag(i, v) {
                return Err(format!("edge {u}-{v} placed at node {i} outside its bag"));
            }
            if n.parent.is_some_and(|p| in_bag(p, u) && in_bag(p, v)) {
                return Err(format!("edge {u}-{v} placed below its shallowest covering node"));
            }
            if !seen.insert((u, v)) {
                return Err(format!("edge {u}-{v} placed twice"));
            }
        }
    }
    let graph_edges: BTreeSet<GEdge> = h.edges().filter_map(|e| crate::automata::pair_of(h, e)).collect();
    if seen != graph_edges {
        return Err("edges(·) do not partition E(G)".into());
    }
    Ok(())
}

/// Full validation of an engine: maintained structures against
/// recomputation, downwards well-linkedness, adhesion and degree bounds, wl
/// bounds at oracle scale, and the corresponding tree decomposition.
pub fn validate_decomposition(engine: &Engine) -> Verdict {
    validate_inner(engine).into()
}

fn validate_inner(engine: &Engine) -> Result<(), String> {
    engine.check_invariants().map_err(|e| e.to_string())?;
    let sb = engine.superbranch();
    let h = sb.hypergraph();
    let alpha = sb.alpha();
    let max_deg = engine.balance_config().max_degree();
    let r = sb.root();
    for t in sb.node_ids() {
        if t == r {
            continue;
        }
        if sb.adh(t).len() > alpha {
            return Err(format!("adhesion of node {t} has size {} > {alpha}", sb.adh(t).len()));
        }
        if sb.is_leaf(t) {
            continue;
        }
        if sb.children(t).len() as u64 > max_deg {
            return Err(format!("node {t} has degree {}", sb.children(t).len()));
        }
        // children form a well-linked set of torso(t); with the children
        // well-linked this makes L[t] well-linked
        let kids: Vec<EdgeId> = sb.torso(t).edges().filter(|&e| e != PARENT_LABEL).collect();
        if !is_well_linked(sb.torso(t), &kids) {
            return Err(format!("children of node {t} are not well-linked in its torso"));
        }
        if sb.count(t) <= WL_DIRECT_LIMIT {
            let leaves = sb.leaf_set(t);
            if !is_well_linked(h, &leaves) {
                return Err(format!("L[{t}] is not well-linked"));
            }
            if leaves.len() <= WL_ENUM_LIMIT && is_well_linked_bruteforce(h, &leaves) != Ok(true) {
                return Err(format!("L[{t}] fails bipartition enumeration"));
            }
        }
    }
    for &c in sb.children(r) {
        if sb.count(c) <= WL_ENUM_LIMIT {
            let wl = well_linked_number(h, &sb.leaf_set(c)).map_err(|e| e.to_string())?;
            if wl > alpha {
                return Err(format!("wl(L[{c}]) = {wl} > {alpha}"));
            }
        }
    }
    validate_td_inner(sb, &build_td(sb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: u64) -> Graph {
        Graph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn clique(n: u64) -> Graph {
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                e.push((a, b));
            }
        }
        Graph::from_edges(n, &e)
    }

    #[test]
    fn optima_on_small_graphs() {
        assert_eq!(opt_vc(&cycle(4)).unwrap(), 2);
        assert_eq!(opt_ds(&cycle(4)).unwrap(), 2);
        assert_eq!(opt_vc(&clique(4)).unwrap(), 3);
        assert_eq!(opt_ds(&clique(4)).unwrap(), 1);
        let empty = Graph::from_edges(5, &[]);
        assert_eq!(opt_vc(&empty).unwrap(), 0);
        assert_eq!(opt_ds(&empty).unwrap(), 5);
        assert_eq!(opt_vc(&cycle(7)).unwrap(), 4);
        assert_eq!(opt_ds(&cycle(7)).unwrap(), 3);
    }

    #[test]
    fn modulators() {
        assert_eq!(tw_mod_eta(&cycle(6), 2).unwrap(), 0);
        assert_eq!(tw_mod_eta(&clique(5), 3).unwrap(), 1);
        assert_eq!(tw_mod_eta(&cycle(6), 0).unwrap(), 3);
        let g = Graph::from_edges(3, &[(0, 1)]);
        assert!(lipschitz_check(&g, GraphOp::DeleteVertex(2), 1).unwrap().is_pass());
        assert!(lipschitz_check(&clique(5), GraphOp::DeleteEdge(0, 1), 2).unwrap().is_pass());
    }
}
