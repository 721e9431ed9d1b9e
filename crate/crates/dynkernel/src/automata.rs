//! Tree-decomposition automata and runs, the annotated tree decomposition
//! corresponding to a superbranch decomposition, the internal-treewidth
//! decider, and prefix assembly over root children.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use crate::graph::Graph;
use crate::hypergraph::{EdgeId, Hypergraph, VertexId};
use crate::superbranch::{NodeId, Superbranch};
pub use crate::treewidth::{exact_treewidth, treewidth_at_most, TwError, EXACT_LIMIT};
use crate::treewidth::min_fill_width;

/// A graph edge (u, v) with u < v.
pub type GEdge = (VertexId, VertexId);

/// Deterministic tree decomposition automaton; `None` plays the null state ⊥.
pub trait TdAutomaton {
    type State: Clone + PartialEq + Debug;

    fn width(&self) -> usize;

    /// ι on the graph (bag, edges) of a leaf.
    fn initial(&self, bag: &[VertexId], edges: &[GEdge]) -> Option<Self::State>;

    /// δ(bag(x), bag(y), bag(z), edges(x), q_y, q_z); `z` is absent at unary nodes.
    fn transition(
        &self,
        bag_x: &[VertexId],
        y: (&[VertexId], &Self::State),
        z: Option<(&[VertexId], &Self::State)>,
        edges_x: &[GEdge],
    ) -> Option<Self::State>;

    fn accepts(&self, _q: &Self::State) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdNode {
    pub bag: Vec<VertexId>,
    pub edges: Vec<GEdge>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// The superbranch node this one was built for.
    pub origin: NodeId,
}

/// Annotated tree decomposition (T̃, bag, edges) with a high-degree root and
/// binary chains below it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedTd {
    pub nodes: Vec<TdNode>,
    pub root: usize,
    /// Topmost T̃ node of every non-root superbranch node.
    pub top: BTreeMap<NodeId, usize>,
}

pub fn pair_of(h: &Hypergraph, e: EdgeId) -> Option<GEdge> {
    match h.verts(e) {
        [u, v] => Some((*u, *v)),
        _ => None,
    }
}

fn subset(a: &[VertexId], b: &[VertexId]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

fn merge_sorted(sets: &[&[VertexId]]) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Splits EL(t) into the edges passed up (inside adh(t)) and those placed at t.
pub fn split_el(h: &Hypergraph, el: &[EdgeId], adh: &[VertexId]) -> (Vec<EdgeId>, Vec<EdgeId>) {
    el.iter().partition(|&&e| subset(h.verts(e), adh))
}

/// Chain bags of an internal node: bag(t_i) = adh(t) ∪ ⋃_{j≥i} adh(c_j).
pub fn chain_bags(adh: &[VertexId], child_adh: &[&[VertexId]]) -> Vec<Vec<VertexId>> {
    let d = child_adh.len();
    let mut bags = vec![Vec::new(); d.saturating_sub(1)];
    let mut acc: Vec<VertexId> = adh.to_vec();
    for i in (0..d.saturating_sub(1)).rev() {
        let mut parts: Vec<&[VertexId]> = vec![&acc, child_adh[i]];
        if i == d - 2 {
            parts.push(child_adh[d - 1]);
        }
        acc = merge_sorted(&parts);
        bags[i] = acc.clone();
    }
    bags
}

/// Builds the corresponding annotated tree decomposition from scratch.
pub fn build_td(sb: &Superbranch) -> AnnotatedTd {
    let g = sb.hypergraph();
    let r = sb.root();
    let mut order = Vec::new();
    let mut stack = vec![r];
    while let Some(x) = stack.pop() {
        order.push(x);
        let mut ch = sb.children(x).to_vec();
        ch.sort_unstable();
        stack.extend(ch);
    }
    let mut up: BTreeMap<NodeId, Vec<EdgeId>> = BTreeMap::new();
    let mut nodes: Vec<TdNode> = Vec::new();
    let mut top: BTreeMap<NodeId, usize> = BTreeMap::new();
    let edge_pairs = |es: &[EdgeId]| -> Vec<GEdge> {
        let mut v: Vec<GEdge> = es.iter().filter_map(|&e| pair_of(g, e)).collect();
        v.sort_unstable();
        v
    };
    for &t in order.iter().rev() {
        let mut ch = sb.children(t).to_vec();
        ch.sort_unstable();
        let el: Vec<EdgeId> = match sb.node(t).leaf {
            Some(e) => pair_of(g, e).map(|_| e).into_iter().collect(),
            None => ch.iter().flat_map(|c| up[c].iter().copied()).collect(),
        };
        if t == r {
            let idx = nodes.len();
            let mut bag: Vec<VertexId> = sb.torso(r).vertices().collect();
            bag.sort_unstable();
            let children: Vec<usize> = ch.iter().map(|c| top[c]).collect();
            for &c in &children {
                nodes[c].parent = Some(idx);
            }
            nodes.push(TdNode { bag, edges: edge_pairs(&el), children, parent: None, origin: r });
            continue;
        }
        let (u, placed) = split_el(g, &el, sb.adh(t));
        up.insert(t, u);
        if let Some(e) = sb.node(t).leaf {
            top.insert(t, nodes.len());
            nodes.push(TdNode { bag: g.verts(e).to_vec(), edges: edge_pairs(&placed), children: vec![], parent: None, origin: t });
            continue;
        }
        let adhs: Vec<&[VertexId]> = ch.iter().map(|&c| sb.adh(c)).collect();
        let bags = chain_bags(sb.adh(t), &adhs);
        let d = ch.len();
        let mut below = top[&ch[d - 1]];
        for i in (0..d - 1).rev() {
            let idx = nodes.len();
            let children = vec![top[&ch[i]], below];
            for &c in &children {
                nodes[c].parent = Some(idx);
            }
            let edges = if i == 0 { edge_pairs(&placed) } else { Vec::new() };
            nodes.push(TdNode { bag: bags[i].clone(), edges, children, parent: None, origin: t });
            below = idx;
        }
        top.insert(t, below);
    }
    let root = nodes.len() - 1;
    AnnotatedTd { nodes, root, top }
}

impl AnnotatedTd {
    pub fn width(&self) -> i64 {
        self.nodes.iter().map(|n| n.bag.len() as i64).max().unwrap_or(0) - 1
    }

    pub fn non_root_width(&self) -> i64 {
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.root)
            .map(|(_, n)| n.bag.len() as i64)
            .max()
            .unwrap_or(0)
            - 1
    }

    /// Nodes in an order where children precede parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((x, done)) = stack.pop() {
            if done {
                out.push(x);
                continue;
            }
            stack.push((x, true));
            for &c in self.nodes[x].children.iter().rev() {
                stack.push((c, false));
            }
        }
        out
    }
}

/// Run over the non-root nodes; bags wider than width+1 and anything above
/// them get ⊥.
pub type Run<S> = Vec<Option<S>>;

fn eval_node<A: TdAutomaton>(aut: &A, td: &AnnotatedTd, x: usize, run: &Run<A::State>) -> Option<A::State> {
    let n = &td.nodes[x];
    if n.bag.len() > aut.width() + 1 {
        return None;
    }
    match n.children.as_slice() {
        [] => aut.initial(&n.bag, &n.edges),
        [y] => aut.transition(&n.bag, (&td.nodes[*y].bag, run[*y].as_ref()?), None, &n.edges),
        [y, z] => aut.transition(
            &n.bag,
            (&td.nodes[*y].bag, run[*y].as_ref()?),
            Some((&td.nodes[*z].bag, run[*z].as_ref()?)),
            &n.edges,
        ),
        _ => None,
    }
}

pub fn compute_run<A: TdAutomaton>(aut: &A, td: &AnnotatedTd) -> Run<A::State> {
    let mut run: Run<A::State> = vec![None; td.nodes.len()];
    for x in td.post_order() {
        if x != td.root {
            run[x] = eval_node(aut, td, x, &run);
        }
    }
    run
}

/// Recomputes the dirty nodes and their ancestors bottom-up, skipping nodes
/// none of whose inputs changed. Returns the nodes whose state changed.
pub fn repair_run<A: TdAutomaton>(aut: &A, td: &AnnotatedTd, run: &mut Run<A::State>, dirty: &BTreeSet<usize>) -> Vec<usize> {
    if dirty.is_empty() {
        return Vec::new();
    }
    let mut need: BTreeSet<usize> = BTreeSet::new();
    for &d in dirty {
        let mut cur = Some(d);
        while let Some(x) = cur {
            if !need.insert(x) {
                break;
            }
            cur = td.nodes[x].parent;
        }
    }
    let mut changed_set = BTreeSet::new();
    let mut changed = Vec::new();
    for x in td.post_order() {
        if !need.contains(&x) || x == td.root {
            continue;
        }
        if !dirty.contains(&x) && !td.nodes[x].children.iter().any(|c| changed_set.contains(c)) {
            continue;
        }
        let q = eval_node(aut, td, x, run);
        if q != run[x] {
            run[x] = q;
            changed_set.insert(x);
            changed.push(x);
        }
    }
    changed
}

// ---------------------------------------------------------------------------
// internal treewidth

/// Reduced graph of G[L[t]] with terminals adh(t), or a marker that no set
/// containing t can have internal treewidth at most ω (`Exceeds`), or that the
/// form outgrew the cap (`TooLarge`, answered conservatively).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItwForm {
    Reduced { g: Graph, terminals: Vec<VertexId> },
    Exceeds,
    TooLarge,
}

pub const FORM_CAP: usize = 48;

/// Applies width-preserving reductions to non-terminals: simplicial vertices of
/// degree ≤ ω are deleted and, for ω ≥ 2, degree-2 vertices are suppressed.
pub fn reduce(g: &mut Graph, terminals: &BTreeSet<VertexId>, omega: i32) {
    let mut work: Vec<VertexId> = g.vertices().filter(|v| !terminals.contains(v)).collect();
    while let Some(v) = work.pop() {
        if !g.has_vertex(v) || terminals.contains(&v) {
            continue;
        }
        let nb: Vec<VertexId> = g.neighbors(v).collect();
        let d = nb.len() as i32;
        let simplicial = d <= omega && nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|&b| g.has_edge(a, b)));
        if simplicial {
            g.remove_vertex(v);
        } else if d == 2 && omega >= 2 {
            g.remove_vertex(v);
            g.add_edge(nb[0], nb[1]);
        } else {
            continue;
        }
        work.extend(nb.into_iter().filter(|u| !terminals.contains(u)));
    }
}

/// tw(g) ≤ ω, exact for ω ≤ 2 and for small remainders; otherwise a heuristic
/// bound whose failure is reported as false.
pub fn tw_at_most_conservative(g: &Graph, omega: i32) -> bool {
    let mut h = g.clone();
    reduce(&mut h, &BTreeSet::new(), omega);
    if h.num_vertices() == 0 {
        return true;
    }
    if omega <= 2 {
        return false;
    }
    if h.num_vertices() <= EXACT_LIMIT {
        return treewidth_at_most(&h, omega).unwrap_or(false);
    }
    min_fill_width(&h) <= omega
}

fn finish_form(mut g: Graph, terminals: &[VertexId], omega: i32, cap: usize) -> ItwForm {
    let tset: BTreeSet<VertexId> = terminals.iter().copied().collect();
    reduce(&mut g, &tset, omega);
    if g.num_vertices() > cap + terminals.len() {
        return ItwForm::TooLarge;
    }
    if !tw_at_most_conservative(&g.without(&tset), omega) {
        return ItwForm::Exceeds;
    }
    ItwForm::Reduced { g, terminals: terminals.to_vec() }
}

pub fn leaf_form(verts: &[VertexId], adh: &[VertexId], omega: i32, cap: usize) -> ItwForm {
    let mut g = Graph::new();
    for &v in verts {
        g.add_vertex(v);
    }
    if let [u, v] = verts {
        g.add_edge(*u, *v);
    }
    finish_form(g, adh, omega, cap)
}

pub fn combine_forms(children: &[&ItwForm], terminals: &[VertexId], omega: i32, cap: usize) -> ItwForm {
    let mut g = Graph::new();
    let mut too_large = false;
    for f in children {
        match f {
            ItwForm::Exceeds => return ItwForm::Exceeds,
            ItwForm::TooLarge => too_large = true,
            ItwForm::Reduced { g: cg, .. } => {
                for v in cg.vertices() {
                    g.add_vertex(v);
                }
                for (a, b) in cg.edges() {
                    g.add_edge(a, b);
                }
            }
        }
    }
    if too_large {
        return ItwForm::TooLarge;
    }
    finish_form(g, terminals, omega, cap)
}

/// Decides itw(S) ≤ ω from the forms of the members of S and bd(S).
pub fn itw_decide_forms(forms: &[&ItwForm], bd: &[VertexId], omega: i32) -> bool {
    let mut g = Graph::new();
    for f in forms {
        match f {
            ItwForm::Exceeds | ItwForm::TooLarge => return false,
            ItwForm::Reduced { g: cg, .. } => {
                for v in cg.vertices() {
                    g.add_vertex(v);
                }
                for (a, b) in cg.edges() {
                    g.add_edge(a, b);
                }
            }
        }
    }
    let drop: BTreeSet<VertexId> = bd.iter().copied().collect();
    tw_at_most_conservative(&g.without(&drop), omega)
}

/// Graph induced by the interior of a set of support-hypergraph edges.
pub fn interior_graph(h: &Hypergraph, a: &[EdgeId]) -> Graph {
    let int: BTreeSet<VertexId> = h.interior(a).into_iter().collect();
    let mut g = Graph::new();
    for &v in &int {
        g.add_vertex(v);
    }
    for &e in a {
        if let [u, v] = h.verts(e) {
            if int.contains(u) && int.contains(v) {
                g.add_edge(*u, *v);
            }
        }
    }
    g
}

/// itw(A) by materializing the interior graph.
pub fn itw_bruteforce(h: &Hypergraph, a: &[EdgeId]) -> Result<i32, TwError> {
    exact_treewidth(&interior_graph(h, a))
}

// ---------------------------------------------------------------------------
// prefix assembly

/// A root child as seen by prefix assembly: adhesion, topmost bag, state.
pub struct ChildView<'a, S> {
    pub adh: &'a [VertexId],
    pub top_bag: &'a [VertexId],
    pub state: &'a S,
}

/// Folds the states of the children in S along the chain s_1 … s_{q−1} with
/// bag(s_i) = ⋃_{j≤i+1} adh(c_j) and a root r_S with bag bd(S); the edges of
/// `edges_r` inside bd(S) are placed at r_S, the remaining ones inside
/// bag(s_{q−1}) at s_{q−1}.
pub fn prefix_assemble<A: TdAutomaton>(
    aut: &A,
    children: &[ChildView<'_, A::State>],
    bd: &[VertexId],
    edges_r: &BTreeSet<GEdge>,
) -> Option<A::State> {
    let first = children.first()?;
    let inside = |bag: &[VertexId]| -> Vec<GEdge> {
        edges_r.iter().copied().filter(|(u, v)| bag.binary_search(u).is_ok() && bag.binary_search(v).is_ok()).collect()
    };
    let root_edges = inside(bd);
    let mut bag: Vec<VertexId> = first.top_bag.to_vec();
    let mut q = first.state.clone();
    let q_len = children.len();
    for (i, c) in children.iter().enumerate().skip(1) {
        let prev: Vec<VertexId> = if i == 1 { first.adh.to_vec() } else { bag.clone() };
        let next = merge_sorted(&[&prev, c.adh]);
        let edges: Vec<GEdge> = if i == q_len - 1 {
            inside(&next).into_iter().filter(|e| root_edges.binary_search(e).is_err()).collect()
        } else {
            Vec::new()
        };
        if next.len() > aut.width() + 1 {
            return None;
        }
        q = aut.transition(&next, (&bag, &q), Some((c.top_bag, c.state)), &edges)?;
        bag = next;
    }
    if q_len == 1 {
        let extra: Vec<GEdge> = inside(first.adh).into_iter().filter(|e| root_edges.binary_search(e).is_err()).collect();
        if !extra.is_empty() {
            if first.adh.len() > aut.width() + 1 {
                return None;
            }
            q = aut.transition(first.adh, (&bag, &q), None, &extra)?;
            bag = first.adh.to_vec();
        }
    }
    if bd.len() > aut.width() + 1 {
        return None;
    }
    aut.transition(bd, (&bag, &q), None, &root_edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: u64, h: u64) -> Graph {
        let mut g = Graph::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                g.add_vertex(v);
                if x + 1 < w {
                    g.add_edge(v, v + 1);
                }
                if y + 1 < h {
                    g.add_edge(v, v + w);
                }
            }
        }
        g
    }

    #[test]
    fn reductions_decide_small_widths() {
        let cycle = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        assert!(!tw_at_most_conservative(&cycle, 1));
        assert!(tw_at_most_conservative(&cycle, 2));
        let g = grid(3, 3);
        assert!(!tw_at_most_conservative(&g, 2));
        assert!(tw_at_most_conservative(&g, 3));
        assert!(tw_at_most_conservative(&Graph::new(), 0));
        assert!(!tw_at_most_conservative(&Graph::from_edges(2, &[(0, 1)]), 0));
    }

    #[test]
    fn reduction_keeps_terminals() {
        let mut p = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let t: BTreeSet<VertexId> = [0, 4].into_iter().collect();
        reduce(&mut p, &t, 2);
        assert_eq!(p.edges().collect::<Vec<_>>(), vec![(0, 4)]);
        let mut p = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        reduce(&mut p, &t, 1);
        assert_eq!(p.num_vertices(), 5);
    }

    #[test]
    fn forms_answer_interior_queries() {
        // two halves of a 6-cycle glued at vertices 0 and 3
        let a = leaf_form(&[0, 1], &[0, 1], 2, FORM_CAP);
        let top = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let f1 = finish_form(top, &[0, 3], 2, FORM_CAP);
        let bottom = Graph::from_edges(0, &[(3, 4), (4, 5), (5, 0)]);
        let f2 = finish_form(bottom, &[0, 3], 2, FORM_CAP);
        assert!(itw_decide_forms(&[&f1, &f2], &[], 2));
        let g1 = finish_form(Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]), &[0, 3], 1, FORM_CAP);
        let g2 = finish_form(Graph::from_edges(0, &[(3, 4), (4, 5), (5, 0)]), &[0, 3], 1, FORM_CAP);
        assert!(!itw_decide_forms(&[&g1, &g2], &[], 1));
        assert!(itw_decide_forms(&[&g1, &g2], &[0], 1));
        assert!(matches!(a, ItwForm::Reduced { .. }));
        let k4 = finish_form(Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]), &[4], 2, FORM_CAP);
        assert_eq!(k4, ItwForm::Exceeds);
    }
}
