//! Treewidth of small graphs: exact search with safe reductions, fast tests for
//! width at most 2, and elimination-ordering heuristics.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::graph::Graph;
use crate::hypergraph::VertexId;

/// Largest component (after reductions) handed to the exact search.
pub const EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TwError {
    #[error("component with {vertices} vertices exceeds the exact limit {limit}")]
    SizeLimitExceeded { vertices: usize, limit: usize },
}

fn is_clique(g: &Graph, vs: &[VertexId]) -> bool {
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            if !g.has_edge(vs[i], vs[j]) {
                return false;
            }
        }
    }
    true
}

/// Some w in N(v) such that N(v) - w is a clique.
fn almost_simplicial_pivot(g: &Graph, nb: &[VertexId]) -> Option<VertexId> {
    'outer: for &w in nb {
        for i in 0..nb.len() {
            if nb[i] == w {
                continue;
            }
            for j in i + 1..nb.len() {
                if nb[j] == w {
                    continue;
                }
                if !g.has_edge(nb[i], nb[j]) {
                    continue 'outer;
                }
            }
        }
        return Some(w);
    }
    None
}

fn eliminate(g: &mut Graph, v: VertexId) {
    let nb: Vec<VertexId> = g.neighbors(v).collect();
    for i in 0..nb.len() {
        for j in i + 1..nb.len() {
            g.add_edge(nb[i], nb[j]);
        }
    }
    g.remove_vertex(v);
}

/// Applies the simplicial and almost-simplicial rules. Returns the lower bound
/// collected from removed simplicial vertices; the remaining graph `g` satisfies
/// tw(original) = max(low, tw(g)) whenever tw(original) >= the initial `low`.
fn reduce(g: &mut Graph, mut low: i32, cap: Option<i32>) -> Result<i32, ()> {
    loop {
        let mut changed = false;
        let vs: Vec<VertexId> = g.vertices().collect();
        for v in vs {
            if !g.has_vertex(v) {
                continue;
            }
            let nb: Vec<VertexId> = g.neighbors(v).collect();
            let d = nb.len() as i32;
            if is_clique(g, &nb) {
                if let Some(k) = cap {
                    if d > k {
                        return Err(());
                    }
                }
                low = low.max(d);
                g.remove_vertex(v);
                changed = true;
            } else if d <= low.max(cap.unwrap_or(low)) && almost_simplicial_pivot(g, &nb).is_some() {
                eliminate(g, v);
                changed = true;
            }
        }
        if !changed {
            return Ok(low);
        }
    }
}

fn degeneracy(g: &Graph) -> i32 {
    let mut h = g.clone();
    let mut best = if h.num_vertices() > 0 { 0 } else { -1 };
    while h.num_vertices() > 0 {
        let v = h.vertices().min_by_key(|&v| (h.degree(v), v)).unwrap();
        best = best.max(h.degree(v) as i32);
        h.remove_vertex(v);
    }
    best
}

/// Min-fill elimination width (an upper bound on treewidth).
pub fn min_fill_width(g: &Graph) -> i32 {
    let mut h = g.clone();
    let mut width = -1;
    while h.num_vertices() > 0 {
        let mut best: Option<(usize, usize, VertexId)> = None;
        for v in h.vertices() {
            let nb: Vec<VertexId> = h.neighbors(v).collect();
            let mut fill = 0;
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if !h.has_edge(nb[i], nb[j]) {
                        fill += 1;
                    }
                }
            }
            let key = (fill, nb.len(), v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (_, d, v) = best.unwrap();
        width = width.max(d as i32);
        eliminate(&mut h, v);
    }
    width
}

struct Bits {
    n: usize,
    adj: Vec<u32>,
}

impl Bits {
    fn new(g: &Graph) -> Bits {
        let ids: Vec<VertexId> = g.vertices().collect();
        let pos: BTreeMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![0u32; ids.len()];
        for (u, v) in g.edges() {
            adj[pos[&u]] |= 1 << pos[&v];
            adj[pos[&v]] |= 1 << pos[&u];
        }
        Bits { n: ids.len(), adj }
    }

    // |Q(S, v)|: vertices outside S + v reachable from v through S.
    fn q(&self, s: u32, v: usize) -> u32 {
        let mut comp = 1u32 << v;
        let mut frontier = comp;
        let mut nbh = 0u32;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            nbh |= self.adj[x];
            let fresh = self.adj[x] & s & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        (nbh & !comp & !s).count_ones()
    }

    fn tw_le(&self, k: u32) -> bool {
        let full: u32 = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        let mut seen: HashSet<u32> = HashSet::new();
        let mut stack = vec![0u32];
        seen.insert(0);
        while let Some(s) = stack.pop() {
            if (full & !s).count_ones() <= k + 1 {
                return true;
            }
            let mut rest = full & !s;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if self.q(s, v) <= k {
                    let t = s | (1 << v);
                    if t == full {
                        return true;
                    }
                    if seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
        }
        false
    }
}

fn exact_component(g: &Graph, low: i32) -> Result<i32, TwError> {
    let n = g.num_vertices();
    if n == 0 {
        return Ok(-1);
    }
    let ub = min_fill_width(g);
    let lb = degeneracy(g).max(low).min(ub);
    if lb == ub {
        return Ok(ub);
    }
    if n > EXACT_LIMIT {
        return Err(TwError::SizeLimitExceeded { vertices: n, limit: EXACT_LIMIT });
    }
    let bits = Bits::new(g);
    for k in lb..ub {
        if bits.tw_le(k as u32) {
            return Ok(k);
        }
    }
    Ok(ub)
}

/// Exact treewidth; the empty graph has treewidth -1.
pub fn exact_treewidth(g: &Graph) -> Result<i32, TwError> {
    if g.num_vertices() == 0 {
        return Ok(-1);
    }
    let mut h = g.clone();
    let low = reduce(&mut h, 0, None).expect("no cap");
    let mut best = low;
    for comp in h.components() {
        let sub = h.induced(&comp.into_iter().collect());
        best = best.max(exact_component(&sub, best)?);
    }
    Ok(best)
}

/// Series-parallel style reduction; the graph has treewidth <= 2 iff it empties.
pub fn tw_at_most_two(g: &Graph) -> bool {
    let mut h = g.clone();
    let mut queue: Vec<VertexId> = h.vertices().collect();
    while let Some(v) = queue.pop() {
        if !h.has_vertex(v) {
            continue;
        }
        let nb: Vec<VertexId> = h.neighbors(v).collect();
        if nb.len() <= 1 {
            h.remove_vertex(v);
            queue.extend(nb);
        } else if nb.len() == 2 {
            h.remove_vertex(v);
            h.add_edge(nb[0], nb[1]);
            queue.extend(nb);
        }
    }
    h.num_vertices() == 0
}

pub fn is_forest(g: &Graph) -> bool {
    g.num_edges() + g.components().len() == g.num_vertices()
}

/// Decides tw(g) <= k.
pub fn treewidth_at_most(g: &Graph, k: i32) -> Result<bool, TwError> {
    if g.num_vertices() == 0 {
        return Ok(k >= -1);
    }
    match k {
        k if k < 0 => Ok(false),
        0 => Ok(g.num_edges() == 0),
        1 => Ok(is_forest(g)),
        2 => Ok(tw_at_most_two(g)),
        _ => {
            let mut h = g.clone();
            if reduce(&mut h, 0, Some(k)).is_err() {
                return Ok(false);
            }
            for comp in h.components() {
                let sub = h.induced(&comp.into_iter().collect());
                if min_fill_width(&sub) <= k {
                    continue;
                }
                if degeneracy(&sub) > k {
                    return Ok(false);
                }
                if sub.num_vertices() > EXACT_LIMIT {
                    return Err(TwError::SizeLimitExceeded { vertices: sub.num_vertices(), limit: EXACT_LIMIT });
                }
                if !Bits::new(&sub).tw_le(k as u32) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Treewidth as the best elimination ordering over all permutations (n <= 9).
pub fn treewidth_by_permutations(g: &Graph) -> i32 {
    let ids: Vec<VertexId> = g.vertices().collect();
    if ids.is_empty() {
        return -1;
    }
    let mut perm: Vec<usize> = (0..ids.len()).collect();
    let mut best = i32::MAX;
    loop {
        let mut h = g.clone();
        let mut w = 0;
        for &i in &perm {
            w = w.max(h.degree(ids[i]) as i32);
            if w >= best {
                break;
            }
            eliminate(&mut h, ids[i]);
        }
        best = best.min(w);
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Elimination tree from a min-degree ordering. `higher[i]` lists the neighbors
/// of `order[i]` eliminated later; `parent[i]` indexes the earliest of them.
#[derive(Debug, Clone)]
pub struct EliminationTree {
    pub order: Vec<VertexId>,
    pub higher: Vec<Vec<VertexId>>,
    pub parent: Vec<Option<usize>>,
    pub width: usize,
}

/// Returns None as soon as an elimination degree exceeds `cap`.
pub fn min_degree_elimination(g: &Graph, cap: usize) -> Option<EliminationTree> {
    let mut adj: BTreeMap<VertexId, BTreeSet<VertexId>> =
        g.vertices().map(|v| (v, g.neighbor_set(v).clone())).collect();
    let mut queue: BTreeSet<(usize, VertexId)> = adj.iter().map(|(&v, n)| (n.len(), v)).collect();
    let mut order = Vec::with_capacity(adj.len());
    let mut higher = Vec::with_capacity(adj.len());
    let mut width = 0;
    while let Some((d, v)) = queue.pop_first() {
        if d > cap {
            return None;
        }
        width = width.max(d);
        let nb: Vec<VertexId> = adj.remove(&v).unwrap().into_iter().collect();
        for &a in &nb {
            let old = adj[&a].len();
            queue.remove(&(old, a));
            let set = adj.get_mut(&a).unwrap();
            set.remove(&v);
            for &b in &nb {
                if b != a {
                    set.insert(b);
                }
            }
            queue.insert((set.len(), a));
        }
        order.push(v);
        higher.push(nb);
    }
    let pos: BTreeMap<VertexId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let parent = higher
        .iter()
        .map(|h| h.iter().map(|v| pos[v]).min())
        .collect();
    Some(EliminationTree { order, higher, parent, width })
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

    fn complete(n: u64) -> Graph {
        let mut g = Graph::from_edges(n, &[]);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    #[test]
    fn known_values() {
        assert_eq!(exact_treewidth(&Graph::new()).unwrap(), -1);
        assert_eq!(exact_treewidth(&Graph::from_edges(3, &[])).unwrap(), 0);
        assert_eq!(exact_treewidth(&Graph::from_edges(4, &[(0, 1), (1, 2), (1, 3)])).unwrap(), 1);
        assert_eq!(exact_treewidth(&complete(4)).unwrap(), 3);
        assert_eq!(exact_treewidth(&complete(6)).unwrap(), 5);
        assert_eq!(exact_treewidth(&grid(3, 3)).unwrap(), 3);
        assert_eq!(exact_treewidth(&grid(4, 4)).unwrap(), 4);
        assert_eq!(exact_treewidth(&grid(5, 4)).unwrap(), 4);
    }

    #[test]
    fn decision_matches_exact_on_grids() {
        let g = grid(4, 4);
        assert!(!treewidth_at_most(&g, 3).unwrap());
        assert!(treewidth_at_most(&g, 4).unwrap());
        assert!(!tw_at_most_two(&grid(3, 3)));
        assert!(tw_at_most_two(&grid(2, 6)));
    }

    #[test]
    fn permutation_oracle_agrees_on_small_graphs() {
        let g = grid(2, 4);
        assert_eq!(treewidth_by_permutations(&g), exact_treewidth(&g).unwrap());
        let k = complete(5);
        assert_eq!(treewidth_by_permutations(&k), 4);
    }

    #[test]
    fn elimination_tree_covers_graph() {
        let g = grid(3, 3);
        let t = min_degree_elimination(&g, 10).unwrap();
        assert_eq!(t.order.len(), 9);
        assert!(t.width >= 3);
        assert!(min_degree_elimination(&g, 1).is_none());
        assert_eq!(t.parent.iter().filter(|p| p.is_none()).count(), 1);
    }
}
