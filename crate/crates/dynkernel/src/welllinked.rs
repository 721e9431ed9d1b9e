//! Well-linkedness via vertex-disjoint path flows, witnesses from minimum cuts,
//! and partitions into well-linked parts.
//!
//! A set A with λ(A) >= 2 fails to be well-linked exactly when some disjoint
//! B1, B2 ⊆ bd(A) with |B1| = |B2| = j <= λ(A)/2 cannot be joined by j
//! vertex-disjoint paths in Pc(G[A]) once the remaining boundary vertices are
//! removed. Overlapping pairs reduce to this form because shared vertices are
//! trivial paths that every other path must avoid.

use std::collections::{BTreeMap, VecDeque};

use crate::hypergraph::{EdgeId, Hypergraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WellLinkedVerdict {
    WellLinked,
    Witness(Vec<EdgeId>, Vec<EdgeId>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WlError {
    #[error("{size} hyperedges exceed the enumeration limit {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
}

/// Enumeration limit for the exponential reference routines.
pub const ENUM_LIMIT: usize = 16;

const INF: i32 = i32::MAX / 4;

struct Arc {
    to: usize,
    cap: i32,
}

/// Incidence network of G[A]: each vertex is split into in/out nodes joined by a
/// unit arc, each hyperedge is an uncapacitated hub.
struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    nv: usize,
    ne: usize,
}

impl Network {
    fn node_in(i: usize) -> usize {
        2 * i
    }
    fn node_out(i: usize) -> usize {
        2 * i + 1
    }

    fn add_arc(&mut self, a: usize, b: usize, cap: i32) {
        self.out[a].push(self.arcs.len());
        self.arcs.push(Arc { to: b, cap });
        self.out[b].push(self.arcs.len());
        self.arcs.push(Arc { to: a, cap: 0 });
    }

    fn source(&self) -> usize {
        2 * self.nv + self.ne
    }
    fn sink(&self) -> usize {
        2 * self.nv + self.ne + 1
    }

    /// `blocked[i]` removes vertex i; `side[i]` is 1 for sources, 2 for sinks.
    fn build(h: &Hypergraph, edges: &[EdgeId], index: &BTreeMap<VertexId, usize>, blocked: &[bool], side: &[u8]) -> Network {
        let nv = index.len();
        let ne = edges.len();
        let mut net = Network { arcs: Vec::new(), out: vec![Vec::new(); 2 * nv + ne + 2], nv, ne };
        for i in 0..nv {
            if !blocked[i] {
                net.add_arc(Self::node_in(i), Self::node_out(i), 1);
            }
        }
        for (k, &e) in edges.iter().enumerate() {
            let hub = 2 * nv + k;
            for v in h.verts(e) {
                let i = index[v];
                if blocked[i] {
                    continue;
                }
                net.add_arc(Self::node_out(i), hub, INF);
                net.add_arc(hub, Self::node_in(i), INF);
            }
        }
        let (s, t) = (net.source(), net.sink());
        for i in 0..nv {
            match side[i] {
                1 => net.add_arc(s, Self::node_in(i), 1),
                2 => net.add_arc(Self::node_out(i), t, 1),
                _ => {}
            }
        }
        net
    }

    fn augment(&mut self) -> bool {
        let (s, t) = (self.source(), self.sink());
        let mut prev = vec![usize::MAX; self.out.len()];
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &a in &self.out[x] {
                let y = self.arcs[a].to;
                if self.arcs[a].cap > 0 && !seen[y] {
                    seen[y] = true;
                    prev[y] = a;
                    if y == t {
                        let mut cur = t;
                        while cur != s {
                            let a = prev[cur];
                            self.arcs[a].cap -= 1;
                            self.arcs[a ^ 1].cap += 1;
                            cur = self.arcs[a ^ 1].to;
                        }
                        return true;
                    }
                    q.push_back(y);
                }
            }
        }
        false
    }

    fn max_flow(&mut self, limit: usize) -> usize {
        let mut f = 0;
        while f < limit && self.augment() {
            f += 1;
        }
        f
    }

    fn reachable(&self) -> Vec<bool> {
        let s = self.source();
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &a in &self.out[x] {
                let y = self.arcs[a].to;
                if self.arcs[a].cap > 0 && !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
        seen
    }
}

struct Prepared {
    edges: Vec<EdgeId>,
    index: BTreeMap<VertexId, usize>,
    bd: Vec<usize>,
}

fn prepare(h: &Hypergraph, a: &[EdgeId]) -> Prepared {
    let mut edges = a.to_vec();
    edges.sort_unstable();
    edges.dedup();
    let (all, bd) = h.boundary(&edges).expect("unknown hyperedge");
    let index: BTreeMap<VertexId, usize> = all.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let bd = bd.iter().map(|v| index[v]).collect();
    Prepared { edges, index, bd }
}

/// Calls `f(b1, b2)` for disjoint index subsets of `bd` of equal size j <= λ/2,
/// each unordered pair once. Stops early when `f` returns false.
fn for_each_pair(bd: &[usize], mut f: impl FnMut(&[usize], &[usize]) -> bool) {
    let l = bd.len();
    // assignment digits: 0 = unused, 1 = first set, 2 = second set
    let total = 3usize.pow(l as u32);
    let mut b1 = Vec::with_capacity(l);
    let mut b2 = Vec::with_capacity(l);
    for code in 1..total {
        b1.clear();
        b2.clear();
        let mut c = code;
        for &v in bd {
            match c % 3 {
                1 => b1.push(v),
                2 => b2.push(v),
                _ => {}
            }
            c /= 3;
        }
        if b1.is_empty() || b1.len() != b2.len() || b1[0] > b2[0] {
            continue;
        }
        if !f(&b1, &b2) {
            return;
        }
    }
}

fn failing_pair(h: &Hypergraph, p: &Prepared) -> Option<(Network, Vec<bool>)> {
    if p.bd.len() <= 1 {
        return None;
    }
    let nv = p.index.len();
    let mut found = None;
    for_each_pair(&p.bd, |b1, b2| {
        let mut blocked = vec![false; nv];
        for &v in &p.bd {
            blocked[v] = true;
        }
        let mut side = vec![0u8; nv];
        for &v in b1 {
            blocked[v] = false;
            side[v] = 1;
        }
        for &v in b2 {
            blocked[v] = false;
            side[v] = 2;
        }
        let mut net = Network::build(h, &p.edges, &p.index, &blocked, &side);
        if net.max_flow(b1.len()) < b1.len() {
            found = Some((net, blocked));
            false
        } else {
            true
        }
    });
    found
}

pub fn is_well_linked(h: &Hypergraph, a: &[EdgeId]) -> bool {
    if a.len() <= 1 {
        return true;
    }
    let p = prepare(h, a);
    failing_pair(h, &p).is_none()
}

/// Flow check cross-validated against bipartition enumeration for small sets.
pub fn is_well_linked_checked(h: &Hypergraph, a: &[EdgeId]) -> bool {
    let flow = is_well_linked(h, a);
    if a.len() <= 12 {
        let brute = is_well_linked_bruteforce(h, a).expect("within limit");
        assert_eq!(flow, brute, "flow and enumeration disagree on {a:?}");
    }
    flow
}

pub fn well_linked_witness(h: &Hypergraph, a: &[EdgeId]) -> WellLinkedVerdict {
    if a.len() <= 1 {
        return WellLinkedVerdict::WellLinked;
    }
    let p = prepare(h, a);
    let Some((net, blocked)) = failing_pair(h, &p) else {
        return WellLinkedVerdict::WellLinked;
    };
    let seen = net.reachable();
    let nv = p.index.len();
    let mut side1 = Vec::new();
    let mut side2 = Vec::new();
    let mut free = Vec::new();
    // vertices through which the two sides may touch: cut vertices and removed ones
    let mut shared = vec![false; nv];
    for i in 0..nv {
        let vin = seen[Network::node_in(i)];
        let vout = seen[Network::node_out(i)];
        if blocked[i] || (vin && !vout) {
            shared[i] = true;
        }
    }
    for (k, &e) in p.edges.iter().enumerate() {
        if h.verts(e).iter().all(|v| shared[p.index[v]]) {
            free.push(e);
        } else if seen[2 * nv + k] {
            side1.push(e);
        } else {
            side2.push(e);
        }
    }
    for e in free {
        side1.push(e);
        let l1 = h.lambda(&side1).max(if side2.is_empty() { 0 } else { h.lambda(&side2) });
        side1.pop();
        side2.push(e);
        let l2 = h.lambda(&side2).max(if side1.is_empty() { 0 } else { h.lambda(&side1) });
        side2.pop();
        if l1 <= l2 {
            side1.push(e);
        } else {
            side2.push(e);
        }
    }
    side1.sort_unstable();
    side2.sort_unstable();
    WellLinkedVerdict::Witness(side1, side2)
}

/// Splits `b` until every part is well-linked; at most 2^λ(b) parts.
pub fn partition_well_linked(h: &Hypergraph, b: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    let mut start = b.to_vec();
    start.sort_unstable();
    let mut work = vec![start];
    let mut done = Vec::new();
    while let Some(x) = work.pop() {
        match well_linked_witness(h, &x) {
            WellLinkedVerdict::WellLinked => done.push(x),
            WellLinkedVerdict::Witness(p, q) => {
                work.push(q);
                work.push(p);
            }
        }
    }
    done.sort();
    done
}

/// Reference check over all bipartitions.
pub fn is_well_linked_bruteforce(h: &Hypergraph, a: &[EdgeId]) -> Result<bool, WlError> {
    if a.len() > ENUM_LIMIT {
        return Err(WlError::SizeLimitExceeded { size: a.len(), limit: ENUM_LIMIT });
    }
    let l = h.lambda(a);
    let n = a.len();
    if n <= 1 {
        return Ok(true);
    }
    for mask in 1u32..(1u32 << (n - 1)) {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, &e) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                x.push(e);
            } else {
                y.push(e);
            }
        }
        if h.lambda(&x) < l && h.lambda(&y) < l {
            return Ok(false);
        }
    }
    Ok(true)
}

/// wl(E): the largest λ(A) over well-linked A ⊆ E.
pub fn well_linked_number(h: &Hypergraph, e: &[EdgeId]) -> Result<usize, WlError> {
    if e.len() > ENUM_LIMIT {
        return Err(WlError::SizeLimitExceeded { size: e.len(), limit: ENUM_LIMIT });
    }
    let n = e.len();
    let mut best = 0;
    for mask in 1u32..(1u32 << n) {
        let a: Vec<EdgeId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| e[i]).collect();
        let l = h.lambda(&a);
        if l > best && is_well_linked(h, &a) {
            best = l;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::hypergraph::support_hypergraph;

    fn edge_of(h: &Hypergraph, vs: &[VertexId]) -> EdgeId {
        h.edges().find(|&e| h.verts(e) == vs).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let h = support_hypergraph(&Graph::from_edges(3, &[(0, 1), (1, 2)]));
        let all: Vec<_> = h.edges().collect();
        assert!(is_well_linked(&h, &all));
        assert!(is_well_linked(&h, &all[..1]));
        assert_eq!(well_linked_witness(&h, &all[..1]), WellLinkedVerdict::WellLinked);
    }

    #[test]
    fn star_is_not_well_linked() {
        let h = support_hypergraph(&Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]));
        let a = [edge_of(&h, &[0, 1]), edge_of(&h, &[0, 2])];
        assert_eq!(h.lambda(&a), 3);
        assert!(!is_well_linked(&h, &a));
        assert!(!is_well_linked_bruteforce(&h, &a).unwrap());
        match well_linked_witness(&h, &a) {
            WellLinkedVerdict::Witness(x, y) => {
                assert_eq!(h.lambda(&x), 2);
                assert_eq!(h.lambda(&y), 2);
            }
            _ => panic!("expected witness"),
        }
        assert_eq!(partition_well_linked(&h, &a).len(), 2);
    }

    #[test]
    fn disjoint_edges_split() {
        let h = support_hypergraph(&Graph::from_edges(4, &[(0, 1), (2, 3)]));
        let a = [edge_of(&h, &[0, 1]), edge_of(&h, &[2, 3])];
        assert_eq!(h.lambda(&a), 4);
        match well_linked_witness(&h, &a) {
            WellLinkedVerdict::Witness(x, y) => assert_eq!((h.lambda(&x), h.lambda(&y)), (2, 2)),
            _ => panic!("expected witness"),
        }
    }

    #[test]
    fn path_number() {
        let h = support_hypergraph(&Graph::from_edges(3, &[(0, 1), (1, 2)]));
        let all: Vec<_> = h.edges().collect();
        let wl = well_linked_number(&h, &all).unwrap();
        assert_eq!(wl, 2);
    }
}
