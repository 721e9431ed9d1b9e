//! Dynamic local-search index over a hypergraph: all chips (small, internally
//! connected, low-boundary, oracle-passing hyperedge sets) grouped by boundary.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::hypergraph::{EdgeId, HOp, HyperError, Hypergraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChipParams {
    pub s1: usize,
    pub s2: usize,
    pub k: usize,
    /// Rank bound; the vertex budget of the search is s2·r.
    pub r: usize,
}

impl ChipParams {
    pub fn new(s1: usize, s2: usize, k: usize, r: usize) -> Result<ChipParams, String> {
        if s1 > s2 {
            return Err(format!("s1 = {s1} exceeds s2 = {s2}"));
        }
        Ok(ChipParams { s1, s2, k, r: r.max(1) })
    }
}

/// An s2-bounded oracle: sees a hyperedge set and its boundary, nothing else.
pub type Oracle<'a> = dyn Fn(&[EdgeId], &[VertexId]) -> bool + 'a;

fn union_sorted(a: &[EdgeId], b: &[EdgeId]) -> Vec<EdgeId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out
}

/// All A with I ⊆ A, X ⊆ bd(A), |A| ≤ p, |V(A)| ≤ s, λ(A) ≤ k, and every
/// internal component of A meeting I. `steps` counts recursive calls.
pub fn static_local_search(
    h: &Hypergraph,
    i: &[EdgeId],
    x: &[VertexId],
    p: usize,
    s: usize,
    k: usize,
    steps: &mut usize,
) -> Vec<Vec<EdgeId>> {
    let mut i = i.to_vec();
    i.sort_unstable();
    i.dedup();
    let mut x = x.to_vec();
    x.sort_unstable();
    x.dedup();
    let mut out = Vec::new();
    if i.is_empty() {
        return out;
    }
    search(h, i, x, p, s, k, steps, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    h: &Hypergraph,
    i: Vec<EdgeId>,
    x: Vec<VertexId>,
    p: usize,
    s: usize,
    k: usize,
    steps: &mut usize,
    out: &mut Vec<Vec<EdgeId>>,
) {
    *steps += 1;
    if i.len() > p || x.len() > k {
        return;
    }
    let Ok((vi, bd)) = h.boundary(&i) else { return };
    if vi.len() > s {
        return;
    }
    if x.iter().any(|v| bd.binary_search(v).is_err()) {
        return;
    }
    let Some(&v) = bd.iter().find(|v| x.binary_search(v).is_err()) else {
        out.push(i);
        return;
    };
    let mut x2 = x.clone();
    let pos = x2.binary_search(&v).unwrap_err();
    x2.insert(pos, v);
    search(h, i.clone(), x2, p, s, k, steps, out);
    let nb = h.incident_sorted(v);
    let i2 = union_sorted(&i, &nb);
    search(h, i2, x, p, s, k, steps, out);
}

#[derive(Debug, Clone, Default)]
struct Group {
    members: BTreeSet<(usize, Vec<EdgeId>)>,
    vol: usize,
}

/// Chip index mirroring a hypergraph it owns.
#[derive(Debug, Clone)]
pub struct ChipIndex {
    params: ChipParams,
    h: Hypergraph,
    chips: BTreeMap<Vec<EdgeId>, Vec<VertexId>>,
    groups: BTreeMap<Vec<VertexId>, Group>,
    heap: BTreeSet<(usize, Vec<VertexId>)>,
    by_edge: HashMap<EdgeId, BTreeSet<Vec<EdgeId>>>,
    steps: usize,
}

impl ChipIndex {
    pub fn new(params: ChipParams) -> ChipIndex {
        ChipIndex {
            params,
            h: Hypergraph::new(),
            chips: BTreeMap::new(),
            groups: BTreeMap::new(),
            heap: BTreeSet::new(),
            by_edge: HashMap::new(),
            steps: 0,
        }
    }

    pub fn params(&self) -> ChipParams {
        self.params
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// Search steps since the last call.
    pub fn take_steps(&mut self) -> usize {
        std::mem::take(&mut self.steps)
    }

    pub fn chips(&self) -> &BTreeMap<Vec<EdgeId>, Vec<VertexId>> {
        &self.chips
    }

    pub fn group_volumes(&self) -> Vec<(Vec<VertexId>, usize)> {
        self.groups.iter().map(|(b, g)| (b.clone(), g.vol)).collect()
    }

    fn vertex_budget(&self) -> usize {
        self.params.s2 * self.params.r.max(self.h.rank()).max(1)
    }

    /// Chips Z with I ⊆ Z and X ⊆ bd(Z) in the current hypergraph.
    pub fn enumerate_chips_containing(&mut self, i: &[EdgeId], x: &[VertexId], oracle: &Oracle) -> Vec<(Vec<EdgeId>, Vec<VertexId>)> {
        let p = self.params;
        let s = self.vertex_budget();
        let found = static_local_search(&self.h, i, x, p.s2, s, p.k, &mut self.steps);
        let mut out = Vec::new();
        for a in found {
            if !self.h.is_internally_connected(&a) {
                continue;
            }
            let bd = self.h.bd(&a);
            if oracle(&a, &bd) {
                out.push((a, bd));
            }
        }
        out
    }

    fn insert_chip(&mut self, z: Vec<EdgeId>, bd: Vec<VertexId>) {
        if self.chips.contains_key(&z) {
            return;
        }
        let g = self.groups.entry(bd.clone()).or_default();
        if g.vol > 0 {
            self.heap.remove(&(g.vol, bd.clone()));
        }
        g.vol += z.len();
        g.members.insert((z.len(), z.clone()));
        self.heap.insert((g.vol, bd.clone()));
        for &e in &z {
            self.by_edge.entry(e).or_default().insert(z.clone());
        }
        self.chips.insert(z, bd);
    }

    fn remove_chip(&mut self, z: &[EdgeId]) {
        let Some(bd) = self.chips.remove(z) else { return };
        let g = self.groups.get_mut(&bd).unwrap();
        self.heap.remove(&(g.vol, bd.clone()));
        g.vol -= z.len();
        g.members.remove(&(z.len(), z.to_vec()));
        if g.members.is_empty() {
            self.groups.remove(&bd);
        } else {
            self.heap.insert((g.vol, bd.clone()));
        }
        for e in z {
            if let Some(set) = self.by_edge.get_mut(e) {
                set.remove(z);
                if set.is_empty() {
                    self.by_edge.remove(e);
                }
            }
        }
    }

    fn chips_with(&self, e: EdgeId) -> Vec<Vec<EdgeId>> {
        self.by_edge.get(&e).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    /// Chips having every incidence of `v` (in the mirror) as members.
    fn chips_swallowing(&self, v: VertexId) -> Vec<Vec<EdgeId>> {
        let inc = self.h.incident_sorted(v);
        let Some(&first) = inc.first() else { return Vec::new() };
        self.chips_with(first)
            .into_iter()
            .filter(|z| inc.iter().all(|f| z.binary_search(f).is_ok()))
            .collect()
    }

    pub fn on_add_vertex(&mut self, v: VertexId) -> Result<(), HyperError> {
        self.h.add_vertex(v)
    }

    pub fn on_delete_vertex(&mut self, v: VertexId) -> Result<(), HyperError> {
        self.h.delete_vertex(v)
    }

    pub fn on_add_hyperedge(&mut self, e: EdgeId, verts: &[VertexId], oracle: &Oracle) -> Result<(), HyperError> {
        let mut vs = verts.to_vec();
        vs.sort_unstable();
        for &v in &vs {
            if !self.h.has_vertex(v) {
                return Err(HyperError::MissingVertex(v));
            }
        }
        let mut seeds = Vec::new();
        for &v in &vs {
            for z in self.chips_swallowing(v) {
                self.remove_chip(&z);
            }
            let inc = self.h.incident_sorted(v);
            if !inc.is_empty() && inc.len() <= self.params.s2 {
                seeds.push((v, inc));
            }
        }
        self.h.add_hyperedge_with_id(e, &vs)?;
        for (v, inc) in seeds {
            for (z, bd) in self.enumerate_chips_containing(&inc, &[v], oracle) {
                self.insert_chip(z, bd);
            }
        }
        for (z, bd) in self.enumerate_chips_containing(&[e], &[], oracle) {
            self.insert_chip(z, bd);
        }
        Ok(())
    }

    pub fn on_delete_hyperedge(&mut self, e: EdgeId, oracle: &Oracle) -> Result<(), HyperError> {
        let vs = self.h.edge_vertices(e)?.to_vec();
        for z in self.chips_with(e) {
            self.remove_chip(&z);
        }
        self.h.delete_hyperedge(e)?;
        let mut seeds = Vec::new();
        for &v in &vs {
            for z in self.chips_swallowing(v) {
                self.remove_chip(&z);
            }
            let inc = self.h.incident_sorted(v);
            if !inc.is_empty() && inc.len() <= self.params.s2 {
                seeds.push(inc);
            }
        }
        for inc in seeds {
            for (z, bd) in self.enumerate_chips_containing(&inc, &[], oracle) {
                self.insert_chip(z, bd);
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, op: &HOp, oracle: &Oracle) -> Result<(), HyperError> {
        match op {
            HOp::AddVertex(v) => self.on_add_vertex(*v),
            HOp::DeleteVertex(v) => self.on_delete_vertex(*v),
            HOp::AddHyperedge(e, vs) => self.on_add_hyperedge(*e, vs, oracle),
            HOp::DeleteHyperedge(e, _) => self.on_delete_hyperedge(*e, oracle),
        }
    }

    /// A union of chips sharing the boundary of maximum volume, or None when
    /// that volume is below s1.
    pub fn query(&self) -> Option<Vec<EdgeId>> {
        let (vol, bd) = self.heap.last()?;
        if *vol < self.params.s1 {
            return None;
        }
        let g = &self.groups[bd];
        let half = self.params.s1.div_ceil(2);
        let (size, big) = g.members.last()?;
        if *size >= half {
            return Some(big.clone());
        }
        let mut acc: Vec<EdgeId> = Vec::new();
        for (_, z) in g.members.iter().take(self.params.s2) {
            let merged = union_sorted(&acc, z);
            if self.h.bd(&merged) != *bd {
                continue;
            }
            acc = merged;
            if acc.len() >= half {
                break;
            }
        }
        if acc.is_empty() {
            None
        } else {
            Some(acc)
        }
    }

    /// Recomputes volumes and back-references.
    pub fn check_index(&self) -> Result<(), String> {
        let mut heap = BTreeSet::new();
        for (bd, g) in &self.groups {
            let vol: usize = g.members.iter().map(|(s, _)| s).sum();
            if vol != g.vol || g.members.is_empty() {
                return Err(format!("group {bd:?} volume {} but members sum to {vol}", g.vol));
            }
            heap.insert((vol, bd.clone()));
            for (_, z) in &g.members {
                if self.chips.get(z) != Some(bd) {
                    return Err(format!("chip {z:?} misfiled"));
                }
                if self.h.bd(z) != *bd {
                    return Err(format!("chip {z:?} has stale boundary"));
                }
            }
        }
        if heap != self.heap {
            return Err("heap out of sync".into());
        }
        // chips with a common boundary are disjoint
        for (bd, g) in &self.groups {
            let mut seen = BTreeSet::new();
            for (_, z) in &g.members {
                for e in z {
                    if !seen.insert(*e) {
                        return Err(format!("overlapping chips in group {bd:?}"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::hypergraph::support_hypergraph;

    fn yes(_: &[EdgeId], _: &[VertexId]) -> bool {
        true
    }

    #[test]
    fn isolated_edge_is_its_own_chip() {
        let mut h = Hypergraph::new();
        h.add_vertex(0).unwrap();
        let e = h.add_hyperedge(&[0]).unwrap();
        let mut steps = 0;
        assert_eq!(static_local_search(&h, &[e], &[], 4, 4, 0, &mut steps), vec![vec![e]]);
        assert!(static_local_search(&h, &[e], &[0, 1, 2], 4, 4, 2, &mut steps).is_empty());
    }

    #[test]
    fn triangle_search_matches_filter() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let h = support_hypergraph(&g);
        let edges: Vec<EdgeId> = h.edges().collect();
        let eab = *edges.iter().find(|&&e| h.verts(e) == [0, 1]).unwrap();
        let mut steps = 0;
        let mut got = static_local_search(&h, &[eab], &[], 6, 3, 2, &mut steps);
        got.sort();
        let mut want = Vec::new();
        for mask in 1u32..(1 << edges.len()) {
            let a: Vec<EdgeId> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
            if !a.contains(&eab) || h.lambda(&a) > 2 {
                continue;
            }
            let comps = h.internal_components(&a).unwrap();
            if comps.iter().all(|c| c.contains(&eab)) {
                want.push(a);
            }
        }
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn query_unions_small_chips() {
        // five pendant paths a-x_i-b sharing the boundary {a, b}
        let mut idx = ChipIndex::new(ChipParams::new(8, 64, 2, 2).unwrap());
        let small = |z: &[EdgeId], _: &[VertexId]| z.len() <= 2;
        for v in [0, 1] {
            idx.on_add_vertex(v).unwrap();
        }
        let mut id = 0;
        for i in 0..5 {
            let x = 10 + i;
            idx.on_add_vertex(x).unwrap();
            idx.on_add_hyperedge(id, &[0, x], &small).unwrap();
            idx.on_add_hyperedge(id + 1, &[x, 1], &small).unwrap();
            id += 2;
        }
        idx.check_index().unwrap();
        let c = idx.query().unwrap();
        assert!(c.len() >= 4 && c.len() < 8, "{c:?}");
        assert_eq!(idx.hypergraph().bd(&c), vec![0, 1]);
    }

    #[test]
    fn empty_index_has_no_answer() {
        let idx = ChipIndex::new(ChipParams::new(2, 4, 1, 2).unwrap());
        assert_eq!(idx.query(), None);
        let mut idx = ChipIndex::new(ChipParams::new(1, 4, 1, 2).unwrap());
        idx.on_add_vertex(3).unwrap();
        assert!(idx.is_empty());
        idx.on_add_hyperedge(7, &[3], &yes).unwrap();
        assert_eq!(idx.query(), Some(vec![7]));
    }
}
