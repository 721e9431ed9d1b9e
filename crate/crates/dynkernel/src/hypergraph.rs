//! Labeled multi-hypergraphs stored as a bipartite incidence structure.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::graph::Graph;

pub type VertexId = u64;
pub type EdgeId = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HyperError {
    #[error("vertex {0} does not exist")]
    MissingVertex(VertexId),
    #[error("vertex {0} still has incident hyperedges")]
    NonIsolatedVertex(VertexId),
    #[error("hyperedge {0} does not exist")]
    MissingEdge(EdgeId),
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("hyperedge {0} already exists")]
    DuplicateEdge(EdgeId),
    #[error("hyperedge lists vertex {0} twice")]
    RepeatedIncidence(VertexId),
    #[error("operation needs a non-empty hyperedge set")]
    EmptySet,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Default)]
struct VRec {
    // (edge, position of this vertex inside the edge's vertex list)
    inc: Vec<(EdgeId, u32)>,
}

#[derive(Debug, Clone)]
struct ERec {
    verts: Vec<VertexId>,
    // slots[i] = position of this edge inside inc list of verts[i]
    slots: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct Hypergraph {
    vertices: BTreeMap<VertexId, VRec>,
    edges: BTreeMap<EdgeId, ERec>,
    next_edge: EdgeId,
    size: usize,
    rank_hist: Vec<usize>,
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.edges.len() == other.edges.len()
            && self.vertices.keys().eq(other.vertices.keys())
            && self
                .edges
                .iter()
                .zip(other.edges.iter())
                .all(|((a, ea), (b, eb))| a == b && ea.verts == eb.verts)
    }
}
impl Eq for Hypergraph {}

impl Hypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// |G| = |V(G)| + sum over e of (|V(e)| + 1).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self) -> usize {
        self.rank_hist.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge_vertices(&self, e: EdgeId) -> Result<&[VertexId], HyperError> {
        self.edges
            .get(&e)
            .map(|r| r.verts.as_slice())
            .ok_or(HyperError::MissingEdge(e))
    }

    /// Vertex list of `e`; panics if `e` is absent.
    pub fn verts(&self, e: EdgeId) -> &[VertexId] {
        &self.edges[&e].verts
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.vertices.get(&v).map_or(0, |r| r.inc.len())
    }

    /// N^inc(v): hyperedges containing v, in storage order.
    pub fn incident(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.vertices
            .get(&v)
            .into_iter()
            .flat_map(|r| r.inc.iter().map(|&(e, _)| e))
    }

    pub fn incident_sorted(&self, v: VertexId) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self.incident(v).collect();
        out.sort_unstable();
        out
    }

    pub fn add_vertex(&mut self, v: VertexId) -> Result<(), HyperError> {
        if self.vertices.contains_key(&v) {
            return Err(HyperError::DuplicateVertex(v));
        }
        self.vertices.insert(v, VRec::default());
        self.size += 1;
        Ok(())
    }

    pub fn delete_vertex(&mut self, v: VertexId) -> Result<(), HyperError> {
        match self.vertices.get(&v) {
            None => Err(HyperError::MissingVertex(v)),
            Some(r) if !r.inc.is_empty() => Err(HyperError::NonIsolatedVertex(v)),
            Some(_) => {
                self.vertices.remove(&v);
                self.size -= 1;
                Ok(())
            }
        }
    }

    pub fn add_hyperedge(&mut self, verts: &[VertexId]) -> Result<EdgeId, HyperError> {
        let id = self.next_edge;
        self.add_hyperedge_with_id(id, verts)?;
        Ok(id)
    }

    /// Inserts a hyperedge under a caller-chosen label.
    pub fn add_hyperedge_with_id(&mut self, id: EdgeId, verts: &[VertexId]) -> Result<(), HyperError> {
        if self.edges.contains_key(&id) {
            return Err(HyperError::DuplicateEdge(id));
        }
        let mut vs = verts.to_vec();
        vs.sort_unstable();
        for w in vs.windows(2) {
            if w[0] == w[1] {
                return Err(HyperError::RepeatedIncidence(w[0]));
            }
        }
        for &v in &vs {
            if !self.vertices.contains_key(&v) {
                return Err(HyperError::MissingVertex(v));
            }
        }
        let mut slots = Vec::with_capacity(vs.len());
        for (i, &v) in vs.iter().enumerate() {
            let rec = self.vertices.get_mut(&v).unwrap();
            slots.push(rec.inc.len() as u32);
            rec.inc.push((id, i as u32));
        }
        let r = vs.len();
        if self.rank_hist.len() <= r {
            self.rank_hist.resize(r + 1, 0);
        }
        self.rank_hist[r] += 1;
        self.size += r + 1;
        self.edges.insert(id, ERec { verts: vs, slots });
        if id >= self.next_edge {
            self.next_edge = id.saturating_add(1);
        }
        Ok(())
    }

    /// Removes `e` in O(|V(e)|) using the cross slots; returns its vertex list.
    pub fn delete_hyperedge(&mut self, e: EdgeId) -> Result<Vec<VertexId>, HyperError> {
        let rec = self.edges.remove(&e).ok_or(HyperError::MissingEdge(e))?;
        for (i, &v) in rec.verts.iter().enumerate() {
            let s = rec.slots[i] as usize;
            let vr = self.vertices.get_mut(&v).unwrap();
            vr.inc.swap_remove(s);
            if s < vr.inc.len() {
                let (moved, pos) = vr.inc[s];
                self.edges.get_mut(&moved).unwrap().slots[pos as usize] = s as u32;
            }
        }
        let r = rec.verts.len();
        self.rank_hist[r] -= 1;
        self.size -= r + 1;
        Ok(rec.verts)
    }

    fn check_edges(&self, c: &[EdgeId]) -> Result<(), HyperError> {
        for &e in c {
            if !self.edges.contains_key(&e) {
                return Err(HyperError::MissingEdge(e));
            }
        }
        Ok(())
    }

    /// Returns (V(C), bd(C)) by marking incidences inside C and comparing with degrees.
    /// `c` must not contain duplicates.
    pub fn boundary(&self, c: &[EdgeId]) -> Result<(Vec<VertexId>, Vec<VertexId>), HyperError> {
        self.check_edges(c)?;
        let mut inside: BTreeMap<VertexId, usize> = BTreeMap::new();
        for &e in c {
            for &v in &self.edges[&e].verts {
                *inside.entry(v).or_insert(0) += 1;
            }
        }
        let mut all = Vec::with_capacity(inside.len());
        let mut bd = Vec::new();
        for (v, k) in inside {
            all.push(v);
            if self.degree(v) > k {
                bd.push(v);
            }
        }
        Ok((all, bd))
    }

    pub fn bd(&self, c: &[EdgeId]) -> Vec<VertexId> {
        self.boundary(c).expect("unknown hyperedge").1
    }

    pub fn lambda(&self, c: &[EdgeId]) -> usize {
        self.bd(c).len()
    }

    pub fn interior(&self, c: &[EdgeId]) -> Vec<VertexId> {
        let (all, bd) = self.boundary(c).expect("unknown hyperedge");
        all.into_iter().filter(|v| bd.binary_search(v).is_err()).collect()
    }

    /// Inclusion-maximal internally connected subsets of `a`.
    pub fn internal_components(&self, a: &[EdgeId]) -> Result<Vec<Vec<EdgeId>>, HyperError> {
        if a.is_empty() {
            return Err(HyperError::EmptySet);
        }
        let (_, bd) = self.boundary(a)?;
        let mut set: Vec<EdgeId> = a.to_vec();
        set.sort_unstable();
        let mut uf = UnionFind::new(set.len());
        let mut first_at: BTreeMap<VertexId, usize> = BTreeMap::new();
        for (i, &e) in set.iter().enumerate() {
            for &v in &self.edges[&e].verts {
                if bd.binary_search(&v).is_ok() {
                    continue;
                }
                match first_at.get(&v) {
                    Some(&j) => uf.union(i, j),
                    None => {
                        first_at.insert(v, i);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
        for (i, &e) in set.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(e);
        }
        let mut out: Vec<Vec<EdgeId>> = groups.into_values().collect();
        out.sort();
        Ok(out)
    }

    pub fn is_internally_connected(&self, a: &[EdgeId]) -> bool {
        !a.is_empty() && self.internal_components(a).is_ok_and(|c| c.len() == 1)
    }

    /// Sub-hypergraph G[A]: the edges of A and the vertices they touch.
    pub fn restrict(&self, a: &[EdgeId]) -> Hypergraph {
        let mut h = Hypergraph::new();
        for &e in a {
            for &v in &self.edges[&e].verts {
                if !h.has_vertex(v) {
                    h.add_vertex(v).unwrap();
                }
            }
        }
        for &e in a {
            h.add_hyperedge_with_id(e, &self.edges[&e].verts).unwrap();
        }
        h
    }

    /// Primal graph Pc(G): vertices of G, adjacent when they share a hyperedge.
    pub fn primal_graph(&self) -> Graph {
        let mut g = Graph::new();
        for v in self.vertices() {
            g.add_vertex(v);
        }
        for r in self.edges.values() {
            for i in 0..r.verts.len() {
                for j in i + 1..r.verts.len() {
                    g.add_edge(r.verts[i], r.verts[j]);
                }
            }
        }
        g
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in self.vertices() {
            writeln!(s, "v {v}").unwrap();
        }
        for (e, r) in &self.edges {
            write!(s, "h {e}").unwrap();
            for v in &r.verts {
                write!(s, " {v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Hypergraph, HyperError> {
        let mut h = Hypergraph::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: &str| HyperError::Parse { line: i + 1, msg: msg.to_string() };
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let nums: Result<Vec<u64>, _> = it.map(|t| t.parse::<u64>()).collect();
            let nums = nums.map_err(|_| perr("expected unsigned integers"))?;
            match tag {
                "v" if nums.len() == 1 => h.add_vertex(nums[0])?,
                "h" if !nums.is_empty() => h.add_hyperedge_with_id(nums[0], &nums[1..])?,
                _ => return Err(perr("unknown record")),
            }
        }
        Ok(h)
    }

    /// Recomputes counters from scratch and compares them with the maintained ones.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut size = self.vertices.len();
        let mut rank = 0;
        for (&e, r) in &self.edges {
            size += r.verts.len() + 1;
            rank = rank.max(r.verts.len());
            for (i, &v) in r.verts.iter().enumerate() {
                let vr = self.vertices.get(&v).ok_or(format!("edge {e} lists missing vertex {v}"))?;
                let s = r.slots[i] as usize;
                if vr.inc.get(s) != Some(&(e, i as u32)) {
                    return Err(format!("broken cross slot for edge {e} vertex {v}"));
                }
            }
        }
        let inc_total: usize = self.vertices.values().map(|r| r.inc.len()).sum();
        let exp_total: usize = self.edges.values().map(|r| r.verts.len()).sum();
        if inc_total != exp_total {
            return Err("incidence counts differ".into());
        }
        if size != self.size {
            return Err(format!("size {} but recomputed {}", self.size, size));
        }
        if rank != self.rank() {
            return Err(format!("rank {} but recomputed {}", self.rank(), rank));
        }
        Ok(())
    }
}

/// H(G): a singleton hyperedge per vertex, a pair hyperedge per edge.
/// Singletons get ids 0..n in vertex order, pairs follow in edge order.
pub fn support_hypergraph(g: &Graph) -> Hypergraph {
    let mut h = Hypergraph::new();
    for v in g.vertices() {
        h.add_vertex(v).unwrap();
    }
    for v in g.vertices() {
        h.add_hyperedge(&[v]).unwrap();
    }
    for (u, v) in g.edges() {
        h.add_hyperedge(&[u, v]).unwrap();
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HOp {
    AddVertex(VertexId),
    DeleteVertex(VertexId),
    AddHyperedge(EdgeId, Vec<VertexId>),
    DeleteHyperedge(EdgeId, Vec<VertexId>),
}

impl HOp {
    pub fn size(&self) -> usize {
        match self {
            HOp::AddVertex(_) | HOp::DeleteVertex(_) => 1,
            HOp::AddHyperedge(_, vs) | HOp::DeleteHyperedge(_, vs) => vs.len() + 1,
        }
    }

    pub fn apply(&self, h: &mut Hypergraph) -> Result<(), HyperError> {
        match self {
            HOp::AddVertex(v) => h.add_vertex(*v),
            HOp::DeleteVertex(v) => h.delete_vertex(*v),
            HOp::AddHyperedge(e, vs) => h.add_hyperedge_with_id(*e, vs),
            HOp::DeleteHyperedge(e, _) => h.delete_hyperedge(*e).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperationSeq {
    pub ops: Vec<HOp>,
}

impl OperationSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: HOp) {
        self.ops.push(op);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// ‖𝒞‖: vertex operations cost 1, hyperedge operations |V(e)|+1.
    pub fn size(&self) -> usize {
        self.ops.iter().map(HOp::size).sum()
    }

    pub fn replay(&self, h: &mut Hypergraph) -> Result<(), HyperError> {
        for op in &self.ops {
            op.apply(h)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u64) -> Graph {
        let mut g = Graph::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        for v in 1..n {
            g.add_edge(v - 1, v);
        }
        g
    }

    fn edge_of(h: &Hypergraph, vs: &[VertexId]) -> EdgeId {
        h.edges().find(|&e| h.verts(e) == vs).unwrap()
    }

    #[test]
    fn size_formula() {
        let mut h = Hypergraph::new();
        h.add_vertex(1).unwrap();
        assert_eq!((h.num_vertices(), h.size()), (1, 1));
        h.add_vertex(2).unwrap();
        h.add_hyperedge(&[1, 2]).unwrap();
        assert_eq!(h.rank(), 2);
        assert_eq!(h.size(), 5);
        assert_eq!(h.delete_vertex(1), Err(HyperError::NonIsolatedVertex(1)));
    }

    #[test]
    fn errors() {
        let mut h = Hypergraph::new();
        h.add_vertex(3).unwrap();
        assert_eq!(h.add_vertex(3), Err(HyperError::DuplicateVertex(3)));
        assert_eq!(h.add_hyperedge(&[3, 4]), Err(HyperError::MissingVertex(4)));
        assert_eq!(h.delete_hyperedge(9), Err(HyperError::MissingEdge(9)));
        assert_eq!(h.delete_vertex(8), Err(HyperError::MissingVertex(8)));
    }

    #[test]
    fn boundary_examples() {
        let mut tri = Graph::new();
        for v in 0..3 {
            tri.add_vertex(v);
        }
        tri.add_edge(0, 1);
        tri.add_edge(1, 2);
        tri.add_edge(0, 2);
        let h = support_hypergraph(&tri);
        let e01 = edge_of(&h, &[0, 1]);
        assert_eq!(h.boundary(&[e01]).unwrap(), (vec![0, 1], vec![0, 1]));
        let all: Vec<_> = h.edges().collect();
        assert!(h.bd(&all).is_empty());

        let h = support_hypergraph(&path(3));
        let c = [edge_of(&h, &[0, 1]), edge_of(&h, &[0]), edge_of(&h, &[1])];
        assert_eq!(h.bd(&c), vec![1]);
    }

    #[test]
    fn internal_component_examples() {
        let h = support_hypergraph(&path(4));
        let e = |vs: &[u64]| edge_of(&h, vs);
        let single = h.internal_components(&[e(&[0, 1])]).unwrap();
        assert_eq!(single.len(), 1);
        let two = h.internal_components(&[e(&[0, 1]), e(&[2, 3])]).unwrap();
        assert_eq!(two.len(), 2);
        let a = [e(&[0, 1]), e(&[1, 2]), e(&[2, 3]), e(&[1]), e(&[2])];
        assert_eq!(h.interior(&a), vec![1, 2]);
        assert_eq!(h.internal_components(&a).unwrap().len(), 1);
        assert_eq!(h.internal_components(&[]), Err(HyperError::EmptySet));
    }

    #[test]
    fn support_counts() {
        let mut g = Graph::new();
        g.add_vertex(5);
        assert_eq!(support_hypergraph(&g).num_edges(), 1);
        assert_eq!(support_hypergraph(&Graph::new()).num_edges(), 0);
        let h = support_hypergraph(&path(3));
        assert_eq!(h.num_edges(), 5);
        assert!(h.rank() <= 2);
        assert_eq!(h.primal_graph(), path(3));
    }

    #[test]
    fn text_roundtrip_and_replay() {
        let h = support_hypergraph(&path(5));
        let back = Hypergraph::from_text(&h.to_text()).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.to_text(), h.to_text());

        let mut g = h.clone();
        let mut seq = OperationSeq::new();
        let e = edge_of(&g, &[3, 4]);
        seq.push(HOp::DeleteHyperedge(e, g.verts(e).to_vec()));
        seq.push(HOp::AddVertex(10));
        seq.push(HOp::AddHyperedge(100, vec![4, 10]));
        assert_eq!(seq.size(), 3 + 1 + 3);
        seq.replay(&mut g).unwrap();
        let mut again = h.clone();
        seq.replay(&mut again).unwrap();
        assert_eq!(again.to_text(), g.to_text());
        g.check_consistency().unwrap();
    }

    #[test]
    fn cross_slots_survive_churn() {
        let mut h = Hypergraph::new();
        for v in 0..6 {
            h.add_vertex(v).unwrap();
        }
        let mut ids = Vec::new();
        for i in 0..6u64 {
            for j in i + 1..6 {
                ids.push(h.add_hyperedge(&[i, j]).unwrap());
            }
        }
        for (k, e) in ids.iter().enumerate() {
            if k % 3 != 1 {
                h.delete_hyperedge(*e).unwrap();
                h.check_consistency().unwrap();
            }
        }
        let fresh = h.add_hyperedge(&[0, 1, 2]).unwrap();
        assert!(fresh > *ids.last().unwrap());
        h.check_consistency().unwrap();
    }
}
