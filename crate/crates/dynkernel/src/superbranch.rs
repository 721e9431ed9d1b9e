//! Rooted superbranch decompositions with materialized torsos and adhesions,
//! the four basic rotations, and root-torso change tracking.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::hypergraph::{EdgeId, HOp, HyperError, Hypergraph, OperationSeq, VertexId};

pub type NodeId = u64;

/// Label of the hyperedge standing for the parent inside a non-root torso.
pub const PARENT_LABEL: EdgeId = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SbError {
    #[error("node {0} does not exist")]
    MissingNode(NodeId),
    #[error("node {0} is a leaf")]
    IsLeaf(NodeId),
    #[error("node {0} is the root")]
    IsRoot(NodeId),
    #[error("node {child} is not a child of {parent}")]
    NotChild { parent: NodeId, child: NodeId },
    #[error("split of {node} needs |C| >= 2 and |complement| >= 2")]
    SplitSize { node: NodeId },
    #[error("adhesion of size {size} exceeds the bound {alpha}")]
    AdhesionTooLarge { size: usize, alpha: usize },
    #[error("leaf precondition violated at node {0}")]
    LeafPrecondition(NodeId),
    #[error(transparent)]
    Hyper(#[from] HyperError),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub parent: Option<NodeId>,
    children: Vec<NodeId>,
    pos: usize,
    pub leaf: Option<EdgeId>,
    pub adh: Vec<VertexId>,
    pub torso: Hypergraph,
    pub count: usize,
    pub height: u32,
}

impl Node {
    fn new(parent: Option<NodeId>) -> Node {
        Node {
            parent,
            children: Vec::new(),
            pos: 0,
            leaf: None,
            adh: Vec::new(),
            torso: Hypergraph::new(),
            count: 0,
            height: 0,
        }
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rotation {
    Contract { parent: NodeId, child: NodeId },
    Split { node: NodeId, new_node: NodeId, moved: Vec<NodeId> },
    InsertLeaf { node: NodeId, leaf: NodeId, edge: EdgeId, x: Vec<NodeId> },
    DeleteLeaf { node: NodeId, leaf: NodeId, edge: EdgeId },
}

/// Rotations applied since the last `take_log`, with their sizes ‖s‖ and the
/// nodes V_𝒯(𝒮) they involve.
#[derive(Debug, Clone, Default)]
pub struct RotationLog {
    pub rotations: Vec<(Rotation, usize)>,
    pub involved: BTreeSet<NodeId>,
}

impl RotationLog {
    /// ‖𝒮‖ = Σ (‖s‖ + 1).
    pub fn size(&self) -> usize {
        self.rotations.iter().map(|(_, s)| s + 1).sum()
    }
}

#[derive(Debug, Clone, Default)]
struct RootDiff {
    edges: BTreeMap<EdgeId, Option<Vec<VertexId>>>,
    verts: BTreeMap<VertexId, bool>,
    raw: Vec<HOp>,
}

#[derive(Debug, Clone)]
pub struct Superbranch {
    g: Hypergraph,
    nodes: HashMap<NodeId, Node>,
    root: NodeId,
    leaf_of: HashMap<EdgeId, NodeId>,
    next_id: NodeId,
    alpha: usize,
    log: RotationLog,
    diff: RootDiff,
    phi: f64,
}

fn phi_term(deg: usize, count: usize) -> f64 {
    if deg == 0 || count == 0 {
        0.0
    } else {
        (deg as f64 - 1.0) * (count as f64).log2()
    }
}

impl Superbranch {
    pub fn new(alpha: usize) -> Superbranch {
        let mut nodes = HashMap::new();
        nodes.insert(0, Node::new(None));
        Superbranch {
            g: Hypergraph::new(),
            nodes,
            root: 0,
            leaf_of: HashMap::new(),
            next_id: 1,
            alpha,
            log: RotationLog::default(),
            diff: RootDiff::default(),
            phi: 0.0,
        }
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// The decomposed hypergraph.
    pub fn hypergraph(&self) -> &Hypergraph {
        &self.g
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, t: NodeId) -> &Node {
        &self.nodes[&t]
    }

    pub fn get(&self, t: NodeId) -> Option<&Node> {
        self.nodes.get(&t)
    }

    pub fn contains(&self, t: NodeId) -> bool {
        self.nodes.contains_key(&t)
    }

    pub fn children(&self, t: NodeId) -> &[NodeId] {
        &self.nodes[&t].children
    }

    pub fn parent(&self, t: NodeId) -> Option<NodeId> {
        self.nodes[&t].parent
    }

    pub fn torso(&self, t: NodeId) -> &Hypergraph {
        &self.nodes[&t].torso
    }

    pub fn adh(&self, t: NodeId) -> &[VertexId] {
        &self.nodes[&t].adh
    }

    pub fn count(&self, t: NodeId) -> usize {
        self.nodes[&t].count
    }

    pub fn height(&self, t: NodeId) -> u32 {
        self.nodes[&t].height
    }

    pub fn is_leaf(&self, t: NodeId) -> bool {
        self.nodes[&t].is_leaf()
    }

    pub fn leaf_node(&self, e: EdgeId) -> Option<NodeId> {
        self.leaf_of.get(&e).copied()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn depth(&self, mut t: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[&t].parent {
            d += 1;
            t = p;
        }
        d
    }

    pub fn ancestors(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes[&t].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[&p].parent;
        }
        out
    }

    /// The root child whose subtree contains `t` (None for the root itself).
    pub fn root_child_of(&self, mut t: NodeId) -> Option<NodeId> {
        loop {
            let p = self.nodes[&t].parent?;
            if p == self.root {
                return Some(t);
            }
            t = p;
        }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn node_potential(&self, t: NodeId) -> f64 {
        let n = &self.nodes[&t];
        if n.is_leaf() {
            0.0
        } else {
            phi_term(n.children.len(), n.count)
        }
    }

    pub fn potential_recomputed(&self) -> f64 {
        let mut ids = self.node_ids();
        ids.sort_unstable();
        ids.iter().map(|&t| self.node_potential(t)).sum()
    }

    /// L[t] in leaf order.
    pub fn leaf_set(&self, t: NodeId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(x) = stack.pop() {
            let n = &self.nodes[&x];
            if let Some(e) = n.leaf {
                out.push(e);
            }
            stack.extend(n.children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    pub fn subtree_nodes(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.nodes[&x].children.iter().copied());
        }
        out
    }

    pub fn take_log(&mut self) -> RotationLog {
        std::mem::take(&mut self.log)
    }

    pub fn log(&self) -> &RotationLog {
        &self.log
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn phi_out(&mut self, t: NodeId) {
        self.phi -= self.node_potential(t);
    }

    fn phi_in(&mut self, t: NodeId) {
        self.phi += self.node_potential(t);
    }

    fn attach(&mut self, child: NodeId, parent: NodeId) {
        let p = self.nodes.get_mut(&parent).unwrap();
        let pos = p.children.len();
        p.children.push(child);
        let c = self.nodes.get_mut(&child).unwrap();
        c.parent = Some(parent);
        c.pos = pos;
    }

    fn detach(&mut self, child: NodeId) {
        let (parent, pos) = {
            let c = &self.nodes[&child];
            (c.parent.expect("detach root"), c.pos)
        };
        let p = self.nodes.get_mut(&parent).unwrap();
        p.children.swap_remove(pos);
        if pos < p.children.len() {
            let moved = p.children[pos];
            self.nodes.get_mut(&moved).unwrap().pos = pos;
        }
        self.nodes.get_mut(&child).unwrap().parent = None;
    }

    /// Recomputes heights from `t` upwards, stopping where nothing changes.
    fn fix_heights(&mut self, mut t: NodeId) {
        loop {
            if t == self.root {
                return;
            }
            let n = &self.nodes[&t];
            let h = if n.is_leaf() {
                0
            } else {
                1 + n.children.iter().map(|c| self.nodes[c].height).max().unwrap_or(0)
            };
            let parent = n.parent;
            if h == n.height {
                return;
            }
            self.nodes.get_mut(&t).unwrap().height = h;
            match parent {
                Some(p) => t = p,
                None => return,
            }
        }
    }

    fn recompute_height(&mut self, t: NodeId) {
        let n = &self.nodes[&t];
        let h = if n.is_leaf() {
            0
        } else {
            1 + n.children.iter().map(|c| self.nodes[c].height).max().unwrap_or(0)
        };
        self.nodes.get_mut(&t).unwrap().height = h;
    }

    fn record_root_edge(&mut self, label: EdgeId) {
        if self.diff.edges.contains_key(&label) {
            return;
        }
        let torso = &self.nodes[&self.root].torso;
        let pre = torso.edge_vertices(label).ok().map(|v| v.to_vec());
        self.diff.edges.insert(label, pre);
    }

    fn record_root_vertex(&mut self, v: VertexId) {
        if self.diff.verts.contains_key(&v) {
            return;
        }
        let pre = self.nodes[&self.root].torso.has_vertex(v);
        self.diff.verts.insert(v, pre);
    }

    /// Applies removals and additions to torso(t) as basic operations: fresh
    /// vertices first, then deletions, insertions, and finally deletion of
    /// vertices left isolated. Returns the size of the emitted sequence.
    fn torso_edit(&mut self, t: NodeId, removals: &[EdgeId], additions: &[(EdgeId, Vec<VertexId>)]) -> usize {
        let is_root = t == self.root;
        let mut ops = Vec::new();
        {
            let torso = &self.nodes[&t].torso;
            let mut fresh = BTreeSet::new();
            for (_, vs) in additions {
                for &v in vs {
                    if !torso.has_vertex(v) {
                        fresh.insert(v);
                    }
                }
            }
            ops.extend(fresh.into_iter().map(HOp::AddVertex));
            for &e in removals {
                ops.push(HOp::DeleteHyperedge(e, torso.verts(e).to_vec()));
            }
            for (e, vs) in additions {
                ops.push(HOp::AddHyperedge(*e, vs.clone()));
            }
        }
        let mut touched: BTreeSet<VertexId> = BTreeSet::new();
        for op in &ops {
            if let HOp::DeleteHyperedge(_, vs) = op {
                touched.extend(vs.iter().copied());
            }
        }
        if is_root {
            for op in &ops {
                match op {
                    HOp::AddVertex(v) => self.record_root_vertex(*v),
                    HOp::DeleteHyperedge(e, _) | HOp::AddHyperedge(e, _) => self.record_root_edge(*e),
                    HOp::DeleteVertex(_) => {}
                }
            }
            for &v in &touched {
                self.record_root_vertex(v);
            }
        }
        let node = self.nodes.get_mut(&t).unwrap();
        for op in &ops {
            op.apply(&mut node.torso).expect("torso edit");
        }
        let mut size: usize = ops.iter().map(HOp::size).sum();
        for v in touched {
            if node.torso.has_vertex(v) && node.torso.degree(v) == 0 {
                node.torso.delete_vertex(v).unwrap();
                size += 1;
                ops.push(HOp::DeleteVertex(v));
            }
        }
        if is_root {
            self.diff.raw.extend(ops);
        }
        size
    }

    /// Contracts the edge between `p` and its internal child `t`.
    pub fn contract(&mut self, p: NodeId, t: NodeId) -> Result<(), SbError> {
        let tn = self.nodes.get(&t).ok_or(SbError::MissingNode(t))?;
        if tn.parent != Some(p) {
            return Err(SbError::NotChild { parent: p, child: t });
        }
        if tn.is_leaf() {
            return Err(SbError::IsLeaf(t));
        }
        let cost = self.alpha * tn.torso.size();
        let kids = tn.children.clone();
        self.phi_out(p);
        self.phi_out(t);
        let additions: Vec<(EdgeId, Vec<VertexId>)> = kids.iter().map(|&c| (c, self.nodes[&c].adh.clone())).collect();
        self.torso_edit(p, &[t], &additions);
        self.detach(t);
        for &c in &kids {
            self.detach(c);
            self.attach(c, p);
        }
        self.nodes.remove(&t);
        self.phi_in(p);
        self.fix_heights(p);
        self.log.rotations.push((Rotation::Contract { parent: p, child: t }, cost));
        self.log.involved.insert(p);
        self.log.involved.insert(t);
        Ok(())
    }

    /// Moves the children `c` of `t` under a fresh node and returns it.
    pub fn split(&mut self, t: NodeId, c: &[NodeId]) -> Result<NodeId, SbError> {
        let tn = self.nodes.get(&t).ok_or(SbError::MissingNode(t))?;
        if tn.is_leaf() {
            return Err(SbError::IsLeaf(t));
        }
        for &x in c {
            if self.nodes.get(&x).and_then(|n| n.parent) != Some(t) {
                return Err(SbError::NotChild { parent: t, child: x });
            }
        }
        let complement = tn.children.len() - c.len() + usize::from(tn.parent.is_some());
        if c.len() < 2 || complement < 2 {
            return Err(SbError::SplitSize { node: t });
        }
        let (vc, bd) = tn.torso.boundary(c)?;
        if bd.len() > self.alpha {
            return Err(SbError::AdhesionTooLarge { size: bd.len(), alpha: self.alpha });
        }
        let y = self.fresh_id();
        let mut yn = Node::new(None);
        for &v in &vc {
            yn.torso.add_vertex(v).unwrap();
        }
        for &x in c {
            yn.torso.add_hyperedge_with_id(x, &self.nodes[&x].adh).unwrap();
            yn.count += self.nodes[&x].count;
        }
        yn.torso.add_hyperedge_with_id(PARENT_LABEL, &bd).unwrap();
        yn.adh = bd.clone();
        self.nodes.insert(y, yn);
        self.phi_out(t);
        self.torso_edit(t, c, &[(y, bd)]);
        for &x in c {
            self.detach(x);
            self.attach(x, y);
        }
        self.attach(y, t);
        self.phi_in(t);
        self.phi_in(y);
        self.recompute_height(y);
        self.fix_heights(t);
        self.log.rotations.push((
            Rotation::Split { node: t, new_node: y, moved: c.to_vec() },
            self.alpha * c.len(),
        ));
        self.log.involved.insert(t);
        self.log.involved.insert(y);
        Ok(y)
    }

    fn leaf_adhesion(&self, e: EdgeId) -> Vec<VertexId> {
        self.g.verts(e).iter().copied().filter(|&v| self.g.degree(v) >= 2).collect()
    }

    fn add_count_on_path(&mut self, t: NodeId, delta: isize) -> usize {
        let mut cur = Some(t);
        let mut steps = 0;
        while let Some(a) = cur {
            self.phi_out(a);
            let n = self.nodes.get_mut(&a).unwrap();
            n.count = (n.count as isize + delta) as usize;
            cur = n.parent;
            self.phi_in(a);
            steps += 1;
        }
        steps
    }

    /// Inserts a hyperedge on `verts` as a new leaf child of `t`. Vertices not yet
    /// in the hypergraph are created; the others must occur in leaves of `x`.
    pub fn insert_leaf(&mut self, t: NodeId, x: &[NodeId], verts: &[VertexId]) -> Result<(NodeId, EdgeId), SbError> {
        let tn = self.nodes.get(&t).ok_or(SbError::MissingNode(t))?;
        if tn.is_leaf() {
            return Err(SbError::IsLeaf(t));
        }
        let mut covered = BTreeSet::new();
        for &xi in x {
            let n = self.nodes.get(&xi).ok_or(SbError::MissingNode(xi))?;
            if n.parent != Some(t) || !n.is_leaf() {
                return Err(SbError::NotChild { parent: t, child: xi });
            }
            covered.extend(self.g.verts(n.leaf.unwrap()).iter().copied());
        }
        for &v in verts {
            if self.g.has_vertex(v) && !covered.contains(&v) {
                return Err(SbError::LeafPrecondition(t));
            }
        }
        for &v in verts {
            if !self.g.has_vertex(v) {
                self.g.add_vertex(v)?;
            }
        }
        let e = self.g.add_hyperedge(verts)?;
        let l = self.fresh_id();
        let mut ln = Node::new(None);
        ln.leaf = Some(e);
        ln.count = 1;
        ln.adh = self.leaf_adhesion(e);
        self.nodes.insert(l, ln);
        self.leaf_of.insert(e, l);
        let mut removals = Vec::new();
        let mut additions = Vec::new();
        for &xi in x {
            let fresh = self.leaf_adhesion(self.nodes[&xi].leaf.unwrap());
            if fresh != self.nodes[&xi].adh {
                removals.push(xi);
                additions.push((xi, fresh.clone()));
                self.nodes.get_mut(&xi).unwrap().adh = fresh;
                self.log.involved.insert(xi);
            }
        }
        additions.push((l, self.nodes[&l].adh.clone()));
        self.phi_out(t);
        self.attach(l, t);
        self.phi_in(t);
        self.torso_edit(t, &removals, &additions);
        let anc = self.add_count_on_path(t, 1);
        self.fix_heights(t);
        let cost = (x.len() * self.alpha + 1) * verts.len() + anc;
        self.log.rotations.push((Rotation::InsertLeaf { node: t, leaf: l, edge: e, x: x.to_vec() }, cost));
        self.log.involved.insert(t);
        self.log.involved.insert(l);
        Ok((l, e))
    }

    /// Removes leaf `l` and its hyperedge; vertices left without incidences are
    /// removed from the hypergraph as well.
    pub fn delete_leaf(&mut self, l: NodeId) -> Result<EdgeId, SbError> {
        let ln = self.nodes.get(&l).ok_or(SbError::MissingNode(l))?;
        let e = ln.leaf.ok_or(SbError::LeafPrecondition(l))?;
        let t = ln.parent.ok_or(SbError::IsRoot(l))?;
        if t != self.root && self.nodes[&t].children.len() < 3 {
            return Err(SbError::LeafPrecondition(t));
        }
        let verts = self.g.verts(e).to_vec();
        let mut siblings = BTreeSet::new();
        for &v in &verts {
            if self.g.degree(v) < 2 {
                continue;
            }
            let mut found = false;
            for f in self.g.incident(v) {
                if f == e {
                    continue;
                }
                let s = self.leaf_of[&f];
                if self.nodes[&s].parent == Some(t) {
                    siblings.insert(s);
                    found = true;
                }
            }
            if !found {
                return Err(SbError::LeafPrecondition(t));
            }
        }
        self.g.delete_hyperedge(e)?;
        for &v in &verts {
            if self.g.degree(v) == 0 {
                self.g.delete_vertex(v)?;
            }
        }
        let mut removals = vec![l];
        let mut additions = Vec::new();
        for s in siblings {
            let fresh = self.leaf_adhesion(self.nodes[&s].leaf.unwrap());
            if fresh != self.nodes[&s].adh {
                removals.push(s);
                additions.push((s, fresh.clone()));
                self.nodes.get_mut(&s).unwrap().adh = fresh;
                self.log.involved.insert(s);
            }
        }
        self.torso_edit(t, &removals, &additions);
        self.phi_out(t);
        self.detach(l);
        self.nodes.remove(&l);
        self.leaf_of.remove(&e);
        self.phi_in(t);
        let anc = self.add_count_on_path(t, -1);
        self.fix_heights(t);
        let cost = self.alpha * self.alpha + anc;
        self.log.rotations.push((Rotation::DeleteLeaf { node: t, leaf: l, edge: e }, cost));
        self.log.involved.insert(t);
        self.log.involved.insert(l);
        Ok(e)
    }

    /// Raw root-torso operations recorded since the last `take_root_change`.
    pub fn root_raw_ops(&self) -> &[HOp] {
        &self.diff.raw
    }

    /// Net change of torso(r) since the last call: hyperedge deletions, vertex
    /// deletions, vertex insertions, hyperedge insertions. Root children listed in
    /// `dirty` are reported as deleted and re-inserted even if their hyperedge did
    /// not change.
    pub fn take_root_change(&mut self, dirty: &BTreeSet<NodeId>) -> OperationSeq {
        let diff = std::mem::take(&mut self.diff);
        let torso = &self.nodes[&self.root].torso;
        let mut dels = Vec::new();
        let mut adds = Vec::new();
        for (&label, pre) in &diff.edges {
            let post = torso.edge_vertices(label).ok().map(|v| v.to_vec());
            match (pre, post) {
                (Some(a), Some(b)) => {
                    if *a != b || dirty.contains(&label) {
                        dels.push(HOp::DeleteHyperedge(label, a.clone()));
                        adds.push(HOp::AddHyperedge(label, b));
                    }
                }
                (Some(a), None) => dels.push(HOp::DeleteHyperedge(label, a.clone())),
                (None, Some(b)) => adds.push(HOp::AddHyperedge(label, b)),
                (None, None) => {}
            }
        }
        for &d in dirty {
            if diff.edges.contains_key(&d) {
                continue;
            }
            if let Ok(vs) = torso.edge_vertices(d) {
                dels.push(HOp::DeleteHyperedge(d, vs.to_vec()));
                adds.push(HOp::AddHyperedge(d, vs.to_vec()));
            }
        }
        let mut vdel = Vec::new();
        let mut vadd = Vec::new();
        for (&v, &pre) in &diff.verts {
            let post = torso.has_vertex(v);
            if pre && !post {
                vdel.push(HOp::DeleteVertex(v));
            } else if !pre && post {
                vadd.push(HOp::AddVertex(v));
            }
        }
        let mut seq = OperationSeq::new();
        seq.ops.extend(dels);
        seq.ops.extend(vdel);
        seq.ops.extend(vadd);
        seq.ops.extend(adds);
        seq
    }

    /// Compares every maintained quantity with a from-scratch recomputation.
    pub fn check_structure(&self) -> Result<(), String> {
        let root = &self.nodes[&self.root];
        if root.parent.is_some() || root.leaf.is_some() {
            return Err("malformed root".into());
        }
        let mut leaves_seen = 0;
        for id in self.node_ids() {
            let n = &self.nodes[&id];
            for (i, &c) in n.children.iter().enumerate() {
                let cn = self.nodes.get(&c).ok_or(format!("node {id} lists missing child {c}"))?;
                if cn.parent != Some(id) || cn.pos != i {
                    return Err(format!("child {c} of {id} has stale parent or position"));
                }
            }
            if let Some(p) = n.parent {
                if !self.nodes[&p].children.contains(&id) {
                    return Err(format!("node {id} missing from children of {p}"));
                }
            }
            match n.leaf {
                Some(e) => {
                    leaves_seen += 1;
                    if !n.children.is_empty() || self.leaf_of.get(&e) != Some(&id) || !self.g.has_edge(e) {
                        return Err(format!("leaf {id} inconsistent"));
                    }
                    if n.count != 1 {
                        return Err(format!("leaf {id} has count {}", n.count));
                    }
                }
                None => {
                    if id != self.root && n.children.len() < 2 {
                        return Err(format!("internal node {id} has {} children", n.children.len()));
                    }
                    let count: usize = n.children.iter().map(|c| self.nodes[c].count).sum();
                    if count != n.count {
                        return Err(format!("node {id} count {} but recomputed {count}", n.count));
                    }
                    let h = 1 + n.children.iter().map(|c| self.nodes[c].height).max().unwrap_or(0);
                    if id != self.root && h != n.height {
                        return Err(format!("node {id} height {} but recomputed {h}", n.height));
                    }
                    let mut expect = Hypergraph::new();
                    let mut labels: Vec<(EdgeId, &[VertexId])> =
                        n.children.iter().map(|c| (*c, self.nodes[c].adh.as_slice())).collect();
                    if n.parent.is_some() {
                        labels.push((PARENT_LABEL, n.adh.as_slice()));
                    }
                    for (_, vs) in &labels {
                        for &v in *vs {
                            if !expect.has_vertex(v) {
                                expect.add_vertex(v).unwrap();
                            }
                        }
                    }
                    for (l, vs) in labels {
                        expect.add_hyperedge_with_id(l, vs).unwrap();
                    }
                    if expect != n.torso {
                        return Err(format!("torso of node {id} differs from recomputation"));
                    }
                    n.torso.check_consistency().map_err(|m| format!("torso {id}: {m}"))?;
                }
            }
            if n.adh.len() > self.alpha {
                return Err(format!("adhesion of node {id} has size {}", n.adh.len()));
            }
        }
        if leaves_seen != self.g.num_edges() || self.leaf_of.len() != self.g.num_edges() {
            return Err("leaf bijection broken".into());
        }
        self.check_adhesions()?;
        let phi = self.potential_recomputed();
        if (phi - self.phi).abs() > 1e-6 * (1.0 + phi.abs()) {
            return Err(format!("potential {} but recomputed {phi}", self.phi));
        }
        self.g.check_consistency()
    }

    fn check_adhesions(&self) -> Result<(), String> {
        let mut sets: HashMap<NodeId, Vec<EdgeId>> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(self.nodes[&x].children.iter().copied());
        }
        for &x in order.iter().rev() {
            let n = &self.nodes[&x];
            let mut s: Vec<EdgeId> = n.leaf.into_iter().collect();
            for c in &n.children {
                s.extend(sets.remove(c).unwrap());
            }
            if x != self.root {
                let bd = self.g.bd(&s);
                if bd != n.adh {
                    return Err(format!("adhesion of node {x} is {:?} but bd(L[t]) = {bd:?}", n.adh));
                }
            }
            sets.insert(x, s);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Star decomposition of H(path on n vertices) built through root insertions.
    fn path_star(n: u64) -> Superbranch {
        let mut sb = Superbranch::new(8);
        let r = sb.root();
        let mut single = Vec::new();
        for v in 0..n {
            let (l, _) = sb.insert_leaf(r, &[], &[v]).unwrap();
            single.push(l);
        }
        for v in 1..n {
            let x = [single[v as usize - 1], single[v as usize]];
            sb.insert_leaf(r, &x, &[v - 1, v]).unwrap();
        }
        sb
    }

    #[test]
    fn star_potential() {
        let sb = path_star(4);
        let m = 7.0f64;
        assert!((sb.phi() - (m - 1.0) * m.log2()).abs() < 1e-9);
        sb.check_structure().unwrap();
        assert_eq!(sb.torso(sb.root()).num_edges(), 7);
    }

    #[test]
    fn isolated_vertex_leaf_has_rank_zero_hyperedge() {
        let mut sb = Superbranch::new(4);
        let r = sb.root();
        let (l, _) = sb.insert_leaf(r, &[], &[9]).unwrap();
        assert!(sb.adh(l).is_empty());
        assert_eq!(sb.torso(r).verts(l).len(), 0);
        sb.delete_leaf(l).unwrap();
        assert_eq!(sb.torso(r).num_edges(), 0);
        sb.check_structure().unwrap();
    }

    #[test]
    fn split_contract_roundtrip() {
        let mut sb = path_star(5);
        let r = sb.root();
        let kids: Vec<NodeId> = sb.children(r).to_vec();
        let group: Vec<NodeId> = kids.iter().copied().filter(|&c| sb.node(c).leaf.map_or(false, |e| sb.hypergraph().verts(e).iter().all(|&v| v <= 1))).collect();
        assert_eq!(group.len(), 3);
        let before = sb.torso(r).clone();
        let y = sb.split(r, &group).unwrap();
        assert_eq!(sb.adh(y), &[1]);
        sb.check_structure().unwrap();
        let leaves = sb.leaf_set(y);
        assert_eq!(sb.hypergraph().bd(&leaves), sb.adh(y).to_vec());
        sb.contract(r, y).unwrap();
        sb.check_structure().unwrap();
        let back = sb.torso(r).clone();
        assert_eq!(back.num_edges(), before.num_edges());
        assert_eq!(back.vertices().collect::<Vec<_>>(), before.vertices().collect::<Vec<_>>());
        back.check_consistency().unwrap();
    }

    #[test]
    fn split_size_errors() {
        let mut sb = path_star(2);
        let r = sb.root();
        let kids = sb.children(r).to_vec();
        assert_eq!(sb.split(r, &kids[..1]), Err(SbError::SplitSize { node: r }));
        assert_eq!(sb.split(r, &kids[..2]), Err(SbError::SplitSize { node: r }));
        let mut sb = path_star(3);
        let kids = sb.children(r).to_vec();
        assert!(sb.split(r, &kids[..2]).is_ok());
        sb.check_structure().unwrap();
    }

    #[test]
    fn root_change_replays() {
        let mut sb = path_star(4);
        let pre = sb.torso(sb.root()).clone();
        sb.take_root_change(&BTreeSet::new());
        let r = sb.root();
        let kids = sb.children(r).to_vec();
        let y = sb.split(r, &kids[..3]).unwrap();
        let kids2: Vec<NodeId> = sb.children(y).to_vec();
        let z = sb.split(y, &kids2[..2]).unwrap();
        sb.contract(y, z).unwrap();
        sb.contract(r, y).unwrap();
        let kids = sb.children(r).to_vec();
        sb.split(r, &kids[2..5]).unwrap();
        let mut raw = pre.clone();
        for op in sb.root_raw_ops() {
            op.apply(&mut raw).unwrap();
        }
        assert_eq!(raw, *sb.torso(r));
        let net = sb.take_root_change(&BTreeSet::new());
        let mut replay = pre.clone();
        net.replay(&mut replay).unwrap();
        assert_eq!(replay, *sb.torso(r));
        sb.check_structure().unwrap();
    }

    #[test]
    fn delete_leaf_keeps_other_adhesions() {
        let mut sb = path_star(4);
        let r = sb.root();
        let e12 = sb.hypergraph().edges().find(|&e| sb.hypergraph().verts(e) == [1, 2]).unwrap();
        let l = sb.leaf_node(e12).unwrap();
        sb.delete_leaf(l).unwrap();
        sb.check_structure().unwrap();
        assert_eq!(sb.count(r), 6);
    }
}
