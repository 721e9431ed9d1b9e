//! The dynamic data structure: a downwards well-linked superbranch
//! decomposition of H(G) with controlled root degree, its protrusion
//! decomposition, the chip index over torso(r) and an optional kernel.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::automata::{itw_decide_forms, GEdge, ItwForm};
use crate::balancing::{decompose, enforce_depth_law, isolate, BalanceConfig, BalanceError};
use crate::chips::{ChipIndex, ChipParams};
use crate::graph::Graph;
use crate::hypergraph::{EdgeId, HOp, OperationSeq, VertexId};
use crate::kernelplug::{default_store, replacement, ChildPart, KOp, Kernel, Plugin, Problem, RepresentativeStore};
use crate::protrusion::ProtrusionDecomp;
use crate::superbranch::{NodeId, SbError, Superbranch};
use crate::welllinked::{is_well_linked, partition_well_linked};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vertex {0} already exists")]
    VertexExists(VertexId),
    #[error("vertex {0} does not exist")]
    MissingVertex(VertexId),
    #[error("vertex {0} still has incident edges")]
    NonIsolatedVertex(VertexId),
    #[error("edge {0}-{1} already exists")]
    EdgeExists(VertexId, VertexId),
    #[error("edge {0}-{1} does not exist")]
    MissingEdge(VertexId, VertexId),
    #[error("self-loop at {0}")]
    SelfLoop(VertexId),
    #[error("density tripwire: {m} edges on {n} vertices exceeds ratio {ratio}")]
    DensityExceeded { m: usize, n: usize, ratio: f64 },
    #[error("merge precondition violated: {0}")]
    MergePrecondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// The engine state is not usable after this error.
    #[error("root change of size {size} exceeds the ceiling {limit}")]
    ChangeCeiling { size: usize, limit: usize },
}

impl From<SbError> for EngineError {
    fn from(e: SbError) -> Self {
        EngineError::Invariant(e.to_string())
    }
}

impl From<BalanceError> for EngineError {
    fn from(e: BalanceError) -> Self {
        EngineError::Invariant(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Adhesion bound α, also the semigood parameter c.
    pub alpha: usize,
    /// Internal treewidth bound for chips.
    pub omega: i32,
    pub s1: usize,
    pub s2: usize,
    pub k: usize,
    /// κ̂: the merge budget per update is ζ + 2κ̂.
    pub kappa_hat: usize,
    pub paranoid: bool,
    pub plugin: Option<Problem>,
    /// Replaces the default representative store.
    pub store: Option<Arc<RepresentativeStore>>,
    /// Maximum |E|/|V| accepted.
    pub density: f64,
    /// Ceiling on |𝒞| per phase.
    pub max_change: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let omega = 2;
        EngineConfig {
            alpha: 15,
            omega,
            s1: 1 << (omega + 2),
            s2: 64,
            k: 2,
            kappa_hat: 2,
            paranoid: false,
            plugin: None,
            store: None,
            density: 6.0,
            max_change: 1 << 20,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.alpha < 3 {
            return bad("alpha (c) must be at least 3");
        }
        if self.s1 < 2 || self.s2 < self.s1 {
            return bad("need 2 <= s1 <= s2");
        }
        if self.omega < 0 || self.k < self.omega as usize {
            return bad("need k >= omega >= 0");
        }
        if self.k > self.alpha {
            return bad("k must not exceed alpha");
        }
        if !(self.density > 0.0) {
            return bad("density must be positive");
        }
        Ok(())
    }
}

/// Snapshot of a root child as last reported through 𝒞.
#[derive(Debug, Clone, PartialEq)]
struct RootEntry {
    form: ItwForm,
    up: Vec<GEdge>,
    height: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeReport {
    /// Net changes of torso(r), phase by phase.
    pub root_change: OperationSeq,
    /// edges(r) changes: (edge, true) added, (edge, false) removed.
    pub root_edges: Vec<(GEdge, bool)>,
    /// bag(r) changes.
    pub root_bag: Vec<(VertexId, bool)>,
    pub kernel: Vec<KOp>,
    pub merges: usize,
    pub budget_exhausted: bool,
    pub work: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Metrics {
    pub schema: u32,
    pub idx: usize,
    pub op: String,
    pub n: usize,
    pub m: usize,
    pub root_degree: usize,
    pub bag_root: usize,
    pub max_depth: u32,
    pub phi: f64,
    pub work: usize,
    pub merges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreplaced: Option<usize>,
    pub budget_exhausted: bool,
}

pub const METRICS_SCHEMA: u32 = 1;

pub struct Engine {
    cfg: EngineConfig,
    bal: BalanceConfig,
    sb: Superbranch,
    pd: ProtrusionDecomp,
    chips: ChipIndex,
    cache: BTreeMap<NodeId, RootEntry>,
    heights: BTreeMap<u32, usize>,
    kernel: Option<Kernel>,
    store: Option<Arc<RepresentativeStore>>,
    graph: Graph,
    vertex_edge: BTreeMap<VertexId, EdgeId>,
    edge_edge: BTreeMap<GEdge, EdgeId>,
    total_merges: usize,
}

fn norm(u: VertexId, v: VertexId) -> GEdge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Engine, EngineError> {
        cfg.validate()?;
        let bal = BalanceConfig::new(cfg.alpha).map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        let params = ChipParams::new(cfg.s1, cfg.s2, cfg.k, cfg.alpha).map_err(EngineError::InvalidConfig)?;
        let plugin = cfg.plugin.map(Plugin::new);
        let store = cfg.plugin.map(|p| {
            cfg.store.clone().filter(|s| s.problem == p).unwrap_or_else(|| Arc::new(default_store(p).clone()))
        });
        Ok(Engine {
            sb: Superbranch::new(cfg.alpha),
            pd: ProtrusionDecomp::new(cfg.omega, plugin),
            chips: ChipIndex::new(params),
            cache: BTreeMap::new(),
            heights: BTreeMap::new(),
            kernel: plugin.map(|_| Kernel::new()),
            store,
            graph: Graph::new(),
            vertex_edge: BTreeMap::new(),
            edge_edge: BTreeMap::new(),
            total_merges: 0,
            bal,
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn balance_config(&self) -> &BalanceConfig {
        &self.bal
    }

    pub fn superbranch(&self) -> &Superbranch {
        &self.sb
    }

    pub fn protrusion(&self) -> &ProtrusionDecomp {
        &self.pd
    }

    pub fn chips(&self) -> &ChipIndex {
        &self.chips
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn store(&self) -> Option<&RepresentativeStore> {
        self.store.as_deref()
    }

    pub fn root_degree(&self) -> usize {
        self.sb.children(self.sb.root()).len()
    }

    pub fn total_merges(&self) -> usize {
        self.total_merges
    }

    /// Maximum height over root-child subtrees.
    pub fn max_depth(&self) -> u32 {
        self.heights.keys().next_back().copied().unwrap_or(0)
    }

    pub fn vertex_hyperedge(&self, v: VertexId) -> Option<EdgeId> {
        self.vertex_edge.get(&v).copied()
    }

    pub fn edge_hyperedge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edge_edge.get(&norm(u, v)).copied()
    }

    pub fn metrics(&self, idx: usize, op: &str, report: &ChangeReport) -> Metrics {
        Metrics {
            schema: METRICS_SCHEMA,
            idx,
            op: op.to_string(),
            n: self.graph.num_vertices(),
            m: self.graph.num_edges(),
            root_degree: self.root_degree(),
            bag_root: self.sb.torso(self.sb.root()).num_vertices(),
            max_depth: self.max_depth(),
            phi: self.sb.phi(),
            work: report.work,
            merges: report.merges,
            kernel_size: self.kernel.as_ref().map(|k| k.num_vertices() + k.num_edges()),
            delta: self.kernel.as_ref().map(|k| k.delta()),
            unreplaced: self.kernel.as_ref().map(|k| k.unreplaced()),
            budget_exhausted: report.budget_exhausted,
        }
    }

    // -----------------------------------------------------------------------
    // updates

    pub fn add_vertex(&mut self, v: VertexId) -> Result<ChangeReport, EngineError> {
        if self.graph.has_vertex(v) {
            return Err(EngineError::VertexExists(v));
        }
        let before = self.root_degree();
        let mut rep = ChangeReport::default();
        let r = self.sb.root();
        let (_, e) = self.sb.insert_leaf(r, &[], &[v])?;
        self.graph.add_vertex(v);
        self.vertex_edge.insert(v, e);
        self.phase(&mut rep)?;
        self.finish(before, &mut rep)?;
        Ok(rep)
    }

    pub fn delete_vertex(&mut self, v: VertexId) -> Result<ChangeReport, EngineError> {
        if !self.graph.has_vertex(v) {
            return Err(EngineError::MissingVertex(v));
        }
        if self.graph.degree(v) > 0 {
            return Err(EngineError::NonIsolatedVertex(v));
        }
        let before = self.root_degree();
        let mut rep = ChangeReport::default();
        let e = self.vertex_edge[&v];
        isolate(&mut self.sb, &[e], &self.bal)?;
        self.phase(&mut rep)?;
        let l = self.sb.leaf_node(e).ok_or_else(|| EngineError::Invariant("missing leaf".into()))?;
        self.sb.delete_leaf(l)?;
        self.graph.remove_vertex(v);
        self.vertex_edge.remove(&v);
        self.phase(&mut rep)?;
        self.finish(before, &mut rep)?;
        Ok(rep)
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<ChangeReport, EngineError> {
        if u == v {
            return Err(EngineError::SelfLoop(u));
        }
        for x in [u, v] {
            if !self.graph.has_vertex(x) {
                return Err(EngineError::MissingVertex(x));
            }
        }
        if self.graph.has_edge(u, v) {
            return Err(EngineError::EdgeExists(u, v));
        }
        let n = self.graph.num_vertices();
        let m = self.graph.num_edges() + 1;
        if m as f64 > self.cfg.density * n as f64 {
            return Err(EngineError::DensityExceeded { m, n, ratio: self.cfg.density });
        }
        let before = self.root_degree();
        let mut rep = ChangeReport::default();
        let (eu, ev) = (self.vertex_edge[&u], self.vertex_edge[&v]);
        isolate(&mut self.sb, &[eu, ev], &self.bal)?;
        self.phase(&mut rep)?;
        let lu = self.sb.leaf_node(eu).unwrap();
        let lv = self.sb.leaf_node(ev).unwrap();
        let r = self.sb.root();
        let (a, b) = norm(u, v);
        let (_, e) = self.sb.insert_leaf(r, &[lu, lv], &[a, b])?;
        self.graph.add_edge(u, v);
        self.edge_edge.insert((a, b), e);
        self.phase(&mut rep)?;
        self.finish(before, &mut rep)?;
        Ok(rep)
    }

    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<ChangeReport, EngineError> {
        let key = norm(u, v);
        let Some(&e) = self.edge_edge.get(&key) else {
            return Err(EngineError::MissingEdge(u, v));
        };
        let before = self.root_degree();
        let mut rep = ChangeReport::default();
        let (eu, ev) = (self.vertex_edge[&u], self.vertex_edge[&v]);
        isolate(&mut self.sb, &[eu, ev, e], &self.bal)?;
        self.phase(&mut rep)?;
        let l = self.sb.leaf_node(e).unwrap();
        self.sb.delete_leaf(l)?;
        self.graph.remove_edge(u, v);
        self.edge_edge.remove(&key);
        self.phase(&mut rep)?;
        self.finish(before, &mut rep)?;
        Ok(rep)
    }

    /// Groups the root children `a` under a fresh child and rebalances it.
    pub fn merge(&mut self, a: &[NodeId]) -> Result<ChangeReport, EngineError> {
        let mut rep = ChangeReport::default();
        self.merge_inner(a, &mut rep)?;
        if self.cfg.paranoid {
            self.check_invariants()?;
        }
        Ok(rep)
    }

    fn merge_inner(&mut self, a: &[NodeId], rep: &mut ChangeReport) -> Result<(), EngineError> {
        let r = self.sb.root();
        let deg = self.root_degree();
        let set: BTreeSet<NodeId> = a.iter().copied().collect();
        if set.len() != a.len() || a.iter().any(|&c| self.sb.parent(c) != Some(r)) {
            return Err(EngineError::MergePrecondition("not a set of root children".into()));
        }
        if a.len() < 2 || deg - a.len() < 2 || a.len() as u64 > self.bal.max_degree() {
            return Err(EngineError::MergePrecondition(format!("|A| = {} with root degree {deg}", a.len())));
        }
        if self.cfg.paranoid && !is_well_linked(self.sb.torso(r), a) {
            return Err(EngineError::MergePrecondition("B_A is not well-linked".into()));
        }
        let mut sorted = a.to_vec();
        sorted.sort_unstable();
        let y = self.sb.split(r, &sorted)?;
        if self.sb.children(y).len() > self.bal.flat_limit {
            decompose(&mut self.sb, y, &self.bal)?;
        }
        enforce_depth_law(&mut self.sb, &[y], &self.bal)?;
        self.phase(rep)?;
        rep.merges += 1;
        self.total_merges += 1;
        Ok(())
    }

    /// Repeatedly queries the chip index and merges a well-linked part of the
    /// answer until no answer remains or the budget ζ + 2κ̂ is spent.
    fn reduce_root_degree(&mut self, before: usize, rep: &mut ChangeReport) -> Result<(), EngineError> {
        let zeta = self.root_degree().saturating_sub(before);
        let budget = zeta + 2 * self.cfg.kappa_hat;
        let mut done = 0;
        loop {
            let Some(b) = self.chips.query() else { break };
            if done >= budget {
                rep.budget_exhausted = true;
                break;
            }
            let deg = self.root_degree();
            let r = self.sb.root();
            let parts = partition_well_linked(self.sb.torso(r), &b);
            let best = parts
                .into_iter()
                .filter(|p| p.len() >= 2 && deg - p.len() >= 2 && p.len() as u64 <= self.bal.max_degree())
                .max_by_key(|p| (p.len(), std::cmp::Reverse(p.clone())));
            let Some(part) = best else { break };
            self.merge_inner(&part, rep)?;
            done += 1;
        }
        Ok(())
    }

    fn finish(&mut self, before: usize, rep: &mut ChangeReport) -> Result<(), EngineError> {
        self.reduce_root_degree(before, rep)?;
        if self.cfg.paranoid {
            self.check_invariants()?;
        }
        Ok(())
    }

    /// Synchronizes the protrusion decomposition with the rotations since the
    /// last phase and feeds the resulting 𝒞 to the root cache, the chip index
    /// and the kernel.
    fn phase(&mut self, rep: &mut ChangeReport) -> Result<(), EngineError> {
        let log = self.sb.take_log();
        let dirty = self.pd.sync(&self.sb, &log);
        let r = self.sb.root();
        let mut touched: BTreeSet<NodeId> = BTreeSet::new();
        let mut trace = 0usize;
        for &t in &log.involved {
            if self.sb.contains(t) && t != r {
                trace += self.sb.depth(t);
                touched.extend(self.sb.root_child_of(t));
            }
        }
        let seq = self.sb.take_root_change(&dirty);
        if seq.size() > self.cfg.max_change {
            return Err(EngineError::ChangeCeiling { size: seq.size(), limit: self.cfg.max_change });
        }
        self.apply_change(&seq, rep)?;
        for c in touched {
            let h = self.sb.height(c);
            if let Some(entry) = self.cache.get_mut(&c) {
                if entry.height != h {
                    let old = entry.height;
                    entry.height = h;
                    dec(&mut self.heights, old);
                    *self.heights.entry(h).or_insert(0) += 1;
                }
            }
        }
        rep.work += log.size() + trace + self.chips.take_steps() + self.pd.take_recomputed() + seq.size();
        rep.root_change.ops.extend(seq.ops);
        Ok(())
    }

    fn child_part(&self, c: NodeId) -> ChildPart {
        let adh = self.sb.adh(c);
        if let Some(store) = &self.store {
            if let Some(st) = self.pd.child_table(&self.sb, c) {
                if let Some(p) = replacement(store, adh, &st) {
                    return p;
                }
            }
        }
        let h = self.sb.hypergraph();
        let up: BTreeSet<GEdge> = self.pd.get(c).map(|d| d.up.iter().copied().collect()).unwrap_or_default();
        let mut verts = BTreeSet::new();
        let mut edges = Vec::new();
        for e in self.sb.leaf_set(c) {
            let vs = h.verts(e);
            verts.extend(vs.iter().copied());
            if let [a, b] = vs {
                if !up.contains(&(*a, *b)) {
                    edges.push((*a, *b));
                }
            }
        }
        let interior = verts.into_iter().filter(|v| adh.binary_search(v).is_err()).collect();
        edges.sort_unstable();
        ChildPart::Verbatim { interior, edges }
    }

    fn apply_change(&mut self, seq: &OperationSeq, rep: &mut ChangeReport) -> Result<(), EngineError> {
        let omega = self.pd.omega();
        for op in &seq.ops {
            match op {
                HOp::DeleteHyperedge(c, _) => {
                    {
                        let cache = &self.cache;
                        let oracle = |z: &[EdgeId], bd: &[VertexId]| oracle_check(cache, omega, z, bd);
                        self.chips.on_delete_hyperedge(*c, &oracle).map_err(|e| EngineError::Invariant(e.to_string()))?;
                    }
                    let entry = self.cache.remove(c).ok_or_else(|| EngineError::Invariant(format!("root child {c} not cached")))?;
                    dec(&mut self.heights, entry.height);
                    rep.root_edges.extend(entry.up.iter().map(|&e| (e, false)));
                    if let Some(k) = &mut self.kernel {
                        k.remove_child(*c, &entry.up, &mut rep.kernel);
                    }
                }
                HOp::DeleteVertex(v) => {
                    self.chips.on_delete_vertex(*v).map_err(|e| EngineError::Invariant(e.to_string()))?;
                    rep.root_bag.push((*v, false));
                    if let Some(k) = &mut self.kernel {
                        k.remove_root_vertex(*v, &mut rep.kernel);
                    }
                }
                HOp::AddVertex(v) => {
                    self.chips.on_add_vertex(*v).map_err(|e| EngineError::Invariant(e.to_string()))?;
                    rep.root_bag.push((*v, true));
                    if let Some(k) = &mut self.kernel {
                        k.add_root_vertex(*v, &mut rep.kernel);
                    }
                }
                HOp::AddHyperedge(c, vs) => {
                    let d = self.pd.get(*c).ok_or_else(|| EngineError::Invariant(format!("no data for root child {c}")))?;
                    let entry = RootEntry { form: d.form.clone(), up: d.up.clone(), height: self.sb.height(*c) };
                    *self.heights.entry(entry.height).or_insert(0) += 1;
                    rep.root_edges.extend(entry.up.iter().map(|&e| (e, true)));
                    let part = self.kernel.as_ref().map(|_| self.child_part(*c));
                    if let (Some(k), Some(part)) = (&mut self.kernel, part) {
                        k.add_child(*c, &part, &entry.up, &mut rep.kernel);
                    }
                    self.cache.insert(*c, entry);
                    let cache = &self.cache;
                    let oracle = |z: &[EdgeId], bd: &[VertexId]| oracle_check(cache, omega, z, bd);
                    self.chips.on_add_hyperedge(*c, vs, &oracle).map_err(|e| EngineError::Invariant(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // checks

    /// The chip oracle on the current root children: itw(Z) ≤ ω.
    pub fn oracle(&self, z: &[EdgeId], bd: &[VertexId]) -> bool {
        oracle_check(&self.cache, self.pd.omega(), z, bd)
    }

    /// Fresh kernel assembly from the current decomposition.
    pub fn assemble_kernel(&self) -> Option<Kernel> {
        self.kernel.as_ref()?;
        let mut k = Kernel::new();
        let mut sink = Vec::new();
        let r = self.sb.root();
        let mut bag: Vec<VertexId> = self.sb.torso(r).vertices().collect();
        bag.sort_unstable();
        for v in bag {
            k.add_root_vertex(v, &mut sink);
        }
        let mut kids = self.sb.children(r).to_vec();
        kids.sort_unstable();
        for c in kids {
            let up = self.pd.get(c).map(|d| d.up.clone()).unwrap_or_default();
            k.add_child(c, &self.child_part(c), &up, &mut sink);
        }
        Some(k)
    }

    /// Cheap consistency checks of everything maintained incrementally.
    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let inv = |m: String| EngineError::Invariant(m);
        self.sb.check_structure().map_err(inv)?;
        self.pd.check_against(&self.sb).map_err(|m| inv(format!("protrusion: {m}")))?;
        let r = self.sb.root();
        let torso = self.sb.torso(r);
        let ch = self.chips.hypergraph();
        if torso.to_text() != ch.to_text() {
            return Err(inv("chip index hypergraph differs from torso(r)".into()));
        }
        self.chips.check_index().map_err(|m| inv(format!("chips: {m}")))?;
        let kids: BTreeSet<NodeId> = self.sb.children(r).iter().copied().collect();
        if kids.len() != self.cache.len() || kids.iter().any(|c| !self.cache.contains_key(c)) {
            return Err(inv("root cache out of sync".into()));
        }
        let mut heights: BTreeMap<u32, usize> = BTreeMap::new();
        for (&c, entry) in &self.cache {
            let d = self.pd.get(c).unwrap();
            if d.form != entry.form || d.up != entry.up || self.sb.height(c) != entry.height {
                return Err(inv(format!("root cache entry {c} is stale")));
            }
            *heights.entry(entry.height).or_insert(0) += 1;
        }
        if heights != self.heights {
            return Err(inv("height multiset out of sync".into()));
        }
        if let (Some(k), Some(fresh)) = (&self.kernel, self.assemble_kernel()) {
            if k.delta() != fresh.delta()
                || k.summary() != fresh.summary()
                || k.num_vertices() != fresh.num_vertices()
                || k.num_edges() != fresh.num_edges()
            {
                return Err(inv("kernel differs from a fresh assembly".into()));
            }
        }
        Ok(())
    }
}

fn dec(m: &mut BTreeMap<u32, usize>, h: u32) {
    if let Some(c) = m.get_mut(&h) {
        *c -= 1;
        if *c == 0 {
            m.remove(&h);
        }
    }
}

fn oracle_check(cache: &BTreeMap<NodeId, RootEntry>, omega: i32, z: &[EdgeId], bd: &[VertexId]) -> bool {
    let mut forms = Vec::with_capacity(z.len());
    for c in z {
        match cache.get(c) {
            Some(e) => forms.push(&e.form),
            None => return false,
        }
    }
    itw_decide_forms(&forms, bd, omega)
}
