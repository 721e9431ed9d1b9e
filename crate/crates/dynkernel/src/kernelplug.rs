//! Vertex Cover and Dominating Set as table-valued tree decomposition
//! automata, representative synthesis, and kernel bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::automata::{GEdge, TdAutomaton};
use crate::graph::Graph;
use crate::hypergraph::VertexId;
use crate::superbranch::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("labels must be distinct and at least 1")]
    BadLabels,
    #[error("label sets differ")]
    LabelMismatch,
    #[error("graph with {size} vertices exceeds the limit {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
    #[error("enumeration needs {needed} graphs, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("store file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

// ---------------------------------------------------------------------------
// boundaried graphs

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundariedGraph {
    pub graph: Graph,
    /// Boundary vertex → label ≥ 1.
    pub labels: BTreeMap<VertexId, u32>,
}

impl BoundariedGraph {
    pub fn new(graph: Graph, labels: BTreeMap<VertexId, u32>) -> Result<BoundariedGraph, KernelError> {
        let distinct: BTreeSet<u32> = labels.values().copied().collect();
        if distinct.len() != labels.len() || distinct.contains(&0) || labels.keys().any(|v| !graph.has_vertex(*v)) {
            return Err(KernelError::BadLabels);
        }
        Ok(BoundariedGraph { graph, labels })
    }

    /// The unique in-order labeling: the i-th smallest boundary vertex gets label i.
    pub fn in_order(graph: Graph, boundary: &[VertexId]) -> BoundariedGraph {
        let mut b = boundary.to_vec();
        b.sort_unstable();
        let labels = b.iter().enumerate().map(|(i, &v)| (v, i as u32 + 1)).collect();
        BoundariedGraph { graph, labels }
    }

    pub fn label_set(&self) -> BTreeSet<u32> {
        self.labels.values().copied().collect()
    }

    /// Boundary vertices ordered by label.
    pub fn boundary(&self) -> Vec<VertexId> {
        let mut b: Vec<(u32, VertexId)> = self.labels.iter().map(|(&v, &l)| (l, v)).collect();
        b.sort_unstable();
        b.into_iter().map(|(_, v)| v).collect()
    }

    pub fn is_t_boundaried(&self, t: u32) -> bool {
        self.labels.values().all(|&l| l <= t)
    }

    fn by_label(&self) -> BTreeMap<u32, VertexId> {
        self.labels.iter().map(|(&v, &l)| (l, v)).collect()
    }
}

/// Disjoint union identifying equally labeled boundary vertices. Vertices of
/// `x` keep their ids, the others of `y` are shifted above them.
fn glue_raw(x: &BoundariedGraph, y: &BoundariedGraph) -> (Graph, BTreeMap<VertexId, VertexId>) {
    let mut g = x.graph.clone();
    let offset = x.graph.vertices().max().map_or(0, |m| m + 1);
    let xl = x.by_label();
    let mut map = BTreeMap::new();
    for v in y.graph.vertices() {
        let target = y.labels.get(&v).and_then(|l| xl.get(l)).copied().unwrap_or(v + offset);
        map.insert(v, target);
        g.add_vertex(target);
    }
    for (a, b) in y.graph.edges() {
        g.add_edge(map[&a], map[&b]);
    }
    (g, map)
}

pub fn glue_u(x: &BoundariedGraph, y: &BoundariedGraph) -> Graph {
    glue_raw(x, y).0
}

pub fn glue_b(x: &BoundariedGraph, y: &BoundariedGraph) -> Result<BoundariedGraph, KernelError> {
    if x.label_set() != y.label_set() {
        return Err(KernelError::LabelMismatch);
    }
    let (g, _) = glue_raw(x, y);
    Ok(BoundariedGraph { graph: g, labels: x.labels.clone() })
}

// ---------------------------------------------------------------------------
// tables

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Problem {
    VertexCover,
    DominatingSet,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::VertexCover => "vc",
            Problem::DominatingSet => "ds",
        }
    }

    pub fn parse(s: &str) -> Option<Problem> {
        match s {
            "vc" => Some(Problem::VertexCover),
            "ds" => Some(Problem::DominatingSet),
            _ => None,
        }
    }

    /// Number of states per boundary vertex: VC out/in, DS black/white/grey.
    pub fn base(self) -> usize {
        match self {
            Problem::VertexCover => 2,
            Problem::DominatingSet => 3,
        }
    }
}

pub const VC_OUT: usize = 0;
pub const VC_IN: usize = 1;
pub const DS_BLACK: usize = 0;
pub const DS_WHITE: usize = 1;
pub const DS_GREY: usize = 2;

/// Entry of a normalized table for infeasible boundary states.
pub const INF: u32 = u32::MAX;
const AINF: u64 = u64::MAX;

/// Normalized table (minimum finite entry 0) plus the subtracted shift. Index
/// digit i (mixed radix, least significant first) is the state of the i-th
/// boundary vertex in label order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableState {
    pub costs: Vec<u32>,
    pub shift: u64,
}

fn pow(b: usize, n: usize) -> usize {
    b.pow(n as u32)
}

fn digit(idx: usize, b: usize, i: usize) -> usize {
    idx / pow(b, i) % b
}

fn add(a: u64, b: u64) -> u64 {
    if a == AINF || b == AINF {
        AINF
    } else {
        a + b
    }
}

pub fn normalize(abs: &[u64]) -> TableState {
    let m = abs.iter().copied().filter(|&c| c != AINF).min();
    match m {
        None => TableState { costs: vec![INF; abs.len()], shift: 0 },
        Some(m) => TableState {
            costs: abs.iter().map(|&c| if c == AINF { INF } else { (c - m) as u32 }).collect(),
            shift: m,
        },
    }
}

pub fn absolute(st: &TableState) -> Vec<u64> {
    st.costs.iter().map(|&c| if c == INF { AINF } else { c as u64 + st.shift }).collect()
}

fn fresh_cost(p: Problem, d: usize) -> u64 {
    match (p, d) {
        (Problem::VertexCover, VC_IN) => 1,
        (Problem::VertexCover, _) => 0,
        (Problem::DominatingSet, DS_BLACK) => 1,
        (Problem::DominatingSet, DS_WHITE) => AINF,
        (Problem::DominatingSet, _) => 0,
    }
}

/// Table of the edgeless graph on `n` boundary vertices.
pub fn fresh_table(p: Problem, n: usize) -> Vec<u64> {
    let b = p.base();
    (0..pow(b, n)).map(|idx| (0..n).fold(0, |acc, i| add(acc, fresh_cost(p, digit(idx, b, i))))).collect()
}

/// Adds the edge between bag positions iu and iv.
pub fn table_add_edge(p: Problem, abs: &mut [u64], n: usize, iu: usize, iv: usize) {
    let b = p.base();
    match p {
        Problem::VertexCover => {
            for (idx, c) in abs.iter_mut().enumerate() {
                if digit(idx, b, iu) == VC_OUT && digit(idx, b, iv) == VC_OUT {
                    *c = AINF;
                }
            }
        }
        Problem::DominatingSet => {
            for (x, y) in [(iu, iv), (iv, iu)] {
                let px = pow(b, x);
                for idx in 0..pow(b, n) {
                    if digit(idx, b, x) == DS_WHITE && digit(idx, b, y) == DS_BLACK {
                        let src = idx + px;
                        abs[idx] = abs[idx].min(abs[src]);
                    }
                }
            }
        }
    }
}

/// Minimizes out the vertices of `bag` missing from `keep` (a sub-list).
pub fn table_forget(p: Problem, abs: &[u64], bag: &[VertexId], keep: &[VertexId]) -> Vec<u64> {
    let b = p.base();
    let map: Vec<Option<usize>> = bag.iter().map(|v| keep.binary_search(v).ok()).collect();
    let mut out = vec![AINF; pow(b, keep.len())];
    for (idx, &c) in abs.iter().enumerate() {
        if c == AINF {
            continue;
        }
        let mut t = 0;
        let mut ok = true;
        for (i, m) in map.iter().enumerate() {
            let d = digit(idx, b, i);
            match m {
                Some(j) => t += d * pow(b, *j),
                None => {
                    if p == Problem::DominatingSet && d == DS_GREY {
                        ok = false;
                    }
                }
            }
        }
        if ok && c < out[t] {
            out[t] = c;
        }
    }
    out
}

/// Introduces the vertices of `big` missing from `bag` as fresh isolated vertices.
pub fn table_extend(p: Problem, abs: &[u64], bag: &[VertexId], big: &[VertexId]) -> Vec<u64> {
    let b = p.base();
    let map: Vec<Option<usize>> = big.iter().map(|v| bag.binary_search(v).ok()).collect();
    (0..pow(b, big.len()))
        .map(|idx| {
            let mut src = 0;
            let mut extra = 0;
            for (i, m) in map.iter().enumerate() {
                let d = digit(idx, b, i);
                match m {
                    Some(j) => src += d * pow(b, *j),
                    None => extra = add(extra, fresh_cost(p, d)),
                }
            }
            add(abs[src], extra)
        })
        .collect()
}

/// Tables of two graphs sharing exactly the bag; shared vertices in the
/// solution are counted once.
pub fn table_join(p: Problem, x: &[u64], y: &[u64], n: usize) -> Vec<u64> {
    let b = p.base();
    let mut out = vec![AINF; x.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut ones = 0u64;
        let mut whites = Vec::new();
        let mut base_idx = idx;
        for i in 0..n {
            let d = digit(idx, b, i);
            match (p, d) {
                (Problem::VertexCover, VC_IN) | (Problem::DominatingSet, DS_BLACK) => ones += 1,
                (Problem::DominatingSet, DS_WHITE) => {
                    whites.push(pow(b, i));
                    base_idx -= pow(b, i);
                }
                _ => {}
            }
        }
        if p == Problem::DominatingSet {
            ones = (0..n).filter(|&i| digit(idx, b, i) == DS_BLACK).count() as u64;
        }
        let mut best = AINF;
        for mask in 0..(1usize << whites.len()) {
            let mut i1 = base_idx;
            let mut i2 = base_idx;
            for (k, &pw) in whites.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    i1 += DS_WHITE * pw;
                    i2 += DS_GREY * pw;
                } else {
                    i1 += DS_GREY * pw;
                    i2 += DS_WHITE * pw;
                }
            }
            let s = add(x[i1], y[i2]);
            if s != AINF {
                best = best.min(s - ones);
            }
        }
        *o = best;
    }
    out
}

pub const BRUTE_LIMIT: usize = 22;

/// Brute-force table of G with boundary `boundary` (in this order) over all
/// vertex subsets.
pub fn table_of_graph(p: Problem, g: &Graph, boundary: &[VertexId]) -> Result<Vec<u64>, KernelError> {
    let n = g.num_vertices();
    if n > BRUTE_LIMIT {
        return Err(KernelError::SizeLimitExceeded { size: n, limit: BRUTE_LIMIT });
    }
    let mut order: Vec<VertexId> = boundary.to_vec();
    let bset: BTreeSet<VertexId> = boundary.iter().copied().collect();
    order.extend(g.vertices().filter(|v| !bset.contains(v)));
    let pos: BTreeMap<VertexId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj: Vec<u32> = order.iter().map(|&v| g.neighbors(v).fold(0u32, |m, u| m | 1 << pos[&u])).collect();
    Ok(table_small(p, n, boundary.len(), &adj))
}

/// Table of a graph on 0..n with boundary 0..t, adjacency as bitmasks.
pub fn table_small(p: Problem, n: usize, t: usize, adj: &[u32]) -> Vec<u64> {
    let b = p.base();
    let mut abs = vec![AINF; pow(b, t)];
    let all: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let interior: u32 = all & !((1u32 << t) - 1);
    for s in 0..=all {
        let cost = s.count_ones() as u64;
        match p {
            Problem::VertexCover => {
                let covered = (0..n).all(|v| s >> v & 1 == 1 || adj[v] & !s == 0);
                if !covered {
                    continue;
                }
                let idx = (0..t).map(|i| ((s >> i & 1) as usize) * pow(b, i)).sum::<usize>();
                abs[idx] = abs[idx].min(cost);
            }
            Problem::DominatingSet => {
                let mut dom = s;
                for v in 0..n {
                    if s >> v & 1 == 1 {
                        dom |= adj[v];
                    }
                }
                if dom & interior != interior {
                    continue;
                }
                let idx: usize = (0..t)
                    .map(|i| {
                        let d = if s >> i & 1 == 1 {
                            DS_BLACK
                        } else if dom >> i & 1 == 1 {
                            DS_WHITE
                        } else {
                            DS_GREY
                        };
                        d * pow(b, i)
                    })
                    .sum();
                abs[idx] = abs[idx].min(cost);
            }
        }
        if s == all {
            break;
        }
    }
    if p == Problem::DominatingSet {
        for i in 0..t {
            let pw = pow(b, i);
            for idx in 0..abs.len() {
                if digit(idx, b, i) == DS_WHITE {
                    abs[idx + pw] = abs[idx + pw].min(abs[idx]);
                }
            }
        }
    }
    abs
}

/// Reference table of a boundaried graph, boundary in label order.
pub fn table_of(p: Problem, g: &BoundariedGraph) -> Result<Vec<u64>, KernelError> {
    table_of_graph(p, &g.graph, &g.boundary())
}

/// A problem plugin run as a tree decomposition automaton over table states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plugin {
    pub problem: Problem,
    pub max_bag: usize,
}

impl Plugin {
    pub fn new(problem: Problem) -> Plugin {
        let max_bag = match problem {
            Problem::VertexCover => 12,
            Problem::DominatingSet => 8,
        };
        Plugin { problem, max_bag }
    }

    fn lift(&self, bag_x: &[VertexId], bag_y: &[VertexId], q: &TableState) -> Vec<u64> {
        let abs = absolute(q);
        let keep: Vec<VertexId> = bag_y.iter().copied().filter(|v| bag_x.binary_search(v).is_ok()).collect();
        let f = table_forget(self.problem, &abs, bag_y, &keep);
        table_extend(self.problem, &f, &keep, bag_x)
    }
}

impl TdAutomaton for Plugin {
    type State = TableState;

    fn width(&self) -> usize {
        self.max_bag - 1
    }

    fn initial(&self, bag: &[VertexId], edges: &[GEdge]) -> Option<TableState> {
        if bag.len() > self.max_bag {
            return None;
        }
        let mut abs = fresh_table(self.problem, bag.len());
        for &(u, v) in edges {
            let iu = bag.binary_search(&u).ok()?;
            let iv = bag.binary_search(&v).ok()?;
            table_add_edge(self.problem, &mut abs, bag.len(), iu, iv);
        }
        Some(normalize(&abs))
    }

    fn transition(
        &self,
        bag_x: &[VertexId],
        y: (&[VertexId], &TableState),
        z: Option<(&[VertexId], &TableState)>,
        edges_x: &[GEdge],
    ) -> Option<TableState> {
        if bag_x.len() > self.max_bag {
            return None;
        }
        let mut abs = self.lift(bag_x, y.0, y.1);
        if let Some((bz, qz)) = z {
            let other = self.lift(bag_x, bz, qz);
            abs = table_join(self.problem, &abs, &other, bag_x.len());
        }
        for &(u, v) in edges_x {
            let iu = bag_x.binary_search(&u).ok()?;
            let iv = bag_x.binary_search(&v).ok()?;
            table_add_edge(self.problem, &mut abs, bag_x.len(), iu, iv);
        }
        Some(normalize(&abs))
    }
}

// ---------------------------------------------------------------------------
// representatives

/// A boundaried graph on 0..n whose boundary 0..t carries labels 1..t, with the
/// shift of its own table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representative {
    pub n: usize,
    pub t: usize,
    pub edges: Vec<(u32, u32)>,
    pub offset: u64,
}

impl Representative {
    pub fn graph(&self) -> Graph {
        let mut g = Graph::from_edges(self.n as u64, &[]);
        for &(a, b) in &self.edges {
            g.add_edge(a as u64, b as u64);
        }
        g
    }

    pub fn boundaried(&self) -> BoundariedGraph {
        let b: Vec<VertexId> = (0..self.t as u64).collect();
        BoundariedGraph::in_order(self.graph(), &b)
    }

    fn rank(&self) -> (u64, usize, &Vec<(u32, u32)>) {
        (self.offset, self.n, &self.edges)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentativeStore {
    pub problem: Problem,
    pub t_max: usize,
    pub n_max: usize,
    pub reps: BTreeMap<(usize, Vec<u32>), Representative>,
}

fn pairs(n: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            out.push((a, b));
        }
    }
    out
}

/// Number of edge sets examined for the given bounds.
pub fn synthesis_size(t_max: usize, n_max: usize) -> u64 {
    let mut total = 0u64;
    for t in 0..=t_max {
        for n in t..=n_max {
            total = total.saturating_add(1u64.checked_shl(pairs(n).len() as u32).unwrap_or(u64::MAX));
        }
    }
    total
}

fn candidates_for(p: Problem, t: usize, n: usize) -> Vec<((usize, Vec<u32>), Representative)> {
    let ps = pairs(n);
    let total: u64 = 1u64 << ps.len();
    let mut out: BTreeMap<(usize, Vec<u32>), Representative> = BTreeMap::new();
    let tmask: u32 = (1u32 << t) - 1;
    for mask in 0..total {
        let mut adj = vec![0u32; n];
        let mut edges = Vec::new();
        for (k, &(a, b)) in ps.iter().enumerate() {
            if mask >> k & 1 == 1 {
                adj[a as usize] |= 1 << b;
                adj[b as usize] |= 1 << a;
                edges.push((a, b));
            }
        }
        if (t..n).any(|v| adj[v] == 0) {
            continue;
        }
        if (t + 1..n).any(|v| adj[v - 1] & tmask > adj[v] & tmask) {
            continue;
        }
        let st = normalize(&table_small(p, n, t, &adj));
        let rep = Representative { n, t, edges, offset: st.shift };
        let key = (t, st.costs);
        match out.get(&key) {
            Some(old) if old.rank() <= rep.rank() => {}
            _ => {
                out.insert(key, rep);
            }
        }
    }
    out.into_iter().collect()
}

/// Enumerates boundaried graphs with at most `n_max` vertices and `t_max`
/// boundary vertices and keeps, per normalized table, the candidate minimizing
/// (offset, vertex count, edge list).
pub fn synthesize_representatives(p: Problem, t_max: usize, n_max: usize, budget: u64) -> Result<RepresentativeStore, KernelError> {
    synthesize_representatives_with(crate::par::ExecMode::default_mode(), p, t_max, n_max, budget)
}

pub fn synthesize_representatives_with(
    mode: crate::par::ExecMode,
    p: Problem,
    t_max: usize,
    n_max: usize,
    budget: u64,
) -> Result<RepresentativeStore, KernelError> {
    let needed = synthesis_size(t_max, n_max);
    if needed > budget || n_max > 10 || t_max > n_max {
        return Err(KernelError::BudgetExceeded { needed, budget });
    }
    let jobs: Vec<(usize, usize)> = (0..=t_max).flat_map(|t| (t..=n_max).map(move |n| (t, n))).collect();
    let results = crate::par::map_with(mode, &jobs, |&(t, n)| candidates_for(p, t, n));
    let mut reps: BTreeMap<(usize, Vec<u32>), Representative> = BTreeMap::new();
    for list in results {
        for (key, rep) in list {
            match reps.get(&key) {
                Some(old) if old.rank() <= rep.rank() => {}
                _ => {
                    reps.insert(key, rep);
                }
            }
        }
    }
    Ok(RepresentativeStore { problem: p, t_max, n_max, reps })
}

pub const DEFAULT_T_MAX: usize = 3;
pub const DEFAULT_N_MAX: usize = 6;

/// The default store for a problem, synthesized once per process.
pub fn default_store(p: Problem) -> &'static RepresentativeStore {
    static VC: OnceLock<RepresentativeStore> = OnceLock::new();
    static DS: OnceLock<RepresentativeStore> = OnceLock::new();
    let cell = match p {
        Problem::VertexCover => &VC,
        Problem::DominatingSet => &DS,
    };
    cell.get_or_init(|| synthesize_representatives(p, DEFAULT_T_MAX, DEFAULT_N_MAX, u64::MAX).expect("default bounds"))
}

fn fmt_costs(c: &[u32]) -> String {
    c.iter().map(|&x| if x == INF { "inf".to_string() } else { x.to_string() }).collect::<Vec<_>>().join(",")
}

impl RepresentativeStore {
    pub fn get(&self, t: usize, costs: &[u32]) -> Option<&Representative> {
        self.reps.get(&(t, costs.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Largest representative per boundary size.
    pub fn max_sizes(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for ((t, _), r) in &self.reps {
            let e = m.entry(*t).or_insert(0);
            *e = (*e).max(r.n);
        }
        m
    }

    /// Recomputes every stored table; returns the first mismatch.
    pub fn self_check(&self) -> Result<(), String> {
        for ((t, costs), rep) in &self.reps {
            let abs = table_of(self.problem, &rep.boundaried()).map_err(|e| e.to_string())?;
            let st = normalize(&abs);
            if st.costs != *costs || st.shift != rep.offset || rep.t != *t {
                return Err(format!("representative for t={t} table {} does not reproduce its key", fmt_costs(costs)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dynkernel-store v1 {} {} {}\n", self.problem.name(), self.t_max, self.n_max);
        for ((t, costs), rep) in &self.reps {
            let edges: Vec<String> = rep.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            let _ = writeln!(s, "rep {t} {} {} {} {}", rep.n, rep.offset, fmt_costs(costs), if edges.is_empty() { "-".into() } else { edges.join(";") });
        }
        s
    }

    pub fn from_text(text: &str) -> Result<RepresentativeStore, KernelError> {
        let err = |line: usize, msg: &str| KernelError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let h: Vec<&str> = head.split_whitespace().collect();
        if h.len() != 5 || h[0] != "dynkernel-store" || h[1] != "v1" {
            return Err(err(1, "bad header"));
        }
        let problem = Problem::parse(h[2]).ok_or_else(|| err(1, "unknown problem"))?;
        let t_max = h[3].parse().map_err(|_| err(1, "bad t_max"))?;
        let n_max = h[4].parse().map_err(|_| err(1, "bad n_max"))?;
        let mut reps = BTreeMap::new();
        for (i, line) in lines {
            let ln = i + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            if f.len() != 6 || f[0] != "rep" {
                return Err(err(ln, "expected: rep t n offset costs edges"));
            }
            let t: usize = f[1].parse().map_err(|_| err(ln, "bad t"))?;
            let n: usize = f[2].parse().map_err(|_| err(ln, "bad n"))?;
            let offset: u64 = f[3].parse().map_err(|_| err(ln, "bad offset"))?;
            let costs: Vec<u32> = f[4]
                .split(',')
                .map(|c| if c == "inf" { Ok(INF) } else { c.parse().map_err(|_| err(ln, "bad cost")) })
                .collect::<Result<_, _>>()?;
            let edges: Vec<(u32, u32)> = if f[5] == "-" {
                Vec::new()
            } else {
                f[5].split(';')
                    .map(|e| {
                        let (a, b) = e.split_once('-').ok_or_else(|| err(ln, "bad edge"))?;
                        Ok((a.parse().map_err(|_| err(ln, "bad edge"))?, b.parse().map_err(|_| err(ln, "bad edge"))?))
                    })
                    .collect::<Result<_, KernelError>>()?
            };
            reps.insert((t, costs), Representative { n, t, edges, offset });
        }
        Ok(RepresentativeStore { problem, t_max, n_max, reps })
    }
}

// ---------------------------------------------------------------------------
// kernel

/// Lines of the kernel output protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KOp {
    AddVertex(VertexId),
    DeleteVertex(VertexId),
    AddEdge(VertexId, VertexId),
    DeleteEdge(VertexId, VertexId),
    Shift(u64),
}

impl std::fmt::Display for KOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KOp::AddVertex(v) => write!(f, "kv+ {v}"),
            KOp::DeleteVertex(v) => write!(f, "kv- {v}"),
            KOp::AddEdge(u, v) => write!(f, "ke+ {u} {v}"),
            KOp::DeleteEdge(u, v) => write!(f, "ke- {u} {v}"),
            KOp::Shift(d) => write!(f, "kd {d}"),
        }
    }
}

/// What a root child contributes to the kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChildPart {
    /// Stored representative glued on the adhesion (sorted) with shift `delta`.
    Replaced { adh: Vec<VertexId>, rep: Representative, delta: u64 },
    /// The child's own graph: interior vertices and its edges.
    Verbatim { interior: Vec<VertexId>, edges: Vec<GEdge> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Materialized {
    interior: Vec<VertexId>,
    edges: Vec<GEdge>,
    delta: u64,
    replaced: bool,
}

/// Ids of representative interiors start here.
pub const FRESH_BASE: VertexId = 1 << 40;

/// Kernel graph K with shift Δ, maintained child by child.
#[derive(Debug, Clone, Default)]
pub struct Kernel {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<GEdge, u32>,
    delta: u64,
    children: BTreeMap<NodeId, Materialized>,
    next_fresh: VertexId,
}

fn norm_edge(u: VertexId, v: VertexId) -> GEdge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Kernel {
    pub fn new() -> Kernel {
        Kernel { next_fresh: FRESH_BASE, ..Default::default() }
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn unreplaced(&self) -> usize {
        self.children.values().filter(|m| !m.replaced).count()
    }

    pub fn graph(&self) -> Graph {
        let mut g = Graph::new();
        for &v in &self.vertices {
            g.add_vertex(v);
        }
        for &(u, v) in self.edges.keys() {
            g.add_edge(u, v);
        }
        g
    }

    fn add_edge(&mut self, u: VertexId, v: VertexId, out: &mut Vec<KOp>) {
        let e = norm_edge(u, v);
        let c = self.edges.entry(e).or_insert(0);
        *c += 1;
        if *c == 1 {
            out.push(KOp::AddEdge(e.0, e.1));
        }
    }

    fn remove_edge(&mut self, u: VertexId, v: VertexId, out: &mut Vec<KOp>) {
        let e = norm_edge(u, v);
        let c = self.edges.get_mut(&e).expect("kernel edge present");
        *c -= 1;
        if *c == 0 {
            self.edges.remove(&e);
            out.push(KOp::DeleteEdge(e.0, e.1));
        }
    }

    pub fn add_root_vertex(&mut self, v: VertexId, out: &mut Vec<KOp>) {
        if self.vertices.insert(v) {
            out.push(KOp::AddVertex(v));
        }
    }

    pub fn remove_root_vertex(&mut self, v: VertexId, out: &mut Vec<KOp>) {
        if self.vertices.remove(&v) {
            out.push(KOp::DeleteVertex(v));
        }
    }

    /// Adds root child `c` with its edges(r) contribution.
    pub fn add_child(&mut self, c: NodeId, part: &ChildPart, contrib: &[GEdge], out: &mut Vec<KOp>) {
        let m = match part {
            ChildPart::Replaced { adh, rep, delta } => {
                let mut map: Vec<VertexId> = adh.clone();
                let mut interior = Vec::new();
                for _ in rep.t..rep.n {
                    let v = self.next_fresh;
                    self.next_fresh += 1;
                    map.push(v);
                    interior.push(v);
                }
                let edges = rep.edges.iter().map(|&(a, b)| norm_edge(map[a as usize], map[b as usize])).collect();
                Materialized { interior, edges, delta: *delta, replaced: true }
            }
            ChildPart::Verbatim { interior, edges } => {
                Materialized { interior: interior.clone(), edges: edges.clone(), delta: 0, replaced: false }
            }
        };
        for &v in &m.interior {
            self.vertices.insert(v);
            out.push(KOp::AddVertex(v));
        }
        for &(u, v) in m.edges.iter().chain(contrib) {
            self.add_edge(u, v, out);
        }
        if m.delta > 0 {
            self.delta += m.delta;
            out.push(KOp::Shift(self.delta));
        }
        self.children.insert(c, m);
    }

    pub fn remove_child(&mut self, c: NodeId, contrib: &[GEdge], out: &mut Vec<KOp>) {
        let Some(m) = self.children.remove(&c) else { return };
        for &(u, v) in m.edges.iter().chain(contrib) {
            self.remove_edge(u, v, out);
        }
        for &v in &m.interior {
            self.vertices.remove(&v);
            out.push(KOp::DeleteVertex(v));
        }
        if m.delta > 0 {
            self.delta -= m.delta;
            out.push(KOp::Shift(self.delta));
        }
    }

    /// (child, replaced, delta) for comparison with a fresh assembly.
    pub fn summary(&self) -> Vec<(NodeId, bool, u64)> {
        self.children.iter().map(|(&c, m)| (c, m.replaced, m.delta)).collect()
    }
}

/// Decides how root child with table `st` over its sorted adhesion enters the
/// kernel; None means it has to be kept verbatim.
pub fn replacement(store: &RepresentativeStore, adh: &[VertexId], st: &TableState) -> Option<ChildPart> {
    let rep = store.get(adh.len(), &st.costs)?;
    let delta = st.shift.checked_sub(rep.offset)?;
    Some(ChildPart::Replaced { adh: adh.to_vec(), rep: rep.clone(), delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(n: u64, edges: &[(u64, u64)], boundary: &[VertexId]) -> BoundariedGraph {
        BoundariedGraph::in_order(Graph::from_edges(n, edges), boundary)
    }

    #[test]
    fn reference_tables() {
        let vc = table_of(Problem::VertexCover, &bg(2, &[(0, 1)], &[0])).unwrap();
        assert_eq!(vc, vec![1, 1]);
        let iso = table_of(Problem::VertexCover, &bg(1, &[], &[0])).unwrap();
        assert_eq!(iso, vec![0, 1]);
        let ds = table_of(Problem::DominatingSet, &bg(1, &[], &[0])).unwrap();
        assert_eq!(ds, vec![1, AINF, 0]);
    }

    #[test]
    fn glue_examples() {
        let x = bg(2, &[(0, 1)], &[0]);
        let y = bg(2, &[(0, 1)], &[0]);
        let p = glue_u(&x, &y);
        assert_eq!(p.num_vertices(), 3);
        assert_eq!(p.num_edges(), 2);
        let e1 = bg(1, &[], &[]);
        assert_eq!(glue_u(&e1, &e1).num_vertices(), 2);
        assert_eq!(glue_b(&x, &e1), Err(KernelError::LabelMismatch));
    }

    #[test]
    fn dp_matches_brute_force_on_small_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for p in [Problem::VertexCover, Problem::DominatingSet] {
            for _ in 0..40 {
                let n = rng.gen_range(2..7u64);
                let mut g = Graph::from_edges(n, &[]);
                for a in 0..n {
                    for b in a + 1..n {
                        if rng.gen_bool(0.4) {
                            g.add_edge(a, b);
                        }
                    }
                }
                // split into two halves sharing vertex set `sep`
                let sep: Vec<VertexId> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                let all: Vec<VertexId> = (0..n).collect();
                let plugin = Plugin::new(p);
                let edges: Vec<GEdge> = g.edges().collect();
                let (e1, e2): (Vec<GEdge>, Vec<GEdge>) = edges.iter().partition(|_| rng.gen_bool(0.5));
                let q1 = plugin.initial(&all, &e1).unwrap();
                let q2 = plugin.initial(&all, &e2).unwrap();
                let joined = plugin.transition(&all, (&all, &q1), Some((&all, &q2)), &[]).unwrap();
                let top = plugin.transition(&sep, (&all, &joined), None, &[]).unwrap();
                let brute = normalize(&table_of_graph(p, &g, &sep).unwrap());
                assert_eq!(top, brute, "{p:?} n={n} edges={edges:?} sep={sep:?}");
            }
        }
    }

    #[test]
    fn synthesis_self_checks_and_roundtrips() {
        let store = synthesize_representatives(Problem::VertexCover, 1, 3, 1 << 20).unwrap();
        store.self_check().unwrap();
        let zero = store.get(1, &[0, 1]).unwrap();
        assert_eq!((zero.n, zero.offset), (1, 0));
        let text = store.to_text();
        assert_eq!(RepresentativeStore::from_text(&text).unwrap(), store);
        assert!(synthesize_representatives(Problem::DominatingSet, 4, 9, 1000).is_err());
    }
}
