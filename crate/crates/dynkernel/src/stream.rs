//! Update-stream protocol, instance generators and bench aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ChangeReport, Engine, EngineError};
use crate::graph::Graph;
use crate::hypergraph::VertexId;
use crate::planarity::is_planar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Update {
    AddVertex(VertexId),
    DeleteVertex(VertexId),
    AddEdge(VertexId, VertexId),
    DeleteEdge(VertexId, VertexId),
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Update::AddVertex(v) => write!(f, "av {v}"),
            Update::DeleteVertex(v) => write!(f, "dv {v}"),
            Update::AddEdge(u, v) => write!(f, "ae {u} {v}"),
            Update::DeleteEdge(u, v) => write!(f, "de {u} {v}"),
        }
    }
}

impl Update {
    pub fn op_name(&self) -> &'static str {
        match self {
            Update::AddVertex(_) => "av",
            Update::DeleteVertex(_) => "dv",
            Update::AddEdge(..) => "ae",
            Update::DeleteEdge(..) => "de",
        }
    }

    pub fn apply(&self, engine: &mut Engine) -> Result<ChangeReport, EngineError> {
        match *self {
            Update::AddVertex(v) => engine.add_vertex(v),
            Update::DeleteVertex(v) => engine.delete_vertex(v),
            Update::AddEdge(u, v) => engine.add_edge(u, v),
            Update::DeleteEdge(u, v) => engine.delete_edge(u, v),
        }
    }

    /// Applies the update to a plain graph; false if it does not apply.
    pub fn apply_graph(&self, g: &mut Graph) -> bool {
        match *self {
            Update::AddVertex(v) => g.add_vertex(v),
            Update::DeleteVertex(v) => g.degree(v) == 0 && g.remove_vertex(v),
            Update::AddEdge(u, v) => u != v && g.has_vertex(u) && g.has_vertex(v) && g.add_edge(u, v),
            Update::DeleteEdge(u, v) => g.remove_edge(u, v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

/// Parses the line protocol; returns each update with its line number.
pub fn parse_stream(text: &str) -> Result<Vec<(usize, Update)>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        let err = |msg: &str| ParseError { line, msg: msg.to_string() };
        let num = |s: &str| s.parse::<VertexId>().map_err(|_| err(&format!("bad vertex id '{s}'")));
        let u = match (f[0], f.len()) {
            ("av", 2) => Update::AddVertex(num(f[1])?),
            ("dv", 2) => Update::DeleteVertex(num(f[1])?),
            ("ae", 3) => Update::AddEdge(num(f[1])?, num(f[2])?),
            ("de", 3) => Update::DeleteEdge(num(f[1])?, num(f[2])?),
            ("av" | "dv" | "ae" | "de", _) => return Err(err("wrong number of arguments")),
            (op, _) => return Err(err(&format!("unknown operation '{op}'"))),
        };
        out.push((line, u));
    }
    Ok(out)
}

pub fn format_stream(updates: &[Update]) -> String {
    let mut s = String::new();
    for u in updates {
        s.push_str(&u.to_string());
        s.push('\n');
    }
    s
}

/// Replays a stream on a plain graph, returning the first inapplicable update.
pub fn replay_graph(updates: &[Update]) -> Result<Graph, usize> {
    let mut g = Graph::new();
    for (i, u) in updates.iter().enumerate() {
        if !u.apply_graph(&mut g) {
            return Err(i);
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// generators

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Grid,
    RandomPlanarIncremental,
    BoundedDegreeTreePlus,
    MixedInsertDelete,
}

impl GenKind {
    pub const ALL: [GenKind; 4] =
        [GenKind::Grid, GenKind::RandomPlanarIncremental, GenKind::BoundedDegreeTreePlus, GenKind::MixedInsertDelete];

    pub fn name(self) -> &'static str {
        match self {
            GenKind::Grid => "grid",
            GenKind::RandomPlanarIncremental => "random-planar-incremental",
            GenKind::BoundedDegreeTreePlus => "bounded-degree-tree-plus",
            GenKind::MixedInsertDelete => "mixed-insert-delete",
        }
    }

    pub fn parse(s: &str) -> Option<GenKind> {
        GenKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Deterministic stream of the given kind with about `n` vertices.
pub fn generate(kind: GenKind, n: usize, seed: u64) -> Vec<Update> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GenKind::Grid => grid(n),
        GenKind::RandomPlanarIncremental => planar_incremental(n, &mut rng),
        GenKind::BoundedDegreeTreePlus => tree_plus(n, &mut rng),
        GenKind::MixedInsertDelete => mixed(n, &mut rng),
    }
}

/// The w×h grid with w = ⌊√n⌋ and h = ⌊n/w⌋.
fn grid(n: usize) -> Vec<Update> {
    let w = (n as f64).sqrt().floor().max(1.0) as u64;
    let h = (n as u64 / w).max(1);
    let mut out: Vec<Update> = (0..w * h).map(Update::AddVertex).collect();
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                out.push(Update::AddEdge(v, v + 1));
            }
            if r + 1 < h {
                out.push(Update::AddEdge(v, v + w));
            }
        }
    }
    out
}

/// Candidate partner for a new edge at `u`: mostly a vertex at distance two,
/// sometimes any vertex.
fn partner(g: &Graph, verts: &[VertexId], u: VertexId, rng: &mut ChaCha8Rng) -> Option<VertexId> {
    if rng.gen_bool(0.8) {
        let nb: Vec<VertexId> = g.neighbors(u).collect();
        let &a = nb.choose(rng)?;
        let nb2: Vec<VertexId> = g.neighbors(a).filter(|&b| b != u && !g.has_edge(u, b)).collect();
        nb2.choose(rng).copied()
    } else {
        verts.choose(rng).copied().filter(|&b| b != u && !g.has_edge(u, b))
    }
}

fn planar_incremental(n: usize, rng: &mut ChaCha8Rng) -> Vec<Update> {
    let mut out = Vec::new();
    let mut g = Graph::new();
    let mut verts: Vec<VertexId> = Vec::new();
    for v in 0..n as u64 {
        out.push(Update::AddVertex(v));
        g.add_vertex(v);
        if let Some(&u) = verts.choose(rng) {
            g.add_edge(u, v);
            out.push(Update::AddEdge(u, v));
        }
        verts.push(v);
        for _ in 0..2 {
            let &a = verts.choose(rng).unwrap();
            let Some(b) = partner(&g, &verts, a, rng) else { continue };
            g.add_edge(a, b);
            if is_planar(&g) {
                out.push(Update::AddEdge(a, b));
            } else {
                g.remove_edge(a, b);
            }
        }
    }
    out
}

fn tree_plus(n: usize, rng: &mut ChaCha8Rng) -> Vec<Update> {
    let mut out = Vec::new();
    let mut g = Graph::new();
    let mut open: Vec<VertexId> = Vec::new();
    for v in 0..n as u64 {
        out.push(Update::AddVertex(v));
        g.add_vertex(v);
        if !open.is_empty() {
            let i = rng.gen_range(0..open.len());
            let u = open[i];
            g.add_edge(u, v);
            out.push(Update::AddEdge(u, v));
            if g.degree(u) >= 3 {
                open.swap_remove(i);
            }
        }
        open.push(v);
        // a few short chords, keeping the maximum degree at most 4
        if v > 0 && rng.gen_bool(0.15) {
            let u = rng.gen_range(0..v);
            let cands: Vec<VertexId> = g
                .neighbors(u)
                .flat_map(|a| g.neighbors(a).collect::<Vec<_>>())
                .filter(|&b| b != u && !g.has_edge(u, b) && g.degree(b) < 4)
                .collect();
            if g.degree(u) < 4 {
                if let Some(&b) = cands.choose(rng) {
                    g.add_edge(u, b);
                    out.push(Update::AddEdge(u, b));
                }
            }
        }
    }
    out
}

/// Planar-constrained insertions interleaved with deletions of live edges and
/// of isolated vertices; about `n` vertices are alive at the end.
fn mixed(n: usize, rng: &mut ChaCha8Rng) -> Vec<Update> {
    let mut out = Vec::new();
    let mut g = Graph::new();
    let mut next: VertexId = 0;
    let steps = 4 * n.max(1);
    for _ in 0..steps {
        let verts: Vec<VertexId> = g.vertices().collect();
        let roll: f64 = rng.gen();
        if verts.len() < 2 || (roll < 0.3 && verts.len() < n) {
            g.add_vertex(next);
            out.push(Update::AddVertex(next));
            next += 1;
        } else if roll < 0.7 {
            let &a = verts.choose(rng).unwrap();
            let b = partner(&g, &verts, a, rng).or_else(|| verts.choose(rng).copied().filter(|&b| b != a && !g.has_edge(a, b)));
            let Some(b) = b else { continue };
            g.add_edge(a, b);
            if is_planar(&g) {
                out.push(Update::AddEdge(a, b));
            } else {
                g.remove_edge(a, b);
            }
        } else if roll < 0.93 {
            let edges: Vec<(VertexId, VertexId)> = g.edges().collect();
            if let Some(&(a, b)) = edges.choose(rng) {
                g.remove_edge(a, b);
                out.push(Update::DeleteEdge(a, b));
            }
        } else {
            let iso: Vec<VertexId> = verts.iter().copied().filter(|&v| g.degree(v) == 0).collect();
            if let Some(&v) = iso.choose(rng) {
                g.remove_vertex(v);
                out.push(Update::DeleteVertex(v));
            }
        }
    }
    out
}

/// Checks that the stream is valid and every prefix graph is planar.
pub fn validate_planar_stream(updates: &[Update]) -> Result<(), String> {
    let mut g = Graph::new();
    for (i, u) in updates.iter().enumerate() {
        if !u.apply_graph(&mut g) {
            return Err(format!("update {i} ({u}) does not apply"));
        }
        if matches!(u, Update::AddEdge(..)) && !is_planar(&g) {
            return Err(format!("update {i} ({u}) makes the graph non-planar"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench aggregation

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub log2n: u32,
    pub updates: usize,
    pub avg_work: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub buckets: Vec<Bucket>,
    /// Least-squares fit of average work against log2 n over the buckets.
    pub slope: f64,
    pub intercept: f64,
}

/// Buckets (n, work) samples by ⌊log2 n⌋ and fits work against log2 n.
pub fn aggregate(samples: &[(usize, usize)]) -> BenchReport {
    let mut acc: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for &(n, w) in samples {
        let b = (n.max(1) as f64).log2().floor() as u32;
        let e = acc.entry(b).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += w as f64;
    }
    let buckets: Vec<Bucket> =
        acc.into_iter().map(|(log2n, (c, s))| Bucket { log2n, updates: c, avg_work: s / c as f64 }).collect();
    let k = buckets.len() as f64;
    let (slope, intercept) = if buckets.len() < 2 {
        (0.0, buckets.first().map_or(0.0, |b| b.avg_work))
    } else {
        let mx = buckets.iter().map(|b| b.log2n as f64).sum::<f64>() / k;
        let my = buckets.iter().map(|b| b.avg_work).sum::<f64>() / k;
        let sxx: f64 = buckets.iter().map(|b| (b.log2n as f64 - mx).powi(2)).sum();
        let sxy: f64 = buckets.iter().map(|b| (b.log2n as f64 - mx) * (b.avg_work - my)).sum();
        let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (s, my - s * mx)
    };
    BenchReport { buckets, slope, intercept }
}

impl BenchReport {
    /// Whitespace-separated table: log2n, updates, avg_work.
    pub fn to_table(&self) -> String {
        let mut s = String::from("log2n updates avg_work\n");
        for b in &self.buckets {
            s.push_str(&format!("{} {} {:.3}\n", b.log2n, b.updates, b.avg_work));
        }
        s.push_str(&format!("# slope {:.4} intercept {:.4}\n", self.slope, self.intercept));
        s
    }
}

/// Runs a stream and returns (n after the update, work) per update.
pub fn run_collect(engine: &mut Engine, updates: &[Update]) -> Result<Vec<(usize, usize)>, (usize, EngineError)> {
    let mut out = Vec::with_capacity(updates.len());
    for (i, u) in updates.iter().enumerate() {
        let rep = u.apply(engine).map_err(|e| (i, e))?;
        out.push((engine.graph().num_vertices(), rep.work));
    }
    Ok(out)
}

/// Distinct vertices mentioned by a stream.
pub fn vertex_count(updates: &[Update]) -> usize {
    let mut s = BTreeSet::new();
    for u in updates {
        if let Update::AddVertex(v) = u {
            s.insert(*v);
        }
    }
    s.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_roundtrip_and_errors() {
        let text = "# header\nav 1\nav 2 # trailing\nae 1 2\n\nde 1 2\ndv 2\n";
        let ups = parse_stream(text).unwrap();
        assert_eq!(ups.len(), 5);
        assert_eq!(ups[0], (2, Update::AddVertex(1)));
        let again = parse_stream(&format_stream(&ups.iter().map(|p| p.1).collect::<Vec<_>>())).unwrap();
        assert_eq!(again.len(), 5);
        assert_eq!(parse_stream("av 1\nxx 3\n").unwrap_err().line, 2);
        assert_eq!(parse_stream("ae 1\n").unwrap_err().line, 1);
    }

    #[test]
    fn grid_counts_and_determinism() {
        let g = generate(GenKind::Grid, 9, 0);
        assert_eq!(g.iter().filter(|u| matches!(u, Update::AddVertex(_))).count(), 9);
        assert_eq!(g.iter().filter(|u| matches!(u, Update::AddEdge(..))).count(), 12);
        for k in GenKind::ALL {
            assert_eq!(format_stream(&generate(k, 60, 5)), format_stream(&generate(k, 60, 5)));
            assert!(replay_graph(&generate(k, 60, 5)).is_ok(), "{}", k.name());
        }
    }

    #[test]
    fn planar_generators_stay_planar() {
        validate_planar_stream(&generate(GenKind::RandomPlanarIncremental, 80, 2)).unwrap();
        validate_planar_stream(&generate(GenKind::MixedInsertDelete, 60, 3)).unwrap();
    }

    #[test]
    fn buckets() {
        let r = aggregate(&[(3, 10), (3, 20), (17, 7)]);
        assert_eq!(r.buckets.len(), 2);
        assert_eq!(r.buckets[0].avg_work, 15.0);
        assert_eq!(aggregate(&[(5, 1), (6, 3)]).buckets.len(), 1);
    }
}
