#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use dynkernel::chips::ChipIndex;
use dynkernel::graph::Graph;
use dynkernel::hypergraph::{EdgeId, HOp, Hypergraph, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_graph(rng: &mut impl Rng, n: u64, p: f64) -> Graph {
    let mut g = Graph::from_edges(n, &[]);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Random hypergraph with ranks in 1..=max_rank over vertices 0..nv.
pub fn random_hypergraph(rng: &mut impl Rng, nv: u64, ne: usize, max_rank: usize) -> Hypergraph {
    let mut h = Hypergraph::new();
    for v in 0..nv {
        h.add_vertex(v).unwrap();
    }
    let all: Vec<VertexId> = (0..nv).collect();
    for _ in 0..ne {
        let r = rng.gen_range(1..=max_rank.min(nv as usize));
        let mut vs: Vec<VertexId> = all.choose_multiple(rng, r).copied().collect();
        vs.sort_unstable();
        h.add_hyperedge(&vs).unwrap();
    }
    h
}

pub fn random_subset(rng: &mut impl Rng, edges: &[EdgeId], p: f64) -> Vec<EdgeId> {
    edges.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

pub fn union(a: &[EdgeId], b: &[EdgeId]) -> Vec<EdgeId> {
    let s: BTreeSet<EdgeId> = a.iter().chain(b).copied().collect();
    s.into_iter().collect()
}

pub fn intersection(a: &[EdgeId], b: &[EdgeId]) -> Vec<EdgeId> {
    let s: BTreeSet<EdgeId> = b.iter().copied().collect();
    a.iter().copied().filter(|e| s.contains(e)).collect()
}

pub fn difference(a: &[EdgeId], b: &[EdgeId]) -> Vec<EdgeId> {
    let s: BTreeSet<EdgeId> = b.iter().copied().collect();
    a.iter().copied().filter(|e| !s.contains(e)).collect()
}

fn adjacency_code(n: usize, adj: &[u32], perm: &[usize]) -> u64 {
    let mut code = 0u64;
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if adj[perm[i]] >> perm[j] & 1 == 1 {
                code |= 1 << bit;
            }
            bit += 1;
        }
    }
    code
}

fn canonical(n: usize, adj: &[u32], perms: &[Vec<usize>]) -> u64 {
    perms.iter().map(|p| adjacency_code(n, adj, p)).max().unwrap_or(0)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// One graph per isomorphism class on exactly `n` vertices, as adjacency masks.
pub fn nonisomorphic_graphs(n: usize) -> Vec<Vec<u32>> {
    let mut level: Vec<Vec<u32>> = vec![vec![]];
    for k in 1..=n {
        let perms = permutations(k);
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for g in &level {
            for mask in 0u32..(1 << (k - 1)) {
                let mut adj = g.clone();
                adj.push(mask);
                for (i, a) in adj.iter_mut().enumerate().take(k - 1) {
                    if mask >> i & 1 == 1 {
                        *a |= 1 << (k - 1);
                    }
                }
                if seen.insert(canonical(k, &adj, &perms)) {
                    next.push(adj);
                }
            }
        }
        level = next;
    }
    level
}

pub fn graph_of_masks(adj: &[u32]) -> Graph {
    let n = adj.len();
    let mut g = Graph::from_edges(n as u64, &[]);
    for i in 0..n {
        for j in i + 1..n {
            if adj[i] >> j & 1 == 1 {
                g.add_edge(i as u64, j as u64);
            }
        }
    }
    g
}

/// Boundary vertices 0..t labeled 1..t, followed by `inner` interior vertices.
pub fn random_boundaried(rng: &mut impl Rng, t: usize, inner: usize, p: f64) -> dynkernel::kernelplug::BoundariedGraph {
    let g = random_graph(rng, (t + inner) as u64, p);
    let b: Vec<VertexId> = (0..t as u64).collect();
    dynkernel::kernelplug::BoundariedGraph::in_order(g, &b)
}

/// A random update that keeps at most `max_edges` hyperedges.
pub fn random_op(r: &mut impl Rng, idx: &ChipIndex, next_v: &mut VertexId, next_e: &mut EdgeId, max_edges: usize) -> HOp {
    let h = idx.hypergraph();
    let verts: Vec<VertexId> = h.vertices().collect();
    let edges: Vec<EdgeId> = h.edges().collect();
    loop {
        match r.gen_range(0..10) {
            0 | 1 if verts.len() < 9 => {
                *next_v += 1;
                return HOp::AddVertex(*next_v);
            }
            2 => {
                let iso: Vec<VertexId> = verts.iter().copied().filter(|&v| h.degree(v) == 0).collect();
                if let Some(&v) = iso.choose(r) {
                    return HOp::DeleteVertex(v);
                }
            }
            3..=6 if edges.len() < max_edges && !verts.is_empty() => {
                let k = r.gen_range(1..=3.min(verts.len()));
                let mut vs: Vec<VertexId> = verts.choose_multiple(r, k).copied().collect();
                vs.sort_unstable();
                *next_e += 1;
                return HOp::AddHyperedge(*next_e, vs);
            }
            7..=9 if !edges.is_empty() => {
                let &e = edges.choose(r).unwrap();
                return HOp::DeleteHyperedge(e, h.verts(e).to_vec());
            }
            _ => {}
        }
    }
}

pub fn picky(z: &[EdgeId], bd: &[VertexId]) -> bool {
    (z.iter().sum::<u64>() * 7 + bd.iter().sum::<u64>()) % 5 != 0
}
