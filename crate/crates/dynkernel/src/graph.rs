//! Simple undirected graphs with ordered adjacency.

use std::collections::{BTreeMap, BTreeSet};

use crate::hypergraph::VertexId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
    m: usize,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(n: u64, edges: &[(u64, u64)]) -> Self {
        let mut g = Graph::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.m
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|n| n.contains(&v))
    }

    /// Returns false if the vertex was already present.
    pub fn add_vertex(&mut self, v: VertexId) -> bool {
        if self.adj.contains_key(&v) {
            return false;
        }
        self.adj.insert(v, BTreeSet::new());
        true
    }

    /// Adds both endpoints if needed; returns false for loops and existing edges.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return false;
        }
        self.add_vertex(u);
        self.add_vertex(v);
        if !self.adj.get_mut(&u).unwrap().insert(v) {
            return false;
        }
        self.adj.get_mut(&v).unwrap().insert(u);
        self.m += 1;
        true
    }

    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        let ok = self.adj.get_mut(&u).is_some_and(|n| n.remove(&v));
        if ok {
            self.adj.get_mut(&v).unwrap().remove(&u);
            self.m -= 1;
        }
        ok
    }

    /// Removes `v` together with its incident edges.
    pub fn remove_vertex(&mut self, v: VertexId) -> bool {
        let Some(nb) = self.adj.remove(&v) else {
            return false;
        };
        for u in nb {
            self.adj.get_mut(&u).unwrap().remove(&v);
            self.m -= 1;
        }
        true
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(&v).into_iter().flat_map(|n| n.iter().copied())
    }

    pub fn neighbor_set(&self, v: VertexId) -> &BTreeSet<VertexId> {
        &self.adj[&v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.get(&v).map_or(0, |n| n.len())
    }

    /// Edges as (u, v) with u < v in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj
            .iter()
            .flat_map(|(&u, n)| n.range(u + 1..).map(move |&v| (u, v)))
    }

    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> Graph {
        let mut g = Graph::new();
        for &v in keep {
            if self.has_vertex(v) {
                g.add_vertex(v);
            }
        }
        for (u, v) in self.edges() {
            if keep.contains(&u) && keep.contains(&v) {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn without(&self, drop: &BTreeSet<VertexId>) -> Graph {
        let keep: BTreeSet<VertexId> = self.vertices().filter(|v| !drop.contains(v)).collect();
        self.induced(&keep)
    }

    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in self.vertices() {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for y in self.neighbors(x) {
                    if seen.insert(y) {
                        comp.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Disjoint union after shifting `other`'s ids by `offset`.
    pub fn union_shifted(&mut self, other: &Graph, offset: u64) {
        for v in other.vertices() {
            self.add_vertex(v + offset);
        }
        for (u, v) in other.edges() {
            self.add_edge(u + offset, v + offset);
        }
    }

    /// Relabels vertices to 0..n in id order.
    pub fn compact(&self) -> (Graph, Vec<VertexId>) {
        let ids: Vec<VertexId> = self.vertices().collect();
        let pos: BTreeMap<VertexId, u64> = ids.iter().enumerate().map(|(i, &v)| (v, i as u64)).collect();
        let mut g = Graph::new();
        for i in 0..ids.len() as u64 {
            g.add_vertex(i);
        }
        for (u, v) in self.edges() {
            g.add_edge(pos[&u], pos[&v]);
        }
        (g, ids)
    }
}
