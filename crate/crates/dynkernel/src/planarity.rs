//! Left-right planarity test.

use std::collections::HashMap;

use crate::graph::Graph;

type Edge = (usize, usize);

#[derive(Clone, Copy, Default, Debug)]
struct Interval {
    low: Option<Edge>,
    high: Option<Edge>,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Clone, Copy, Default, Debug)]
struct Pair {
    left: Interval,
    right: Interval,
}

impl Pair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct Lr {
    adj: Vec<Vec<usize>>,
    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<Edge>>,
    oriented: HashMap<Edge, ()>,
    out: Vec<Vec<usize>>,
    lowpt: HashMap<Edge, usize>,
    lowpt2: HashMap<Edge, usize>,
    nesting: HashMap<Edge, usize>,
    lowpt_edge: HashMap<Edge, Edge>,
    reference: HashMap<Edge, Option<Edge>>,
    stack_bottom: HashMap<Edge, usize>,
    s: Vec<Pair>,
}

impl Lr {
    fn low(&self, e: Edge) -> usize {
        self.lowpt[&e]
    }

    fn conflicting(&self, i: &Interval, b: Edge) -> bool {
        !i.is_empty() && self.low(i.high.unwrap()) > self.low(b)
    }

    fn lowest(&self, p: &Pair) -> usize {
        if p.left.is_empty() {
            return self.low(p.right.low.unwrap());
        }
        if p.right.is_empty() {
            return self.low(p.left.low.unwrap());
        }
        self.low(p.left.low.unwrap()).min(self.low(p.right.low.unwrap()))
    }

    fn orient(&mut self, v: usize) {
        let e = self.parent_edge[v];
        let nbrs = self.adj[v].clone();
        for w in nbrs {
            if self.oriented.contains_key(&(v, w)) || self.oriented.contains_key(&(w, v)) {
                continue;
            }
            let vw = (v, w);
            self.oriented.insert(vw, ());
            self.out[v].push(w);
            let hv = self.height[v].unwrap();
            self.lowpt.insert(vw, hv);
            self.lowpt2.insert(vw, hv);
            match self.height[w] {
                None => {
                    self.parent_edge[w] = Some(vw);
                    self.height[w] = Some(hv + 1);
                    self.orient(w);
                }
                Some(hw) => {
                    self.lowpt.insert(vw, hw);
                }
            }
            let mut nd = 2 * self.lowpt[&vw];
            if self.lowpt2[&vw] < hv {
                nd += 1;
            }
            self.nesting.insert(vw, nd);
            if let Some(e) = e {
                let (lvw, l2vw, le, l2e) = (self.lowpt[&vw], self.lowpt2[&vw], self.lowpt[&e], self.lowpt2[&e]);
                if lvw < le {
                    self.lowpt2.insert(e, le.min(l2vw));
                    self.lowpt.insert(e, lvw);
                } else if lvw > le {
                    self.lowpt2.insert(e, l2e.min(lvw));
                } else {
                    self.lowpt2.insert(e, l2e.min(l2vw));
                }
            }
        }
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let outs = self.out[v].clone();
        for (idx, &w) in outs.iter().enumerate() {
            let ei = (v, w);
            self.stack_bottom.insert(ei, self.s.len());
            if Some(ei) == self.parent_edge[w] {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge.insert(ei, ei);
                self.s.push(Pair { left: Interval::default(), right: Interval { low: Some(ei), high: Some(ei) } });
            }
            if self.low(ei) < self.height[v].unwrap() {
                let e = e.expect("return edge below a root");
                if idx == 0 {
                    let l = self.lowpt_edge[&ei];
                    self.lowpt_edge.insert(e, l);
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: Edge, e: Edge) -> bool {
        let mut p = Pair::default();
        loop {
            let mut q = self.s.pop().unwrap();
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.low(q.right.low.unwrap()) > self.low(e) {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.reference.insert(p.right.low.unwrap(), q.right.high);
                }
                p.right.low = q.right.low;
            } else {
                let le = self.lowpt_edge[&e];
                self.reference.insert(q.right.low.unwrap(), Some(le));
            }
            if self.s.len() == self.stack_bottom[&ei] {
                break;
            }
        }
        while let Some(top) = self.s.last().copied() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.s.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(pl) = p.right.low {
                self.reference.insert(pl, q.right.high);
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else if let Some(ll) = p.left.low {
                self.reference.insert(ll, q.left.high);
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.s.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: Edge) {
        let u = e.0;
        let hu = self.height[u].unwrap();
        while let Some(top) = self.s.last() {
            if self.lowest(top) != hu {
                break;
            }
            self.s.pop();
        }
        if let Some(mut p) = self.s.pop() {
            while let Some(h) = p.left.high.filter(|h| h.1 == u) {
                p.left.high = self.reference.get(&h).copied().flatten();
            }
            if p.left.high.is_none() && p.left.low.is_some() {
                self.reference.insert(p.left.low.unwrap(), p.right.low);
                p.left.low = None;
            }
            while let Some(h) = p.right.high.filter(|h| h.1 == u) {
                p.right.high = self.reference.get(&h).copied().flatten();
            }
            if p.right.high.is_none() && p.right.low.is_some() {
                self.reference.insert(p.right.low.unwrap(), p.left.low);
                p.right.low = None;
            }
            self.s.push(p);
        }
        if self.low(e) < hu {
            if let Some(top) = self.s.last() {
                let hl = top.left.high;
                let hr = top.right.high;
                let r = match (hl, hr) {
                    (Some(l), None) => Some(l),
                    (Some(l), Some(r)) if self.low(l) > self.low(r) => Some(l),
                    _ => hr,
                };
                self.reference.insert(e, r);
            }
        }
    }
}

/// Whether `g` is planar.
pub fn is_planar(g: &Graph) -> bool {
    let n = g.num_vertices();
    let m = g.num_edges();
    if n > 2 && m > 3 * n - 6 {
        return false;
    }
    let (c, _) = g.compact();
    let adj: Vec<Vec<usize>> = (0..n as u64).map(|v| c.neighbors(v).map(|u| u as usize).collect()).collect();
    let mut lr = Lr {
        adj,
        height: vec![None; n],
        parent_edge: vec![None; n],
        oriented: HashMap::new(),
        out: vec![Vec::new(); n],
        lowpt: HashMap::new(),
        lowpt2: HashMap::new(),
        nesting: HashMap::new(),
        lowpt_edge: HashMap::new(),
        reference: HashMap::new(),
        stack_bottom: HashMap::new(),
        s: Vec::new(),
    };
    let mut roots = Vec::new();
    for v in 0..n {
        if lr.height[v].is_none() {
            lr.height[v] = Some(0);
            roots.push(v);
            lr.orient(v);
        }
    }
    for v in 0..n {
        let mut o = std::mem::take(&mut lr.out[v]);
        o.sort_by_key(|&w| lr.nesting[&(v, w)]);
        lr.out[v] = o;
    }
    roots.into_iter().all(|v| lr.test(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u64) -> Graph {
        let mut g = Graph::from_edges(n, &[]);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    #[test]
    fn kuratowski_graphs() {
        assert!(is_planar(&complete(4)));
        assert!(!is_planar(&complete(5)));
        let mut k33 = Graph::from_edges(6, &[]);
        for a in 0..3 {
            for b in 3..6 {
                k33.add_edge(a, b);
            }
        }
        assert!(!is_planar(&k33));
        k33.remove_edge(0, 3);
        assert!(is_planar(&k33));
        // subdivided K5
        let mut s = Graph::new();
        let mut next = 5;
        for a in 0..5u64 {
            for b in a + 1..5 {
                s.add_edge(a, next);
                s.add_edge(next, b);
                next += 1;
            }
        }
        assert!(!is_planar(&s));
    }

    #[test]
    fn petersen_and_grids() {
        let mut p = Graph::from_edges(10, &[]);
        for i in 0..5 {
            p.add_edge(i, (i + 1) % 5);
            p.add_edge(i, i + 5);
            p.add_edge(i + 5, (i + 2) % 5 + 5);
        }
        assert!(!is_planar(&p));
        let mut grid = Graph::new();
        for r in 0..6u64 {
            for c in 0..6u64 {
                if c + 1 < 6 {
                    grid.add_edge(r * 6 + c, r * 6 + c + 1);
                }
                if r + 1 < 6 {
                    grid.add_edge(r * 6 + c, (r + 1) * 6 + c);
                }
                if r + 1 < 6 && c + 1 < 6 {
                    grid.add_edge(r * 6 + c, (r + 1) * 6 + c + 1);
                }
            }
        }
        assert!(is_planar(&grid));
    }

    /// Planarity by searching all rotation systems for one with Euler
    /// characteristic 2 on every component.
    fn planar_by_rotations(g: &Graph) -> bool {
        let (c, _) = g.compact();
        let n = c.num_vertices();
        let nb: Vec<Vec<u64>> = (0..n as u64).map(|v| c.neighbors(v).collect()).collect();
        let comps = c.components().len();
        let target = c.num_edges() as i64 - n as i64 + 2 * comps as i64;
        fn perms(v: &[u64]) -> Vec<Vec<u64>> {
            if v.len() <= 2 {
                return vec![v.to_vec()];
            }
            let mut out = Vec::new();
            let first = v[0];
            let rest = &v[1..];
            fn all(r: &[u64]) -> Vec<Vec<u64>> {
                if r.is_empty() {
                    return vec![vec![]];
                }
                let mut out = Vec::new();
                for i in 0..r.len() {
                    let mut rr = r.to_vec();
                    let x = rr.remove(i);
                    for mut p in all(&rr) {
                        p.insert(0, x);
                        out.push(p);
                    }
                }
                out
            }
            for mut p in all(rest) {
                p.insert(0, first);
                out.push(p);
            }
            out
        }
        let options: Vec<Vec<Vec<u64>>> = nb.iter().map(|l| perms(l)).collect();
        let mut choice = vec![0usize; n];
        loop {
            let rot: Vec<&Vec<u64>> = (0..n).map(|v| &options[v][choice[v]]).collect();
            let mut seen = std::collections::BTreeSet::new();
            let mut faces = nb.iter().filter(|l| l.is_empty()).count() as i64;
            for u in 0..n {
                for &v in rot[u] {
                    if seen.contains(&(u as u64, v)) {
                        continue;
                    }
                    faces += 1;
                    let (mut a, mut b) = (u as u64, v);
                    while seen.insert((a, b)) {
                        let r = rot[b as usize];
                        let i = r.iter().position(|&x| x == a).unwrap();
                        let nx = r[(i + 1) % r.len()];
                        a = b;
                        b = nx;
                    }
                }
            }
            if faces == target {
                return true;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return false;
                }
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn agrees_with_rotation_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut planar = 0;
        for _ in 0..150 {
            let n = rng.gen_range(5..8u64);
            let mut g = Graph::from_edges(n, &[]);
            for _ in 0..rng.gen_range(n..3 * n) {
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if a != b && g.degree(a) < 4 && g.degree(b) < 4 {
                    g.add_edge(a, b);
                }
            }
            let p = is_planar(&g);
            planar += usize::from(p);
            assert_eq!(p, planar_by_rotations(&g), "{:?}", g.edges().collect::<Vec<_>>());
        }
        assert!(planar > 10 && planar < 150);
    }
}
