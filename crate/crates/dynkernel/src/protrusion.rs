//! The protrusion decomposition corresponding to a superbranch decomposition,
//! maintained node by node along the traces of rotations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::automata::{
    build_td, chain_bags, combine_forms, compute_run, leaf_form, pair_of, GEdge, ItwForm, TdAutomaton, FORM_CAP,
};
use crate::hypergraph::VertexId;
use crate::kernelplug::{Plugin, TableState};
use crate::superbranch::{NodeId, RotationLog, Superbranch};

/// What the decomposition stores for a non-root node t: the edges of EL(t)
/// passed to the parent and those placed at t, the bag of the topmost tree
/// decomposition node of t, its itw form and the plugin state there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeData {
    pub up: Vec<GEdge>,
    pub placed: Vec<GEdge>,
    pub top_bag: Vec<VertexId>,
    pub form: ItwForm,
    pub state: Option<TableState>,
}

#[derive(Debug, Clone)]
pub struct ProtrusionDecomp {
    omega: i32,
    plugin: Option<Plugin>,
    data: HashMap<NodeId, NodeData>,
    recomputed: usize,
}

fn inside(e: &GEdge, set: &[VertexId]) -> bool {
    set.binary_search(&e.0).is_ok() && set.binary_search(&e.1).is_ok()
}

impl ProtrusionDecomp {
    pub fn new(omega: i32, plugin: Option<Plugin>) -> ProtrusionDecomp {
        ProtrusionDecomp { omega, plugin, data: HashMap::new(), recomputed: 0 }
    }

    /// Builds the data of every node from scratch.
    pub fn build(sb: &Superbranch, omega: i32, plugin: Option<Plugin>) -> ProtrusionDecomp {
        let mut pd = ProtrusionDecomp::new(omega, plugin);
        let r = sb.root();
        let mut order = Vec::new();
        let mut stack = vec![r];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(sb.children(x).iter().copied());
        }
        for &t in order.iter().rev() {
            if t != r {
                let d = pd.compute(sb, t);
                pd.data.insert(t, d);
            }
        }
        pd
    }

    pub fn omega(&self) -> i32 {
        self.omega
    }

    pub fn plugin(&self) -> Option<Plugin> {
        self.plugin
    }

    pub fn get(&self, t: NodeId) -> Option<&NodeData> {
        self.data.get(&t)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of node recomputations since the last call.
    pub fn take_recomputed(&mut self) -> usize {
        std::mem::take(&mut self.recomputed)
    }

    fn compute(&self, sb: &Superbranch, t: NodeId) -> NodeData {
        let g = sb.hypergraph();
        let adh = sb.adh(t);
        if let Some(e) = sb.node(t).leaf {
            let verts = g.verts(e).to_vec();
            let el: Vec<GEdge> = pair_of(g, e).into_iter().collect();
            let (up, placed): (Vec<GEdge>, Vec<GEdge>) = el.into_iter().partition(|p| inside(p, adh));
            let state = self.plugin.and_then(|p| p.initial(&verts, &placed));
            let form = leaf_form(&verts, adh, self.omega, FORM_CAP);
            return NodeData { up, placed, top_bag: verts, form, state };
        }
        let mut ch = sb.children(t).to_vec();
        ch.sort_unstable();
        let kids: Vec<&NodeData> = ch.iter().map(|c| &self.data[c]).collect();
        let mut el: Vec<GEdge> = kids.iter().flat_map(|k| k.up.iter().copied()).collect();
        el.sort_unstable();
        let (up, placed): (Vec<GEdge>, Vec<GEdge>) = el.into_iter().partition(|p| inside(p, adh));
        let adhs: Vec<&[VertexId]> = ch.iter().map(|&c| sb.adh(c)).collect();
        let bags = chain_bags(adh, &adhs);
        let d = ch.len();
        let state = self.plugin.and_then(|p| {
            let mut below_bag: &[VertexId] = &kids[d - 1].top_bag;
            let mut below = kids[d - 1].state.clone();
            for i in (0..d - 1).rev() {
                let bag = &bags[i];
                let q = if bag.len() > p.width() + 1 {
                    None
                } else {
                    let edges: &[GEdge] = if i == 0 { &placed } else { &[] };
                    match (&kids[i].state, &below) {
                        (Some(qy), Some(qz)) => p.transition(bag, (&kids[i].top_bag, qy), Some((below_bag, qz)), edges),
                        _ => None,
                    }
                };
                below = q;
                below_bag = bag;
            }
            below
        });
        let forms: Vec<&ItwForm> = kids.iter().map(|k| &k.form).collect();
        let form = combine_forms(&forms, adh, self.omega, FORM_CAP);
        let top_bag = bags.into_iter().next().unwrap_or_default();
        NodeData { up, placed, top_bag, form, state }
    }

    /// Brings the data up to date after the rotations in `log`. Returns the
    /// root children whose data changed.
    pub fn sync(&mut self, sb: &Superbranch, log: &RotationLog) -> BTreeSet<NodeId> {
        let r = sb.root();
        let mut trace: BTreeSet<NodeId> = BTreeSet::new();
        for &t in &log.involved {
            if !sb.contains(t) {
                self.data.remove(&t);
                continue;
            }
            let mut cur = Some(t);
            while let Some(x) = cur.filter(|&x| x != r) {
                if !trace.insert(x) {
                    break;
                }
                cur = sb.parent(x);
            }
        }
        let mut order: Vec<(usize, NodeId)> = trace.iter().map(|&x| (sb.depth(x), x)).collect();
        order.sort_unstable_by(|a, b| b.cmp(a));
        let mut changed: BTreeSet<NodeId> = BTreeSet::new();
        let mut dirty = BTreeSet::new();
        for (_, x) in order {
            let needed = log.involved.contains(&x)
                || !self.data.contains_key(&x)
                || sb.children(x).iter().any(|c| changed.contains(c));
            if !needed {
                continue;
            }
            let d = self.compute(sb, x);
            self.recomputed += 1;
            if self.data.get(&x) != Some(&d) {
                self.data.insert(x, d);
                changed.insert(x);
                if sb.parent(x) == Some(r) {
                    dirty.insert(x);
                }
            }
        }
        dirty
    }

    /// edges(r): the disjoint union of the edges passed up by root children.
    pub fn root_edges(&self, sb: &Superbranch) -> BTreeSet<GEdge> {
        sb.children(sb.root()).iter().flat_map(|c| self.data[c].up.iter().copied()).collect()
    }

    /// bag(r) = V(torso(r)).
    pub fn root_bag(&self, sb: &Superbranch) -> Vec<VertexId> {
        let mut b: Vec<VertexId> = sb.torso(sb.root()).vertices().collect();
        b.sort_unstable();
        b
    }

    /// Table of root child `c` restricted to adh(c).
    pub fn child_table(&self, sb: &Superbranch, c: NodeId) -> Option<TableState> {
        let p = self.plugin?;
        let d = self.data.get(&c)?;
        let q = d.state.as_ref()?;
        p.transition(sb.adh(c), (&d.top_bag, q), None, &[])
    }

    /// Compares the maintained data with a rebuild and with the run of the
    /// plugin on the corresponding tree decomposition built from scratch.
    pub fn check_against(&self, sb: &Superbranch) -> Result<(), String> {
        let fresh = ProtrusionDecomp::build(sb, self.omega, self.plugin);
        if fresh.data.len() != self.data.len() {
            return Err(format!("{} maintained nodes, {} expected", self.data.len(), fresh.data.len()));
        }
        let mut ids: Vec<&NodeId> = fresh.data.keys().collect();
        ids.sort_unstable();
        for t in ids {
            if self.data.get(t) != fresh.data.get(t) {
                return Err(format!("node {t}: maintained data differs from recomputation"));
            }
        }
        let td = build_td(sb);
        let run = self.plugin.map(|p| compute_run(&p, &td));
        let by_top: BTreeMap<NodeId, usize> = td.top.clone();
        for (&t, &x) in &by_top {
            let d = &self.data[&t];
            let n = &td.nodes[x];
            if n.bag != d.top_bag {
                return Err(format!("node {t}: top bag differs from the tree decomposition"));
            }
            if n.edges != d.placed {
                return Err(format!("node {t}: placed edges differ from the tree decomposition"));
            }
            if let Some(run) = &run {
                if run[x] != d.state {
                    return Err(format!("node {t}: plugin state differs from the from-scratch run"));
                }
            }
        }
        let root_edges: Vec<GEdge> = self.root_edges(sb).into_iter().collect();
        if td.nodes[td.root].edges != root_edges {
            return Err("edges(r) differs from the tree decomposition".into());
        }
        Ok(())
    }
}
