//! Potential accounting, c-good/c-semigood predicates, and the balancing
//! operations: rebalance, rotate-to-root and isolate.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::hypergraph::{EdgeId, Hypergraph, UnionFind, VertexId};
use crate::superbranch::{NodeId, SbError, Superbranch, PARENT_LABEL};
use crate::treewidth::min_degree_elimination;
use crate::welllinked::{is_well_linked, partition_well_linked, well_linked_number, WlError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BalanceError {
    #[error("c must be at least 3, got {0}")]
    InvalidC(usize),
    #[error("hyperedge {0} is not below node {1}")]
    NotBelow(EdgeId, NodeId),
    #[error(transparent)]
    Rotation(#[from] SbError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceConfig {
    pub c: usize,
    /// Largest boundary the planner groups under a fresh node (at most c).
    pub group_bound: usize,
    /// Depth law height(t) ≤ depth_factor·log2|L[t]| + depth_slack.
    pub depth_factor: f64,
    pub depth_slack: f64,
    /// Nodes created by rotations with more children than this are decomposed.
    pub flat_limit: usize,
}

impl BalanceConfig {
    pub fn new(c: usize) -> Result<BalanceConfig, BalanceError> {
        if c < 3 {
            return Err(BalanceError::InvalidC(c));
        }
        Ok(BalanceConfig { c, group_bound: c.min(8), depth_factor: 3.0, depth_slack: 3.0, flat_limit: 6 })
    }

    /// 2^{2c}+1, saturating.
    pub fn max_degree(&self) -> u64 {
        1u64.checked_shl(2 * self.c as u32).map_or(u64::MAX, |x| x + 1)
    }

    /// Balance window d = 2^{2c+1}, saturating.
    pub fn window(&self) -> u64 {
        1u64.checked_shl(2 * self.c as u32 + 1).unwrap_or(u64::MAX)
    }

    pub fn height_bound(&self, count: usize) -> f64 {
        self.depth_factor * (count.max(1) as f64).log2() + self.depth_slack
    }
}

pub fn potential(sb: &Superbranch) -> f64 {
    sb.phi()
}

pub fn node_potential(sb: &Superbranch, t: NodeId) -> f64 {
    sb.node_potential(t)
}

pub fn violates_depth_law(sb: &Superbranch, t: NodeId, cfg: &BalanceConfig) -> bool {
    sb.height(t) as f64 > cfg.height_bound(sb.count(t))
}

// ---------------------------------------------------------------------------
// predicates

/// True iff no node exactly `d` levels below `t` carries at least 2/3 of L[t].
pub fn is_balanced_at(sb: &Superbranch, t: NodeId, d: u64) -> bool {
    let total = sb.count(t);
    let mut layer = vec![t];
    let mut depth = 0u64;
    while !layer.is_empty() && depth < d {
        layer = layer.iter().flat_map(|&x| sb.children(x).iter().copied()).collect();
        depth += 1;
    }
    depth < d || layer.iter().all(|&s| 3 * sb.count(s) < 2 * total)
}

/// Downwards well-linkedness and degree bound on T_x, then wl(L[x]) ≤ c.
pub fn is_c_semigood_at(sb: &Superbranch, x: NodeId, c: usize) -> Result<bool, WlError> {
    let cfg = BalanceConfig { c, group_bound: c, depth_factor: 0.0, depth_slack: 0.0, flat_limit: 0 };
    let g = sb.hypergraph();
    for v in sb.subtree_nodes(x) {
        if sb.children(v).len() as u64 > cfg.max_degree() {
            return Ok(false);
        }
        if !sb.is_leaf(v) && !is_well_linked(g, &sb.leaf_set(v)) {
            return Ok(false);
        }
    }
    Ok(well_linked_number(g, &sb.leaf_set(x))? <= c)
}

pub fn is_c_good_at(sb: &Superbranch, x: NodeId, c: usize) -> Result<bool, WlError> {
    let d = BalanceConfig { c, group_bound: c, depth_factor: 0.0, depth_slack: 0.0, flat_limit: 0 }.window();
    for v in sb.subtree_nodes(x) {
        if !is_balanced_at(sb, v, d) {
            return Ok(false);
        }
    }
    is_c_semigood_at(sb, x, c)
}

// ---------------------------------------------------------------------------
// planning

/// Nested grouping of the torso edges of one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanNode {
    Member(EdgeId),
    Group(Vec<PlanNode>),
}

impl PlanNode {
    fn members(&self, out: &mut Vec<EdgeId>) {
        match self {
            PlanNode::Member(e) => out.push(*e),
            PlanNode::Group(ch) => ch.iter().for_each(|c| c.members(out)),
        }
    }
}

fn bfs_bins(h: &Hypergraph, members: &[EdgeId], weight: &BTreeMap<EdgeId, usize>) -> (Vec<EdgeId>, Vec<EdgeId>) {
    let set: BTreeSet<EdgeId> = members.iter().copied().collect();
    let total: usize = members.iter().map(|e| weight[e]).sum();
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    for &s in members {
        if !seen.insert(s) {
            continue;
        }
        let mut q = VecDeque::from([s]);
        while let Some(e) = q.pop_front() {
            order.push(e);
            for &v in h.verts(e) {
                for f in h.incident_sorted(v) {
                    if set.contains(&f) && seen.insert(f) {
                        q.push_back(f);
                    }
                }
            }
        }
    }
    let mut acc = 0;
    let mut cut = 1;
    for (i, e) in order.iter().enumerate() {
        acc += weight[e];
        cut = i + 1;
        if 2 * acc >= total {
            break;
        }
    }
    cut = cut.clamp(1, order.len() - 1);
    let mut a = order[..cut].to_vec();
    let mut b = order[cut..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Splits `members` into two non-empty bins along a small separator of their
/// primal graph, balancing weight.
fn bisect(h: &Hypergraph, members: &[EdgeId], weight: &BTreeMap<EdgeId, usize>) -> (Vec<EdgeId>, Vec<EdgeId>) {
    let sub = h.restrict(members);
    let primal = sub.primal_graph();
    let total: usize = members.iter().map(|e| weight[e]).sum();
    let mut sep: BTreeSet<VertexId> = BTreeSet::new();
    if let Some(et) = min_degree_elimination(&primal, 48) {
        let n = et.order.len();
        let pos: BTreeMap<VertexId, usize> = et.order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut w = vec![0usize; n];
        for &e in members {
            if let Some(i) = h.verts(e).iter().map(|v| pos[v]).min() {
                w[i] += weight[&e];
            }
        }
        let mut sub_w = w.clone();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            if let Some(p) = et.parent[i] {
                sub_w[p] += sub_w[i];
                kids[p].push(i);
            }
        }
        let root = (0..n).filter(|&i| et.parent[i].is_none()).max_by_key(|&i| (sub_w[i], std::cmp::Reverse(i)));
        if let Some(mut c) = root {
            if 2 * sub_w[c] > total {
                while let Some(&k) = kids[c].iter().filter(|&&k| 2 * sub_w[k] > total).max_by_key(|&&k| sub_w[k]) {
                    c = k;
                }
                sep.insert(et.order[c]);
                sep.extend(et.higher[c].iter().copied());
            }
        }
    }
    let idx: BTreeMap<EdgeId, usize> = members.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut uf = UnionFind::new(members.len());
    let mut owner: BTreeMap<VertexId, usize> = BTreeMap::new();
    for &e in members {
        for &v in h.verts(e) {
            if sep.contains(&v) {
                continue;
            }
            match owner.get(&v) {
                Some(&o) => uf.union(o, idx[&e]),
                None => {
                    owner.insert(v, idx[&e]);
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, (usize, Vec<EdgeId>)> = BTreeMap::new();
    for &e in members {
        let r = uf.find(idx[&e]);
        let entry = comps.entry(r).or_default();
        entry.0 += weight[&e];
        entry.1.push(e);
    }
    if comps.len() < 2 {
        return bfs_bins(h, members, weight);
    }
    let mut comps: Vec<(usize, Vec<EdgeId>)> = comps.into_values().collect();
    comps.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut bins: [(usize, Vec<EdgeId>); 2] = Default::default();
    for (w, es) in comps {
        let k = if bins[0].0 <= bins[1].0 { 0 } else { 1 };
        bins[k].0 += w;
        bins[k].1.extend(es);
    }
    let [(_, mut a), (_, mut b)] = bins;
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn plan_children(h: &Hypergraph, members: &[EdgeId], weight: &BTreeMap<EdgeId, usize>, bound: usize) -> Vec<PlanNode> {
    if members.len() <= 2 {
        return members.iter().map(|&e| PlanNode::Member(e)).collect();
    }
    let (a, b) = bisect(h, members, weight);
    let mut out = Vec::new();
    for bin in [a, b] {
        for part in partition_well_linked(h, &bin) {
            if part.len() == 1 {
                out.push(PlanNode::Member(part[0]));
            } else if h.lambda(&part) <= bound {
                out.push(PlanNode::Group(plan_children(h, &part, weight, bound)));
            } else {
                out.extend(plan_children(h, &part, weight, bound));
            }
        }
    }
    out
}

/// Plans a hierarchy of well-linked groups of `members` (edges of `h`) with
/// boundaries at most `bound`, recursively halving the weight.
pub fn plan(h: &Hypergraph, members: &[EdgeId], weight: &BTreeMap<EdgeId, usize>, bound: usize) -> Vec<PlanNode> {
    let mut m = members.to_vec();
    m.sort_unstable();
    plan_children(h, &m, weight, bound)
}

/// Φ contributed by the internal nodes of a plan rooted at a node with the
/// given extra parent-side count of zero.
pub fn plan_potential(plan: &[PlanNode], weight: &BTreeMap<EdgeId, usize>) -> f64 {
    fn walk(ch: &[PlanNode], weight: &BTreeMap<EdgeId, usize>, acc: &mut f64) -> usize {
        let mut count = 0;
        for c in ch {
            count += match c {
                PlanNode::Member(e) => weight[e],
                PlanNode::Group(g) => walk(g, weight, acc),
            };
        }
        if !ch.is_empty() && count > 0 {
            *acc += (ch.len() as f64 - 1.0) * (count as f64).log2();
        }
        count
    }
    let mut acc = 0.0;
    walk(plan, weight, &mut acc);
    acc
}

/// Realizes a plan below `t` by splits; groups whose split would leave fewer
/// than two edges outside are spliced into `t` instead.
pub fn apply_plan(sb: &mut Superbranch, t: NodeId, plan: &[PlanNode]) -> Result<(), SbError> {
    for item in plan {
        let PlanNode::Group(sub) = item else { continue };
        let mut members = Vec::new();
        item.members(&mut members);
        let outside = sb.children(t).len() - members.len() + usize::from(sb.parent(t).is_some());
        if outside < 2 {
            apply_plan(sb, t, sub)?;
            continue;
        }
        let y = sb.split(t, &members)?;
        apply_plan(sb, y, sub)?;
    }
    Ok(())
}

fn weights_of(sb: &Superbranch, members: &[NodeId]) -> BTreeMap<EdgeId, usize> {
    members.iter().map(|&c| (c, sb.count(c))).collect()
}

/// Replaces the flat children list of `t` by a planned hierarchy.
pub fn decompose(sb: &mut Superbranch, t: NodeId, cfg: &BalanceConfig) -> Result<(), SbError> {
    if sb.children(t).len() <= 2 {
        return Ok(());
    }
    let mut members = sb.children(t).to_vec();
    members.sort_unstable();
    let weight = weights_of(sb, &members);
    let p = plan(sb.torso(t), &members, &weight, cfg.group_bound.min(sb.alpha()));
    apply_plan(sb, t, &p)
}

/// Rebuilds the prefix of T_x above its frontier (maximal descendants holding
/// at most a quarter of L[x]) when the planned shape does not increase Φ, then
/// recurses into frontier nodes that break the depth law. Returns whether any
/// rotation was applied.
pub fn rebalance_subtree(sb: &mut Superbranch, x: NodeId, cfg: &BalanceConfig) -> Result<bool, SbError> {
    if sb.is_leaf(x) {
        return Ok(false);
    }
    let limit = sb.count(x) / 4;
    let mut frontier = Vec::new();
    let mut prefix = Vec::new();
    let mut stack: Vec<NodeId> = sb.children(x).to_vec();
    while let Some(y) = stack.pop() {
        if sb.is_leaf(y) || sb.count(y) <= limit {
            frontier.push(y);
        } else {
            prefix.push(y);
            stack.extend(sb.children(y).iter().copied());
        }
    }
    frontier.sort_unstable();
    let mut h = Hypergraph::new();
    let mut labels: Vec<(EdgeId, Vec<VertexId>)> = frontier.iter().map(|&f| (f, sb.adh(f).to_vec())).collect();
    if sb.parent(x).is_some() {
        labels.push((PARENT_LABEL, sb.adh(x).to_vec()));
    }
    for (_, vs) in &labels {
        for &v in vs {
            if !h.has_vertex(v) {
                h.add_vertex(v).unwrap();
            }
        }
    }
    for (l, vs) in &labels {
        h.add_hyperedge_with_id(*l, vs).unwrap();
    }
    let weight = weights_of(sb, &frontier);
    let p = plan(&h, &frontier, &weight, cfg.group_bound.min(sb.alpha()));
    let current: f64 = std::iter::once(x).chain(prefix.iter().copied()).map(|t| sb.node_potential(t)).sum();
    let planned = plan_potential(&p, &weight);
    let mut changed = false;
    if planned <= current + 1e-9 {
        let mut queue: VecDeque<NodeId> = prefix.iter().copied().filter(|&y| sb.parent(y) == Some(x)).collect();
        while let Some(y) = queue.pop_front() {
            let kids: Vec<NodeId> = sb.children(y).to_vec();
            sb.contract(x, y)?;
            queue.extend(kids.into_iter().filter(|k| prefix.contains(k)));
        }
        apply_plan(sb, x, &p)?;
        changed = !prefix.is_empty() || p.iter().any(|n| matches!(n, PlanNode::Group(_)));
    }
    for f in frontier {
        if !sb.is_leaf(f) && violates_depth_law(sb, f, cfg) {
            changed |= rebalance_subtree(sb, f, cfg)?;
        }
    }
    Ok(changed)
}

/// Moves the leaf of `e` up until it is a child of `t`, regrouping the siblings
/// it leaves behind into well-linked parts.
pub fn rotate_to_root(sb: &mut Superbranch, t: NodeId, e: EdgeId, cfg: &BalanceConfig) -> Result<Vec<NodeId>, BalanceError> {
    let l = sb.leaf_node(e).ok_or(BalanceError::NotBelow(e, t))?;
    if !sb.ancestors(l).contains(&t) {
        return Err(BalanceError::NotBelow(e, t));
    }
    let mut created = Vec::new();
    while let Some(p) = sb.parent(l).filter(|&p| p != t) {
        let q = sb.parent(p).expect("p is below t");
        let rest: Vec<NodeId> = sb.children(p).iter().copied().filter(|&c| c != l).collect();
        sb.contract(q, p)?;
        for part in partition_well_linked(sb.torso(q), &rest) {
            if part.len() >= 2 && sb.torso(q).lambda(&part) <= sb.alpha().min(cfg.c) {
                created.push(sb.split(q, &part)?);
            }
        }
    }
    Ok(created)
}

/// Makes every hyperedge of `x` a root child. Subtrees of other root children
/// are left untouched.
pub fn isolate(sb: &mut Superbranch, x: &[EdgeId], cfg: &BalanceConfig) -> Result<(), BalanceError> {
    let r = sb.root();
    for &e in x {
        let l = sb.leaf_node(e).ok_or(BalanceError::NotBelow(e, r))?;
        let Some(t1) = sb.root_child_of(l) else { continue };
        if t1 == l {
            continue;
        }
        let created = rotate_to_root(sb, t1, e, cfg)?;
        let former: Vec<NodeId> = sb.children(t1).iter().copied().filter(|&c| c != l).collect();
        sb.contract(r, t1)?;
        for y in former {
            if sb.is_leaf(y) {
                continue;
            }
            if created.contains(&y) && sb.children(y).len() > cfg.flat_limit {
                decompose(sb, y, cfg)?;
            }
            if violates_depth_law(sb, y, cfg) {
                rebalance_subtree(sb, y, cfg)?;
            }
        }
        for y in created {
            if sb.contains(y) && sb.parent(y) != Some(r) && sb.children(y).len() > cfg.flat_limit {
                decompose(sb, y, cfg)?;
            }
        }
    }
    Ok(())
}

/// Rebalances the topmost nodes among `seeds` and their ancestors that break
/// the depth law.
pub fn enforce_depth_law(sb: &mut Superbranch, seeds: &[NodeId], cfg: &BalanceConfig) -> Result<usize, SbError> {
    let r = sb.root();
    let mut tops = BTreeSet::new();
    for &s in seeds {
        if !sb.contains(s) {
            continue;
        }
        let mut top = None;
        let mut cur = Some(s);
        while let Some(t) = cur.filter(|&t| t != r) {
            if !sb.is_leaf(t) && violates_depth_law(sb, t, cfg) {
                top = Some(t);
            }
            cur = sb.parent(t);
        }
        tops.extend(top);
    }
    let mut done = 0;
    for t in tops {
        if sb.contains(t) && violates_depth_law(sb, t, cfg) {
            rebalance_subtree(sb, t, cfg)?;
            done += 1;
        }
    }
    Ok(done)
}
