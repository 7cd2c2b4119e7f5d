//! A lazily expanded randomized BBD tree over the join result, with the
//! active-point oracles used by the clustering algorithms.

pub mod midpoint;
mod shrink;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{slack_radius2, Interval, Point, Rect, Region};
use crate::oracles::RegionCounts;
use crate::relational::Instance;

pub use midpoint::{smallest_midpoint_box, Frame, MidpointBox, NodeRegion, MAX_DEPTH};
pub use shrink::ShrinkOutcome;

pub type NodeId = usize;

/// How a node was produced, which fixes how it is expanded next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Root,
    Fair,
    Shrink,
}

/// Why a node has no children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeafKind {
    /// At most one join result.
    Single,
    /// All of its results share one location.
    Unit,
    /// The outer box cannot be halved any further.
    DepthCap,
}

/// The mutable per-node triple the oracles maintain.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub active: bool,
    pub count: u64,
    pub rep: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct Node {
    region: NodeRegion,
    geom: Region,
    total: u64,
    bbox: Option<Rect>,
    state: NodeState,
    children: Vec<NodeId>,
    parent: Option<NodeId>,
    gen: GenKind,
    leaf: Option<LeafKind>,
    depth: u32,
}

impl Node {
    pub fn region(&self) -> &Region {
        &self.geom
    }

    pub fn midpoint_region(&self) -> &NodeRegion {
        &self.region
    }

    /// Number of join results in the region, active or not.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Closed bounding box of the region's join results.
    pub fn bbox(&self) -> Option<&Rect> {
        self.bbox.as_ref()
    }

    pub fn state(&self) -> &NodeState {
        &self.state
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn gen(&self) -> GenKind {
        self.gen
    }

    pub fn leaf(&self) -> Option<LeafKind> {
        self.leaf
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

/// Sample size used by the randomized centroid shrink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePolicy {
    pub epsilon: f64,
    pub constant: f64,
    pub exponent: f64,
}

impl SamplePolicy {
    /// `ceil(c * eps^-2 * ln(N^exponent))`, at least 8.
    pub fn lambda(&self, n: usize) -> usize {
        let ln_n = (n.max(1) as f64).ln();
        let raw = (self.constant * self.exponent * ln_n / (self.epsilon * self.epsilon)).ceil();
        (raw as usize).max(8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeConfig {
    /// Slack of the canonical-node sandwich.
    pub epsilon: f64,
    /// Constant in front of the shrink sample size.
    pub sample_constant: f64,
    /// Smallest epsilon used to size shrink samples.
    pub sample_epsilon_floor: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            sample_constant: 1.0,
            sample_epsilon_floor: 0.1,
        }
    }
}

impl TreeConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }
}

/// Identifies one live snapshot of one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotToken {
    tree: u64,
    serial: u64,
}

/// State-changing tree operations, in the order they happened.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeEvent {
    Inactivate(Vec<Region>),
    Snapshot(SnapshotToken),
    Restore(SnapshotToken),
    Release(SnapshotToken),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TreeStats {
    pub fair_splits: u64,
    pub shrinks: u64,
    pub shrink_fallbacks: u64,
    pub queries: u64,
    pub max_canonical: usize,
}

static NEXT_TREE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy)]
enum Decision {
    Take,
    Prune,
    Descend,
}

pub struct RbbdTree<'a> {
    inst: &'a Instance,
    frame: Frame,
    nodes: Vec<Node>,
    config: TreeConfig,
    policy: SamplePolicy,
    lambda: usize,
    rng: ChaCha8Rng,
    id: u64,
    undo: Vec<(NodeId, NodeState)>,
    markers: Vec<(u64, usize)>,
    next_serial: u64,
    events: Option<Vec<TreeEvent>>,
    stats: TreeStats,
}

impl<'a> RbbdTree<'a> {
    /// Builds the root over the bounding box of `q(D)`.
    pub fn build(inst: &'a Instance, config: TreeConfig, seed: u64) -> Result<Self> {
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "tree epsilon must be positive, got {}",
                config.epsilon
            )));
        }
        let all = RegionCounts::rect(inst, &Rect::unbounded(inst.dim()))?;
        let (lo, hi) = all.bbox().ok_or(Error::EmptyJoin)?;
        let frame = Frame::from_bounds(&lo, &hi);
        let policy = SamplePolicy {
            epsilon: config.epsilon.max(config.sample_epsilon_floor),
            constant: config.sample_constant,
            exponent: inst.relation_count() as f64 + 4.0,
        };
        let lambda = policy.lambda(inst.max_relation_size());
        let mut tree = Self {
            inst,
            frame,
            nodes: Vec::new(),
            config,
            policy,
            lambda,
            rng: ChaCha8Rng::seed_from_u64(seed),
            id: NEXT_TREE_ID.fetch_add(1, Ordering::Relaxed),
            undo: Vec::new(),
            markers: Vec::new(),
            next_serial: 0,
            events: None,
            stats: TreeStats::default(),
        };
        let root = tree.frame.root();
        tree.make_node(NodeRegion::rect(root), None, GenKind::Root, 0)?;
        Ok(tree)
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn sample_policy(&self) -> SamplePolicy {
        self.policy
    }

    /// Shrink sample size `Λ`.
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn stats(&self) -> &TreeStats {
        &self.stats
    }

    /// Starts recording [`TreeEvent`]s.
    pub fn record_events(&mut self) {
        self.events.get_or_insert_with(Vec::new);
    }

    pub fn take_events(&mut self) -> Vec<TreeEvent> {
        self.events.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn log(&mut self, e: impl FnOnce() -> TreeEvent) {
        if let Some(ev) = &mut self.events {
            ev.push(e());
        }
    }

    /// Active, with every ancestor active.
    pub fn is_effectively_active(&self, mut id: NodeId) -> bool {
        loop {
            if !self.nodes[id].state.active {
                return false;
            }
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => return true,
            }
        }
    }

    fn make_node(&mut self, region: NodeRegion, parent: Option<NodeId>, gen: GenKind, depth: u32) -> Result<NodeId> {
        let geom = region.to_region(&self.frame);
        let rc = RegionCounts::region(self.inst, &geom)?;
        let total = rc.total();
        let rep = rc.repr();
        let bbox = rc.bbox().map(|(lo, hi)| Rect::closed(&lo, &hi));
        let leaf = if total <= 1 {
            Some(LeafKind::Single)
        } else if bbox.as_ref().is_some_and(|b| b.sides.iter().all(|s| s.lo == s.hi)) {
            Some(LeafKind::Unit)
        } else if self.frame.split_dim(&region.outer).is_none() {
            Some(LeafKind::DepthCap)
        } else {
            None
        };
        self.nodes.push(Node {
            region,
            geom,
            total,
            bbox,
            state: NodeState {
                active: total > 0,
                count: total,
                rep,
            },
            children: Vec::new(),
            parent,
            gen,
            leaf,
            depth,
        });
        Ok(self.nodes.len() - 1)
    }

    fn set_state(&mut self, id: NodeId, state: NodeState) {
        if self.nodes[id].state == state {
            return;
        }
        let old = std::mem::replace(&mut self.nodes[id].state, state);
        if !self.markers.is_empty() {
            self.undo.push((id, old));
        }
    }

    /// Creates the children of `id` per the fair/shrink alternation.
    pub fn expand(&mut self, id: NodeId) -> Result<Vec<NodeId>> {
        if !self.nodes[id].children.is_empty() {
            return Ok(self.nodes[id].children.clone());
        }
        if self.nodes[id].leaf.is_some() {
            return Err(Error::ExpandOnLeaf(id));
        }
        match self.nodes[id].gen {
            GenKind::Root | GenKind::Shrink => self.fair_split(id).map(|c| c.to_vec()),
            GenKind::Fair => {
                self.randomized_centroid_shrink(id)?;
                Ok(self.nodes[id].children.clone())
            }
        }
    }

    /// Halves the outer box across its longest side; a hole stays whole in one half.
    pub fn fair_split(&mut self, id: NodeId) -> Result<[NodeId; 2]> {
        if !self.nodes[id].children.is_empty() {
            return Err(Error::InternalGeometry(format!("node {id} is already expanded")));
        }
        let region = self.nodes[id].region.clone();
        let (a, b) = self.frame.children(&region.outer).ok_or(Error::ExpandOnLeaf(id))?;
        let (ra, rb) = match region.hole {
            None => (NodeRegion::rect(a), NodeRegion::rect(b)),
            Some(h) if a.contains_box(&h) => (NodeRegion::with_hole(a, h), NodeRegion::rect(b)),
            Some(h) if b.contains_box(&h) => (NodeRegion::rect(a), NodeRegion::with_hole(b, h)),
            Some(_) => {
                return Err(Error::InternalGeometry(format!(
                    "split of node {id} cuts through its hole"
                )));
            }
        };
        let depth = self.nodes[id].depth + 1;
        let ca = self.make_node(ra, Some(id), GenKind::Fair, depth)?;
        let cb = self.make_node(rb, Some(id), GenKind::Fair, depth)?;
        self.nodes[id].children = vec![ca, cb];
        self.stats.fair_splits += 1;
        Ok([ca, cb])
    }

    fn walk(&mut self, test: &dyn Fn(&Rect) -> Decision) -> Result<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !node.state.active {
                continue;
            }
            let Some(bbox) = &node.bbox else { continue };
            match test(bbox) {
                Decision::Take => out.push(id),
                Decision::Prune => {}
                Decision::Descend if node.leaf.is_some() => out.push(id),
                Decision::Descend => {
                    let children = self.expand(id)?;
                    stack.extend(children.iter().rev());
                }
            }
        }
        self.stats.queries += 1;
        self.stats.max_canonical = self.stats.max_canonical.max(out.len());
        Ok(out)
    }

    /// Disjoint active nodes covering every active point in `B(x, r)` and
    /// none outside `B(x, (1+eps) r)`.
    pub fn query_canonical(&mut self, x: &[f64], r: f64) -> Result<Vec<NodeId>> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain(format!("radius must be non-negative, got {r}")));
        }
        if x.len() != self.inst.dim() {
            return Err(Error::BoxArity {
                expected: self.inst.dim(),
                got: x.len(),
            });
        }
        let inner = r * r;
        let outer = slack_radius2(r, self.config.epsilon);
        self.walk(&|b: &Rect| {
            if b.max_dist2(x) <= outer {
                Decision::Take
            } else if b.min_dist2(x) > inner {
                Decision::Prune
            } else {
                Decision::Descend
            }
        })
    }

    /// Disjoint active nodes covering every active point in `q` and none
    /// outside `q` grown by `eps * diam(q)` on every side.
    pub fn query_canonical_box(&mut self, q: &Rect) -> Result<Vec<NodeId>> {
        if q.dim() != self.inst.dim() {
            return Err(Error::BoxArity {
                expected: self.inst.dim(),
                got: q.dim(),
            });
        }
        let diam = q
            .sides
            .iter()
            .map(|s| (s.hi - s.lo) * (s.hi - s.lo))
            .sum::<f64>()
            .sqrt();
        let pad = self.config.epsilon * diam;
        let grown = Rect::new(
            q.sides
                .iter()
                .map(|s| Interval::closed(s.lo - pad, s.hi + pad))
                .collect(),
        );
        let q = q.clone();
        self.walk(&move |b: &Rect| {
            if disjoint(b, &q) {
                Decision::Prune
            } else if grown.covers(b) {
                Decision::Take
            } else {
                Decision::Descend
            }
        })
    }

    fn inactivate_nodes(&mut self, ids: &[NodeId]) {
        if ids.is_empty() {
            return;
        }
        if self.events.is_some() {
            let regions = ids.iter().map(|&i| self.nodes[i].geom.clone()).collect();
            self.log(|| TreeEvent::Inactivate(regions));
        }
        let mut touched = Vec::new();
        for &id in ids {
            self.set_state(
                id,
                NodeState {
                    active: false,
                    count: 0,
                    rep: None,
                },
            );
            let mut p = self.nodes[id].parent;
            while let Some(a) = p {
                touched.push(a);
                p = self.nodes[a].parent;
            }
        }
        touched.sort_unstable_by_key(|&a| (std::cmp::Reverse(self.nodes[a].depth), a));
        touched.dedup();
        for a in touched {
            self.recompute(a);
        }
    }

    fn recompute(&mut self, id: NodeId) {
        let mut state = NodeState {
            active: false,
            count: 0,
            rep: None,
        };
        for &c in &self.nodes[id].children {
            let cs = &self.nodes[c].state;
            if cs.active {
                state.active = true;
                state.count += cs.count;
                if state.rep.is_none() {
                    state.rep.clone_from(&cs.rep);
                }
            }
        }
        self.set_state(id, state);
    }

    /// Makes every active point in `B(x, r)` inactive, and possibly some in
    /// `B(x, (1+eps) r)`; returns the canonical nodes used.
    pub fn inactive(&mut self, x: &[f64], r: f64) -> Result<Vec<NodeId>> {
        let ids = self.query_canonical(x, r)?;
        self.inactivate_nodes(&ids);
        Ok(ids)
    }

    /// [`Self::inactive`] returning how many active points it covered.
    pub fn inactive_counted(&mut self, x: &[f64], r: f64) -> Result<u64> {
        let ids = self.query_canonical(x, r)?;
        let covered = ids.iter().map(|&i| self.nodes[i].state.count).sum();
        self.inactivate_nodes(&ids);
        Ok(covered)
    }

    pub fn inactive_box(&mut self, q: &Rect) -> Result<Vec<NodeId>> {
        let ids = self.query_canonical_box(q)?;
        self.inactivate_nodes(&ids);
        Ok(ids)
    }

    /// A count between `|B(x,r) ∩ Q'|` and `|B(x,(1+eps)r) ∩ Q'|`.
    pub fn count(&mut self, x: &[f64], r: f64) -> Result<u64> {
        let ids = self.query_canonical(x, r)?;
        Ok(ids.iter().map(|&i| self.nodes[i].state.count).sum())
    }

    pub fn count_box(&mut self, q: &Rect) -> Result<u64> {
        let ids = self.query_canonical_box(q)?;
        Ok(ids.iter().map(|&i| self.nodes[i].state.count).sum())
    }

    /// Some active point, or `None` when every point is inactive.
    pub fn rep(&self) -> Option<Point> {
        let root = &self.nodes[self.root()].state;
        root.active.then(|| root.rep.clone()).flatten()
    }

    /// Number of active points.
    pub fn active_count(&self) -> u64 {
        let root = &self.nodes[self.root()].state;
        if root.active {
            root.count
        } else {
            0
        }
    }

    /// Active constructed nodes without children, in preorder.
    fn frontier(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            if !n.state.active {
                continue;
            }
            if n.children.is_empty() {
                out.push(id);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    /// Every active point.
    pub fn report(&self) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        for id in self.frontier() {
            RegionCounts::region(self.inst, &self.nodes[id].geom)?.report_into(&mut out);
        }
        Ok(out)
    }

    /// `z` uniform draws with replacement from the active points.
    pub fn sample<R: Rng + ?Sized>(&self, z: usize, rng: &mut R) -> Result<Vec<Point>> {
        if z == 0 {
            return Ok(Vec::new());
        }
        if !self.nodes[self.root()].state.active {
            return Err(Error::EmptyActiveSet);
        }
        let mut per_node: BTreeMap<NodeId, usize> = BTreeMap::new();
        for _ in 0..z {
            let mut id = self.root();
            while !self.nodes[id].children.is_empty() {
                let kids = &self.nodes[id].children;
                let total: u64 = kids.iter().map(|&c| self.live_count(c)).sum();
                let mut r = rng.random_range(0..total);
                let mut next = kids[0];
                for &c in kids {
                    let w = self.live_count(c);
                    if r < w {
                        next = c;
                        break;
                    }
                    r -= w;
                }
                id = next;
            }
            *per_node.entry(id).or_default() += 1;
        }
        let mut out = Vec::with_capacity(z);
        for (id, k) in per_node {
            let rc = RegionCounts::region(self.inst, &self.nodes[id].geom)?;
            for _ in 0..k {
                out.push(rc.sample(rng).ok_or(Error::EmptyActiveSet)?);
            }
        }
        out.shuffle(rng);
        Ok(out)
    }

    fn live_count(&self, id: NodeId) -> u64 {
        let s = &self.nodes[id].state;
        if s.active {
            s.count
        } else {
            0
        }
    }

    pub fn sample_seeded(&self, z: usize, seed: u64) -> Result<Vec<Point>> {
        self.sample(z, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Records the current active state; expansions made later are kept on restore.
    pub fn snapshot(&mut self) -> SnapshotToken {
        let serial = self.next_serial;
        self.next_serial += 1;
        self.markers.push((serial, self.undo.len()));
        let token = SnapshotToken { tree: self.id, serial };
        self.log(|| TreeEvent::Snapshot(token));
        token
    }

    fn marker_pos(&self, token: SnapshotToken) -> Result<usize> {
        if token.tree != self.id {
            return Err(Error::Token);
        }
        self.markers
            .iter()
            .position(|(s, _)| *s == token.serial)
            .ok_or(Error::Token)
    }

    /// Returns to the state at `token`, discarding it and every later snapshot.
    pub fn restore(&mut self, token: SnapshotToken) -> Result<()> {
        let pos = self.marker_pos(token)?;
        let len = self.markers[pos].1;
        while self.undo.len() > len {
            let (id, state) = self.undo.pop().expect("non-empty log");
            self.nodes[id].state = state;
        }
        self.markers.truncate(pos);
        if self.markers.is_empty() {
            self.undo.clear();
        }
        self.log(|| TreeEvent::Restore(token));
        Ok(())
    }

    /// Forgets `token` and every later snapshot, keeping the current state.
    pub fn release(&mut self, token: SnapshotToken) -> Result<()> {
        let pos = self.marker_pos(token)?;
        self.markers.truncate(pos);
        if self.markers.is_empty() {
            self.undo.clear();
        }
        self.log(|| TreeEvent::Release(token));
        Ok(())
    }

    /// One line per constructed node, in preorder:
    /// `depth, regionKind, box(es), active, count, genKind`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            let (kind, boxes) = match &n.geom.hole {
                None => ("box", n.geom.outer.to_string()),
                Some(h) => ("hole", format!("{} minus {}", n.geom.outer, h)),
            };
            let gen = match n.gen {
                GenKind::Root => "root",
                GenKind::Fair => "fair",
                GenKind::Shrink => "shrink",
            };
            let _ = writeln!(
                out,
                "{}, {}, {}, {}, {}, {}",
                n.depth,
                kind,
                boxes,
                u8::from(n.state.active),
                n.state.count,
                gen
            );
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// Fully expands the tree; only sensible for small inputs.
    pub fn expand_all(&mut self) -> Result<()> {
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            if self.nodes[id].leaf.is_none() && self.nodes[id].total > 0 {
                let kids = self.expand(id)?;
                stack.extend(kids);
            }
        }
        Ok(())
    }

    /// Largest node depth constructed so far.
    pub fn height(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

fn disjoint(b: &Rect, q: &Rect) -> bool {
    b.sides.iter().zip(&q.sides).any(|(s, t)| {
        let lo = Interval {
            lo: s.lo.max(t.lo),
            hi: s.hi.min(t.hi),
            lo_closed: if t.lo >= s.lo { t.lo_closed } else { true },
            hi_closed: if t.hi <= s.hi { t.hi_closed } else { true },
        };
        lo.is_empty()
    })
}

#[cfg(test)]
mod tests;
