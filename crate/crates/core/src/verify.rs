//! Brute-force ground truth for checking the tree-based algorithms.

use std::collections::HashMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::clustering::Objective;
use crate::error::{Error, Result};
use crate::geometry::{dist, dist2, Point, Region};
use crate::rbbd::{NodeId, RbbdTree, SnapshotToken, TreeEvent};
use crate::relational::Instance;

pub mod checks;
pub mod synth;

fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

/// Every join result, produced by a nested-loop join over all relations.
pub fn brute_join(inst: &Instance) -> Vec<Point> {
    let schema_len = inst.schema().len();
    let rels = inst.relations();
    let mut out = Vec::new();
    let mut assign: Vec<Option<f64>> = vec![None; schema_len];
    fn go(
        rels: &[crate::relational::Relation],
        j: usize,
        assign: &mut Vec<Option<f64>>,
        inst: &Instance,
        out: &mut Vec<Point>,
    ) {
        if j == rels.len() {
            out.push(
                inst.dims()
                    .iter()
                    .map(|a| assign[a.0].expect("every attribute bound"))
                    .collect(),
            );
            return;
        }
        let rel = &rels[j];
        for row in rel.rows() {
            if rel
                .attrs()
                .iter()
                .zip(row)
                .all(|(a, v)| assign[a.0].is_none_or(|w| w == *v))
            {
                let fresh: Vec<usize> = rel
                    .attrs()
                    .iter()
                    .filter(|a| assign[a.0].is_none())
                    .map(|a| a.0)
                    .collect();
                for (a, v) in rel.attrs().iter().zip(row) {
                    assign[a.0] = Some(*v);
                }
                go(rels, j + 1, assign, inst, out);
                for a in fresh {
                    assign[a] = None;
                }
            }
        }
    }
    go(rels, 0, &mut assign, inst, &mut out);
    out
}

/// The materialized join plus an activity mask.
#[derive(Debug, Clone)]
pub struct BruteOracle {
    pub points: Vec<Point>,
    pub active: Vec<bool>,
}

impl BruteOracle {
    pub fn new(inst: &Instance) -> Self {
        let points = brute_join(inst);
        let active = vec![true; points.len()];
        Self { points, active }
    }

    pub fn active_points(&self) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.active)
            .filter(|(_, a)| **a)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn active_in(&self, region: &Region) -> usize {
        self.points
            .iter()
            .zip(&self.active)
            .filter(|(p, a)| **a && region.contains(p))
            .count()
    }

    pub fn is_active_point(&self, p: &[f64]) -> bool {
        self.points
            .iter()
            .zip(&self.active)
            .any(|(q, a)| *a && q.as_slice() == p)
    }
}

/// Exact objective value of `centers` on `points`.
pub fn brute_cost(points: &[Point], centers: &[Point], objective: Objective) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::Domain("no centers given".into()));
    }
    let nearest2 = |p: &Point| centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min);
    Ok(match objective {
        Objective::KCenter => points.iter().map(|p| nearest2(p).sqrt()).fold(0.0, f64::max),
        Objective::KMedian => points.iter().map(|p| nearest2(p).sqrt()).sum(),
        Objective::KMeans => points.iter().map(nearest2).sum(),
    })
}

/// Relative slack for comparing two independently rounded real expressions.
pub const FLOAT_SLACK: f64 = 1e-12;

/// Largest exhaustive input for `k >= 2`.
pub const BRUTE_OPT_LIMIT: usize = 16;

/// Best `k` centers chosen among `points`, by exhaustive search.
pub fn brute_opt(points: &[Point], k: usize, objective: Objective) -> Result<(Vec<Point>, f64)> {
    if k == 0 || points.is_empty() {
        return Err(Error::Domain("need k >= 1 and a non-empty point set".into()));
    }
    let n = points.len();
    if k >= n {
        return Ok((points.to_vec(), 0.0));
    }
    if k >= 2 && n > BRUTE_OPT_LIMIT {
        return Err(Error::TooLarge(format!(
            "{n} points, at most {BRUTE_OPT_LIMIT} for k >= 2"
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let centers: Vec<Point> = idx.iter().map(|&i| points[i].clone()).collect();
        let v = brute_cost(points, &centers, objective)?;
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((idx.clone(), v));
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (idx, v) = best.expect("at least one subset");
    Ok((idx.into_iter().map(|i| points[i].clone()).collect(), v))
}

/// Distance from `p` to the nearest point of `set`.
pub fn phi(p: &[f64], set: &[Point]) -> f64 {
    set.iter().map(|s| dist(p, s)).fold(f64::INFINITY, f64::min)
}

/// Replays a tree's event log on a materialized copy of its points.
#[derive(Debug, Clone)]
pub struct TwinTracker {
    pub oracle: BruteOracle,
    saved: Vec<(SnapshotToken, Vec<bool>)>,
}

impl TwinTracker {
    pub fn new(inst: &Instance) -> Self {
        Self {
            oracle: BruteOracle::new(inst),
            saved: Vec::new(),
        }
    }

    pub fn apply(&mut self, event: &TreeEvent) -> Result<()> {
        match event {
            TreeEvent::Inactivate(regions) => {
                for (p, a) in self.oracle.points.iter().zip(self.oracle.active.iter_mut()) {
                    if regions.iter().any(|r| r.contains(p)) {
                        *a = false;
                    }
                }
            }
            TreeEvent::Snapshot(t) => self.saved.push((*t, self.oracle.active.clone())),
            TreeEvent::Restore(t) => {
                let pos = self.position(t)?;
                self.oracle.active = self.saved[pos].1.clone();
                self.saved.truncate(pos);
            }
            TreeEvent::Release(t) => {
                let pos = self.position(t)?;
                self.saved.truncate(pos);
            }
        }
        Ok(())
    }

    pub fn apply_all(&mut self, events: &[TreeEvent]) -> Result<()> {
        events.iter().try_for_each(|e| self.apply(e))
    }

    fn position(&self, t: &SnapshotToken) -> Result<usize> {
        self.saved.iter().position(|(s, _)| s == t).ok_or(Error::Token)
    }

    /// Nodes whose count or representative disagrees with the tracked active set.
    pub fn mismatches(&self, tree: &RbbdTree<'_>) -> Vec<NodeId> {
        (0..tree.node_count())
            .filter(|&id| {
                let node = tree.node(id);
                let state = node.state();
                if !node.parent().is_none_or(|p| tree.is_effectively_active(p)) {
                    return false;
                }
                let expected = self.oracle.active_in(node.region());
                if !state.active {
                    return expected != 0;
                }
                let rep_ok = state
                    .rep
                    .as_ref()
                    .is_some_and(|r| node.region().contains(r) && self.oracle.is_active_point(r));
                state.count as usize != expected || !rep_ok
            })
            .collect()
    }

    /// Whether `report` equals the tracked active set as a multiset.
    pub fn report_matches(&self, report: &[Point]) -> bool {
        multiset(report) == multiset(&self.oracle.active_points())
    }
}

pub fn multiset(points: &[Point]) -> HashMap<Vec<u64>, usize> {
    let mut m = HashMap::new();
    for p in points {
        *m.entry(point_key(p)).or_default() += 1;
    }
    m
}

/// Result of a Pearson goodness-of-fit test against uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub critical: f64,
    pub df: usize,
    pub passed: bool,
}

/// Significance level of [`chi_square_uniformity`].
pub const CHI_SQUARE_ALPHA: f64 = 1e-3;

/// Tests `samples` against uniform draws from `support`, a multiset whose
/// repeated entries carry proportionally more mass.
pub fn chi_square_uniformity(samples: &[Point], support: &[Point]) -> Result<ChiSquare> {
    let weights = multiset(support);
    if weights.len() < 2 {
        return Err(Error::Domain("support needs at least two distinct outcomes".into()));
    }
    let mut observed: HashMap<Vec<u64>, usize> = HashMap::new();
    for s in samples {
        let key = point_key(s);
        if !weights.contains_key(&key) {
            return Err(Error::ForeignSample(s.clone()));
        }
        *observed.entry(key).or_default() += 1;
    }
    let total = support.len() as f64;
    let draws = samples.len() as f64;
    let statistic = weights
        .iter()
        .map(|(key, &w)| {
            let e = draws * w as f64 / total;
            let o = observed.get(key).copied().unwrap_or(0) as f64;
            (o - e) * (o - e) / e
        })
        .sum();
    let df = weights.len() - 1;
    let critical = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(e.to_string()))?
        .inverse_cdf(1.0 - CHI_SQUARE_ALPHA);
    Ok(ChiSquare {
        statistic,
        critical,
        df,
        passed: statistic < critical,
    })
}

/// Violations of the ball sandwich by the canonical nodes `ids` of `B(x, r)`:
/// active points inside the ball left uncovered, plus covered points outside
/// the `(1+eps)` ball.
pub fn sandwich_violations(tree: &RbbdTree<'_>, oracle: &BruteOracle, ids: &[NodeId], x: &[f64], r: f64) -> usize {
    let outer = crate::geometry::slack_radius2(r, tree.epsilon());
    let mut bad = 0;
    for (p, a) in oracle.points.iter().zip(&oracle.active) {
        if !*a {
            continue;
        }
        let covered = ids.iter().any(|&i| tree.node(i).region().contains(p));
        let d2 = dist2(p, x);
        if (d2 <= r * r && !covered) || (covered && d2 > outer) {
            bad += 1;
        }
    }
    bad
}

/// Bounds on a solution's cost obtained from the tree alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Ring growth factor of [`cost_bounds`].
pub const RING_RATIO: f64 = 1.05;

/// Brackets the cost of `centers` without materializing the join: balls of
/// geometrically growing radius around every center are inactivated in turn
/// and each ring's newly covered points are charged its inner and outer radius.
pub fn cost_bounds(inst: &Instance, centers: &[Point], objective: Objective, seed: u64) -> Result<CostBounds> {
    if centers.is_empty() {
        return Err(Error::Domain("no centers given".into()));
    }
    let eps = 0.01;
    let mut tree = RbbdTree::build(inst, crate::rbbd::TreeConfig::with_epsilon(eps), seed)?;
    let far = match tree.node(tree.root()).bbox() {
        None => 0.0,
        Some(bbox) => centers
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&bbox.sides)
                    .map(|(x, side)| (x - side.lo).abs().max((x - side.hi).abs()).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max),
    };
    let p = objective.power();
    let (mut lower, mut upper) = (0.0f64, 0.0f64);
    let mut inner = 0.0;
    let mut radius = 0.0;
    while tree.active_count() > 0 {
        let mut covered = 0u64;
        for c in centers {
            covered += tree.inactive_counted(c, radius)?;
        }
        if covered > 0 {
            let outer = (1.0 + eps) * radius;
            match p {
                None => {
                    lower = lower.max(inner);
                    upper = upper.max(outer);
                }
                Some(p) => {
                    lower += covered as f64 * inner.powi(p);
                    upper += covered as f64 * outer.powi(p);
                }
            }
        }
        inner = radius;
        radius = if radius == 0.0 {
            far * 1e-6
        } else {
            (radius * RING_RATIO).min(far * (1.0 + 1e-9))
        };
    }
    Ok(CostBounds { lower, upper })
}
