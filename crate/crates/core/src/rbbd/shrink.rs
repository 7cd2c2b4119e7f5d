use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use crate::oracles::RegionCounts;
use crate::rbbd::midpoint::{smallest_midpoint_box, upper_half, MidpointBox, NodeRegion};
use crate::rbbd::{GenKind, NodeId, RbbdTree};

/// What one randomized centroid shrink produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkOutcome {
    /// The part of the node's region inside the final majority box.
    pub balanced: Option<Region>,
    /// Fraction of the samples inside `balanced`.
    pub sample_fraction: Option<f64>,
    /// Number of nodes created (2, 4 or 6; 2 after a fair-split fallback).
    pub nodes_created: usize,
    /// All samples coincided, so a fair split was used instead.
    pub fell_back: bool,
}

struct Step<'p> {
    rho1: MidpointBox,
    hat: MidpointBox,
    other: MidpointBox,
    hat_pts: Vec<&'p Point>,
}

impl RbbdTree<'_> {
    /// Smallest box around `pts` (and `hole`) inside `cur`, split once; the
    /// half with more samples wins, ties going to the hole side or else the lower half.
    fn majority_split<'p>(&self, cur: &MidpointBox, pts: &[&'p Point], hole: Option<&MidpointBox>) -> Option<Step<'p>> {
        let rho1 = smallest_midpoint_box(&self.frame, pts, hole, cur);
        let plane = self.frame.split_plane(&rho1)?;
        let (lo, hi) = self.frame.children(&rho1)?;
        let (upper, lower): (Vec<&Point>, Vec<&Point>) = pts.iter().copied().partition(|p| upper_half(plane, p));
        let hole_upper = hole.map(|h| hi.contains_box(h));
        let take_upper = match upper.len().cmp(&lower.len()) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => hole_upper.unwrap_or(false),
        };
        Some(if take_upper {
            Step {
                rho1,
                hat: hi,
                other: lo,
                hat_pts: upper,
            }
        } else {
            Step {
                rho1,
                hat: lo,
                other: hi,
                hat_pts: lower,
            }
        })
    }

    /// Repeats [`Self::majority_split`] inside `start` until the majority box
    /// holds at most two thirds of `total` samples.
    fn shrink_plain(&self, start: &MidpointBox, pts: Vec<&Point>, total: usize) -> Option<(MidpointBox, usize)> {
        let mut cur = start.clone();
        let mut cur_pts = pts;
        loop {
            let step = self.majority_split(&cur, &cur_pts, None)?;
            if 3 * step.hat_pts.len() <= 2 * total {
                return Some((step.hat, step.hat_pts.len()));
            }
            cur = step.hat;
            cur_pts = step.hat_pts;
        }
    }

    fn attach(&mut self, parent: NodeId, regions: Vec<NodeRegion>) -> Result<Vec<NodeId>> {
        let depth = self.nodes[parent].depth + 1;
        let mut ids = Vec::with_capacity(regions.len());
        for r in regions {
            ids.push(self.make_node(r, Some(parent), GenKind::Shrink, depth)?);
        }
        self.nodes[parent].children = ids.clone();
        Ok(ids)
    }

    /// Expands `id` by a centroid shrink driven by `Λ` uniform samples of its region.
    pub fn randomized_centroid_shrink(&mut self, id: NodeId) -> Result<ShrinkOutcome> {
        if !self.nodes[id].children.is_empty() {
            return Err(Error::InternalGeometry(format!("node {id} is already expanded")));
        }
        if self.nodes[id].leaf.is_some() {
            return Err(Error::ExpandOnLeaf(id));
        }
        let region = self.nodes[id].region.clone();
        let samples: Vec<Point> = {
            let rc = RegionCounts::region(self.inst, &self.nodes[id].geom)?;
            (0..self.lambda)
                .map(|_| rc.sample(&mut self.rng))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::InternalGeometry(format!("node {id} has an empty region")))?
        };
        let total = samples.len();
        let all: Vec<&Point> = samples.iter().collect();
        self.stats.shrinks += 1;

        let outer = region.outer.clone();
        let Some(hole) = region.hole.clone() else {
            return match self.shrink_plain(&outer, all, total) {
                Some((hat, k)) => {
                    self.attach(
                        id,
                        vec![NodeRegion::rect(hat.clone()), NodeRegion::with_hole(outer, hat.clone())],
                    )?;
                    Ok(self.outcome(NodeRegion::rect(hat), k, total, 2))
                }
                None => self.fall_back(id),
            };
        };

        let mut cur = outer.clone();
        let mut cur_pts = all;
        loop {
            let Some(step) = self.majority_split(&cur, &cur_pts, Some(&hole)) else {
                if cur == outer {
                    return self.fall_back(id);
                }
                // Samples coincide inside `cur`; keep the unbalanced but valid cut.
                let k = cur_pts.len();
                self.attach(
                    id,
                    vec![
                        NodeRegion::with_hole(outer, cur.clone()),
                        NodeRegion::with_hole(cur.clone(), hole.clone()),
                    ],
                )?;
                return Ok(self.outcome(NodeRegion::with_hole(cur, hole), k, total, 2));
            };
            if step.hat.contains_box(&hole) {
                if 3 * step.hat_pts.len() <= 2 * total {
                    let k = step.hat_pts.len();
                    self.attach(
                        id,
                        vec![
                            NodeRegion::with_hole(outer, step.hat.clone()),
                            NodeRegion::with_hole(step.hat.clone(), hole.clone()),
                        ],
                    )?;
                    return Ok(self.outcome(NodeRegion::with_hole(step.hat, hole), k, total, 2));
                }
                cur = step.hat;
                cur_pts = step.hat_pts;
                continue;
            }

            // The majority box escaped the hole.
            let Step {
                rho1,
                hat,
                other,
                hat_pts,
            } = step;
            let mut created = 0;
            let v = if rho1 == outer {
                id
            } else {
                let kids = self.attach(
                    id,
                    vec![
                        NodeRegion::with_hole(outer, rho1.clone()),
                        NodeRegion::with_hole(rho1.clone(), hole.clone()),
                    ],
                )?;
                created += 2;
                kids[1]
            };
            let kids = self.attach(
                v,
                vec![
                    NodeRegion::rect(hat.clone()),
                    NodeRegion::with_hole(other, hole.clone()),
                ],
            )?;
            created += 2;
            let v1 = kids[0];
            let k = hat_pts.len();
            if 3 * k <= 2 * total {
                return Ok(self.outcome(NodeRegion::rect(hat), k, total, created));
            }
            return Ok(match self.shrink_plain(&hat, hat_pts, total) {
                Some((hat2, k2)) => {
                    self.attach(
                        v1,
                        vec![NodeRegion::rect(hat2.clone()), NodeRegion::with_hole(hat, hat2.clone())],
                    )?;
                    self.outcome(NodeRegion::rect(hat2), k2, total, created + 2)
                }
                None => self.outcome(NodeRegion::rect(hat), k, total, created),
            });
        }
    }

    fn outcome(&self, balanced: NodeRegion, k: usize, total: usize, nodes_created: usize) -> ShrinkOutcome {
        ShrinkOutcome {
            balanced: Some(balanced.to_region(&self.frame)),
            sample_fraction: Some(k as f64 / total as f64),
            nodes_created,
            fell_back: false,
        }
    }

    fn fall_back(&mut self, id: NodeId) -> Result<ShrinkOutcome> {
        self.stats.shrink_fallbacks += 1;
        self.stats.fair_splits += 1;
        self.stats.shrinks -= 1;
        let region = self.nodes[id].region.clone();
        let (a, b) = self.frame.children(&region.outer).ok_or(Error::ExpandOnLeaf(id))?;
        let regions = match region.hole {
            None => vec![NodeRegion::rect(a), NodeRegion::rect(b)],
            Some(h) if a.contains_box(&h) => vec![NodeRegion::with_hole(a, h), NodeRegion::rect(b)],
            Some(h) if b.contains_box(&h) => vec![NodeRegion::rect(a), NodeRegion::with_hole(b, h)],
            Some(_) => {
                return Err(Error::InternalGeometry(format!(
                    "split of node {id} cuts through its hole"
                )))
            }
        };
        self.attach(id, regions)?;
        Ok(ShrinkOutcome {
            balanced: None,
            sample_fraction: None,
            nodes_created: 2,
            fell_back: true,
        })
    }
}
