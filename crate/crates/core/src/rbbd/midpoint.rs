//! Midpoint boxes: dyadic sub-boxes of a power-of-two root box, stored as
//! integer (depth, index) pairs so that splits are exact.

use serde::Serialize;

use crate::geometry::{Interval, Rect, Region};

/// Maximum number of halvings along one dimension.
pub const MAX_DEPTH: u8 = 52;

fn exp2(k: i32) -> f64 {
    2f64.powi(k)
}

/// The root box: dimension `i` spans `[lo_i, lo_i + 2^exp_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    lo: Vec<f64>,
    exp: Vec<i32>,
}

fn ceil_log2(t: f64) -> i32 {
    let mut e = t.log2().ceil() as i32;
    while exp2(e) < t {
        e += 1;
    }
    while exp2(e - 1) >= t {
        e -= 1;
    }
    e
}

impl Frame {
    /// Anchors at `lo` and pads each extent up to a power of two, at least
    /// `2^-20` of the widest extent (or 1 when every extent is zero).
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Self {
        let widest = lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let exp = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                let mut e = if widest > 0.0 {
                    ceil_log2((h - l).max(widest * exp2(-20)))
                } else {
                    0
                };
                while l + exp2(e) < h {
                    e += 1;
                }
                e
            })
            .collect();
        Self { lo: lo.to_vec(), exp }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn root(&self) -> MidpointBox {
        MidpointBox {
            depth: vec![0; self.dim()],
            index: vec![0; self.dim()],
        }
    }

    fn endpoint(&self, i: usize, depth: u8, index: u64) -> f64 {
        self.lo[i] + index as f64 * exp2(self.exp[i] - depth as i32)
    }

    fn side(&self, b: &MidpointBox, i: usize) -> Interval {
        let (dp, ix) = (b.depth[i], b.index[i]);
        Interval {
            lo: self.endpoint(i, dp, ix),
            hi: self.endpoint(i, dp, ix + 1),
            lo_closed: true,
            hi_closed: ix + 1 == 1u64 << dp,
        }
    }

    pub fn rect(&self, b: &MidpointBox) -> Rect {
        Rect::new((0..self.dim()).map(|i| self.side(b, i)).collect())
    }

    /// Dimension with the longest side, lowest index on ties; `None` at the depth cap.
    pub fn split_dim(&self, b: &MidpointBox) -> Option<usize> {
        let mut best = 0;
        for i in 1..self.dim() {
            if self.exp[i] - (b.depth[i] as i32) > self.exp[best] - (b.depth[best] as i32) {
                best = i;
            }
        }
        (self.dim() > 0 && b.depth[best] < MAX_DEPTH).then_some(best)
    }

    /// The split dimension and the coordinate of the splitting hyperplane.
    pub fn split_plane(&self, b: &MidpointBox) -> Option<(usize, f64)> {
        let i = self.split_dim(b)?;
        Some((i, self.endpoint(i, b.depth[i] + 1, 2 * b.index[i] + 1)))
    }

    /// Lower and upper halves across the longest side.
    pub fn children(&self, b: &MidpointBox) -> Option<(MidpointBox, MidpointBox)> {
        let i = self.split_dim(b)?;
        let mut lo = b.clone();
        lo.depth[i] += 1;
        lo.index[i] *= 2;
        let mut hi = lo.clone();
        hi.index[i] += 1;
        Some((lo, hi))
    }
}

/// A dyadic descendant of the frame's root box.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MidpointBox {
    depth: Vec<u8>,
    index: Vec<u64>,
}

impl MidpointBox {
    pub fn depths(&self) -> &[u8] {
        &self.depth
    }

    /// Whether `other` is a descendant of (or equal to) `self`.
    pub fn contains_box(&self, other: &MidpointBox) -> bool {
        self.depth
            .iter()
            .zip(&self.index)
            .zip(other.depth.iter().zip(&other.index))
            .all(|((&da, &ia), (&db, &ib))| db >= da && ib >> (db - da) == ia)
    }
}

/// A node's region: a midpoint box, optionally minus a midpoint hole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeRegion {
    pub outer: MidpointBox,
    pub hole: Option<MidpointBox>,
}

impl NodeRegion {
    pub fn rect(outer: MidpointBox) -> Self {
        Self { outer, hole: None }
    }

    pub fn with_hole(outer: MidpointBox, hole: MidpointBox) -> Self {
        Self {
            outer,
            hole: Some(hole),
        }
    }

    pub fn to_region(&self, frame: &Frame) -> Region {
        Region {
            outer: frame.rect(&self.outer),
            hole: self.hole.as_ref().map(|h| frame.rect(h)),
        }
    }
}

/// Which half of `b` (split per [`Frame::split_plane`]) holds `p`; `p` must lie in `b`.
pub(crate) fn upper_half(plane: (usize, f64), p: &[f64]) -> bool {
    p[plane.0] >= plane.1
}

/// The smallest midpoint box inside `within` holding every point and `must_contain`.
pub fn smallest_midpoint_box<P: AsRef<[f64]>>(
    frame: &Frame,
    points: &[P],
    must_contain: Option<&MidpointBox>,
    within: &MidpointBox,
) -> MidpointBox {
    let mut cur = within.clone();
    while let Some(plane) = frame.split_plane(&cur) {
        let (lo, hi) = frame.children(&cur).expect("splittable");
        let all_upper = points.iter().all(|p| upper_half(plane, p.as_ref()));
        let all_lower = points.iter().all(|p| !upper_half(plane, p.as_ref()));
        let next = match must_contain {
            Some(h) if lo.contains_box(h) => all_lower.then_some(lo),
            Some(h) if hi.contains_box(h) => all_upper.then_some(hi),
            Some(_) => None,
            None if all_lower => Some(lo),
            None if all_upper => Some(hi),
            None => None,
        };
        match next {
            Some(b) => cur = b,
            None => break,
        }
    }
    cur
}
