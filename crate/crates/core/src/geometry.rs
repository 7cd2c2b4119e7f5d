//! Axis-parallel boxes, boxes with a hole, and the distance helpers the
//! tree queries are built from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the clustering space.
pub type Point = Vec<f64>;

/// Squared Euclidean distance. All ball tests compare squared values so that
/// a point inside a box never measures farther than the box's far corner.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Chebyshev distance.
pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Squared radius threshold `((1+eps) r)^2`, infinite for infinite `r`.
pub fn slack_radius2(r: f64, eps: f64) -> f64 {
    let s = (1.0 + eps) * r;
    s * s
}

/// One side of a box, with independent closedness of each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn unbounded() -> Self {
        Self::closed(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Whether `other` is a subset of `self` (empty intervals are subsets of anything).
    pub fn covers(&self, other: &Interval) -> bool {
        if other.is_empty() {
            return true;
        }
        let lo_ok = other.lo > self.lo || (other.lo == self.lo && (self.lo_closed || !other.lo_closed));
        let hi_ok = other.hi < self.hi || (other.hi == self.hi && (self.hi_closed || !other.hi_closed));
        lo_ok && hi_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}..{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// An axis-parallel box: one interval per clustering dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub sides: Vec<Interval>,
}

impl Rect {
    pub fn new(sides: Vec<Interval>) -> Self {
        Self { sides }
    }

    /// The box covering all of `R^d`.
    pub fn unbounded(d: usize) -> Self {
        Self::new(vec![Interval::unbounded(); d])
    }

    pub fn closed(lo: &[f64], hi: &[f64]) -> Self {
        Self::new(lo.iter().zip(hi).map(|(l, h)| Interval::closed(*l, *h)).collect())
    }

    /// The degenerate closed box holding exactly `p`.
    pub fn point(p: &[f64]) -> Self {
        Self::closed(p, p)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.sides.iter().zip(p).all(|(s, x)| s.contains(*x))
    }

    pub fn covers(&self, other: &Rect) -> bool {
        other.is_empty() || self.sides.iter().zip(&other.sides).all(|(a, b)| a.covers(b))
    }

    /// Squared distance from `x` to the closure of the box.
    pub fn min_dist2(&self, x: &[f64]) -> f64 {
        self.sides
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let g = if *v < s.lo {
                    s.lo - v
                } else if *v > s.hi {
                    v - s.hi
                } else {
                    0.0
                };
                g * g
            })
            .sum()
    }

    /// Squared distance from `x` to the farthest corner of the box.
    pub fn max_dist2(&self, x: &[f64]) -> f64 {
        self.sides
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let g = (v - s.lo).abs().max((v - s.hi).abs());
                g * g
            })
            .sum()
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A box, or the difference of an outer box and an inner hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub outer: Rect,
    pub hole: Option<Rect>,
}

impl Region {
    pub fn rect(outer: Rect) -> Self {
        Self { outer, hole: None }
    }

    pub fn with_hole(outer: Rect, hole: Rect) -> Self {
        Self {
            outer,
            hole: Some(hole),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.outer.contains(p) && !self.hole.as_ref().is_some_and(|h| h.contains(p))
    }

    /// The region as disjoint boxes: the outer box alone, or [`decompose_hole`].
    pub fn pieces(&self) -> Result<Vec<Rect>> {
        match &self.hole {
            None if self.outer.is_empty() => Ok(Vec::new()),
            None => Ok(vec![self.outer.clone()]),
            Some(_) => decompose_hole(self),
        }
    }
}

/// Splits `outer \ hole` into at most `2d` disjoint boxes.
///
/// Dimensions are peeled in ascending order: for dimension `i` the slab below
/// the hole and the slab above it are emitted, then the working box is
/// narrowed to the hole's extent in `i`. Empty slabs are dropped.
pub fn decompose_hole(region: &Region) -> Result<Vec<Rect>> {
    let Some(hole) = &region.hole else {
        return Err(Error::Geometry("region has no hole".into()));
    };
    let outer = &region.outer;
    if hole.dim() != outer.dim() {
        return Err(Error::Geometry("hole and outer box differ in dimension".into()));
    }
    if hole.is_empty() {
        return Ok(if outer.is_empty() {
            Vec::new()
        } else {
            vec![outer.clone()]
        });
    }
    if !outer.covers(hole) {
        return Err(Error::Geometry(format!("hole {hole} is not inside {outer}")));
    }
    let mut out = Vec::with_capacity(2 * outer.dim());
    let mut cur = outer.clone();
    for i in 0..outer.dim() {
        let h = hole.sides[i];
        let c = cur.sides[i];
        let mut below = cur.clone();
        below.sides[i] = Interval {
            lo: c.lo,
            hi: h.lo,
            lo_closed: c.lo_closed,
            hi_closed: !h.lo_closed,
        };
        let mut above = cur.clone();
        above.sides[i] = Interval {
            lo: h.hi,
            hi: c.hi,
            lo_closed: !h.hi_closed,
            hi_closed: c.hi_closed,
        };
        for piece in [below, above] {
            if !piece.is_empty() {
                out.push(piece);
            }
        }
        cur.sides[i] = h;
    }
    Ok(out)
}
