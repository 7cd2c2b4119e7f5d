//! Range oracles over the join result: count, sample, report and a
//! representative, for boxes and for boxes with a hole.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Interval, Point, Rect, Region};
use crate::relational::join::{select_rect, Counted};
use crate::relational::{sub_instance, Instance};

fn check_arity(inst: &Instance, rect: &Rect) -> Result<()> {
    if rect.dim() != inst.dim() {
        return Err(Error::BoxArity {
            expected: inst.dim(),
            got: rect.dim(),
        });
    }
    Ok(())
}

/// Join counts over each disjoint box of a region.
pub(crate) struct RegionCounts<'a> {
    pieces: Vec<Counted<'a>>,
    cum: Vec<u64>,
}

impl<'a> RegionCounts<'a> {
    pub(crate) fn rect(inst: &'a Instance, rect: &Rect) -> Result<Self> {
        Self::from_pieces(inst, std::slice::from_ref(rect))
    }

    pub(crate) fn region(inst: &'a Instance, region: &Region) -> Result<Self> {
        Self::from_pieces(inst, &region.pieces()?)
    }

    pub(crate) fn from_pieces(inst: &'a Instance, rects: &[Rect]) -> Result<Self> {
        let mut pieces = Vec::with_capacity(rects.len());
        let mut cum = Vec::with_capacity(rects.len());
        let mut acc = 0u64;
        for r in rects {
            check_arity(inst, r)?;
            let c = Counted::new(inst, select_rect(inst, r))?;
            acc = acc.checked_add(c.total()).ok_or(Error::CountOverflow)?;
            cum.push(acc);
            pieces.push(c);
        }
        Ok(Self { pieces, cum })
    }

    pub(crate) fn total(&self) -> u64 {
        self.cum.last().copied().unwrap_or(0)
    }

    /// Picks a box with probability proportional to its count, then a result in it.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let r = rng.random_range(0..total);
        self.pieces[self.cum.partition_point(|&c| c <= r)].sample(rng)
    }

    pub(crate) fn repr(&self) -> Option<Point> {
        self.pieces.iter().find_map(Counted::repr)
    }

    pub(crate) fn report_into(&self, out: &mut Vec<Point>) {
        for p in &self.pieces {
            p.report_into(None, out);
        }
    }

    pub(crate) fn bbox(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.pieces
            .iter()
            .filter_map(Counted::bbox)
            .reduce(|(mut lo, mut hi), (l, h)| {
                for i in 0..lo.len() {
                    lo[i] = lo[i].min(l[i]);
                    hi[i] = hi[i].max(h[i]);
                }
                (lo, hi)
            })
    }
}

/// The sub-instance whose join is `q(D)` restricted to `rect`.
pub fn filter_by_box(inst: &Instance, rect: &Rect) -> Result<Instance> {
    check_arity(inst, rect)?;
    Ok(sub_instance(inst, &select_rect(inst, rect), false))
}

/// `|q(D) ∩ rect|`.
pub fn count_rect(inst: &Instance, rect: &Rect) -> Result<u64> {
    Ok(RegionCounts::rect(inst, rect)?.total())
}

/// `z` independent uniform draws with replacement from `q(D) ∩ rect`.
pub fn sample_rect(inst: &Instance, rect: &Rect, z: usize, seed: u64) -> Result<Vec<Point>> {
    sample_rect_with(inst, rect, z, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_rect_with<R: Rng + ?Sized>(inst: &Instance, rect: &Rect, z: usize, rng: &mut R) -> Result<Vec<Point>> {
    draw(&RegionCounts::rect(inst, rect)?, z, rng)
}

fn draw<R: Rng + ?Sized>(rc: &RegionCounts<'_>, z: usize, rng: &mut R) -> Result<Vec<Point>> {
    if z == 0 {
        return Ok(Vec::new());
    }
    if rc.total() == 0 {
        return Err(Error::EmptyRange);
    }
    Ok((0..z).map(|_| rc.sample(rng).expect("non-empty")).collect())
}

/// Every result in `q(D) ∩ rect`, duplicates kept under projection.
pub fn report_rect(inst: &Instance, rect: &Rect) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    RegionCounts::rect(inst, rect)?.report_into(&mut out);
    Ok(out)
}

/// The first result inside `rect` in join traversal order.
pub fn repr_rect(inst: &Instance, rect: &Rect) -> Result<Option<Point>> {
    Ok(RegionCounts::rect(inst, rect)?.repr())
}

/// Which oracle [`region_query`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Count,
    Sample { z: usize, seed: u64 },
    Report,
    Repr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryAnswer {
    Count(u64),
    Points(Vec<Point>),
    Repr(Option<Point>),
}

/// Any of the four oracles over a box or a box with a hole.
pub fn region_query(kind: QueryKind, inst: &Instance, region: &Region) -> Result<QueryAnswer> {
    check_arity(inst, &region.outer)?;
    let rc = RegionCounts::region(inst, region)?;
    Ok(match kind {
        QueryKind::Count => QueryAnswer::Count(rc.total()),
        QueryKind::Sample { z, seed } => QueryAnswer::Points(draw(&rc, z, &mut ChaCha8Rng::seed_from_u64(seed))?),
        QueryKind::Report => {
            let mut out = Vec::new();
            rc.report_into(&mut out);
            QueryAnswer::Points(out)
        }
        QueryKind::Repr => QueryAnswer::Repr(rc.repr()),
    })
}

/// Parses `ATTR:lo..hi,...` into a closed box; unnamed dimensions are unbounded.
pub fn parse_box_literal(inst: &Instance, literal: &str) -> Result<Rect> {
    let names = inst.dim_names();
    let mut rect = Rect::unbounded(names.len());
    let mut seen = vec![false; names.len()];
    for part in literal.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (attr, range) = part
            .split_once(':')
            .ok_or_else(|| Error::BoxLiteral(format!("expected ATTR:lo..hi, got {part:?}")))?;
        let attr = attr.trim();
        let d = names
            .iter()
            .position(|n| n == attr)
            .ok_or_else(|| Error::BoxLiteral(format!("{attr} is not a clustering attribute")))?;
        if std::mem::replace(&mut seen[d], true) {
            return Err(Error::BoxLiteral(format!("{attr} constrained twice")));
        }
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| Error::BoxLiteral(format!("expected lo..hi, got {range:?}")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .ok_or_else(|| Error::BoxLiteral(format!("bad bound {s:?}")))
        };
        rect.sides[d] = Interval::closed(num(lo)?, num(hi)?);
    }
    Ok(rect)
}
