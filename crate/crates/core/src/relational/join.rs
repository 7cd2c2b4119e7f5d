//! Counting, sampling and enumeration over a join tree restricted to a row
//! selection, in the style of Yannakakis: one bottom-up counting pass, then
//! top-down walks that reuse the per-row subtree counts.

use std::collections::HashMap;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::relational::instance::{key_bits, Instance};

/// Selected row ids, one list per relation.
pub(crate) type Selection = Vec<Vec<u32>>;

type Key = SmallVec<[u64; 2]>;

const NONE: u32 = u32::MAX;

fn key_of(row: &[f64], cols: &[usize]) -> Key {
    cols.iter().map(|&c| key_bits(row[c])).collect()
}

pub(crate) fn select_all(inst: &Instance) -> Selection {
    inst.relations().iter().map(|r| (0..r.len() as u32).collect()).collect()
}

/// Rows whose clustering coordinates all fall inside `rect`.
pub(crate) fn select_rect(inst: &Instance, rect: &Rect) -> Selection {
    if rect.is_empty() {
        return vec![Vec::new(); inst.relation_count()];
    }
    inst.relations()
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let dims = inst.col_dims(j);
            (0..r.len())
                .filter(|&i| {
                    let row = r.row(i);
                    dims.iter()
                        .zip(row)
                        .all(|(d, v)| d.is_none_or(|d| rect.sides[d].contains(*v)))
                })
                .map(|i| i as u32)
                .collect()
        })
        .collect()
}

/// Rows of a selected relation that share a join key with one parent row.
struct Group {
    /// Positions into the relation's selection, with positive weight only.
    members: Vec<u32>,
    /// Inclusive prefix sums of member weights.
    cum: Vec<u64>,
}

impl Group {
    fn total(&self) -> u64 {
        self.cum.last().copied().unwrap_or(0)
    }

    fn pick(&self, r: u64) -> u32 {
        self.members[self.cum.partition_point(|&c| c <= r)]
    }
}

/// Join counts over a selection, ready for sampling and enumeration.
pub(crate) struct Counted<'a> {
    inst: &'a Instance,
    sel: Selection,
    groups: Vec<Vec<Group>>,
    /// `child_group[j][ci][p]`: group of child `ci` matching row position `p` of `j`.
    child_group: Vec<Vec<Vec<u32>>>,
    root: Group,
}

impl<'a> Counted<'a> {
    pub(crate) fn new(inst: &'a Instance, sel: Selection) -> Result<Self> {
        let tree = inst.tree();
        let m = inst.relation_count();
        let mut root_weight = Vec::new();
        let mut groups: Vec<Vec<Group>> = (0..m).map(|_| Vec::new()).collect();
        let mut index: Vec<HashMap<Key, u32>> = vec![HashMap::new(); m];
        let mut child_group: Vec<Vec<Vec<u32>>> = vec![Vec::new(); m];

        for &j in tree.preorder().iter().rev() {
            let rel = inst.relation(j);
            let children = tree.children(j);
            let mut w = vec![1u64; sel[j].len()];
            let mut cg = vec![vec![NONE; sel[j].len()]; children.len()];
            for (ci, &c) in children.iter().enumerate() {
                let link = tree.link(c).expect("child has a link");
                for (p, &row) in sel[j].iter().enumerate() {
                    if w[p] == 0 {
                        continue;
                    }
                    let key = key_of(rel.row(row as usize), &link.parent_cols);
                    match index[c].get(&key) {
                        Some(&g) => {
                            cg[ci][p] = g;
                            w[p] = w[p]
                                .checked_mul(groups[c][g as usize].total())
                                .ok_or(Error::CountOverflow)?;
                        }
                        None => w[p] = 0,
                    }
                }
            }
            if let Some(link) = tree.link(j) {
                for (p, &row) in sel[j].iter().enumerate() {
                    if w[p] == 0 {
                        continue;
                    }
                    let key = key_of(rel.row(row as usize), &link.child_cols);
                    let next = groups[j].len() as u32;
                    let g = *index[j].entry(key).or_insert(next);
                    if g == next {
                        groups[j].push(Group {
                            members: Vec::new(),
                            cum: Vec::new(),
                        });
                    }
                    let grp = &mut groups[j][g as usize];
                    let acc = grp.total().checked_add(w[p]).ok_or(Error::CountOverflow)?;
                    grp.members.push(p as u32);
                    grp.cum.push(acc);
                }
            }
            if j == tree.root() {
                root_weight = w;
            }
            child_group[j] = cg;
        }

        let mut root = Group {
            members: Vec::new(),
            cum: Vec::new(),
        };
        for (p, &w) in root_weight.iter().enumerate() {
            if w > 0 {
                let acc = root.total().checked_add(w).ok_or(Error::CountOverflow)?;
                root.members.push(p as u32);
                root.cum.push(acc);
            }
        }
        Ok(Self {
            inst,
            sel,
            groups,
            child_group,
            root,
        })
    }

    pub(crate) fn total(&self) -> u64 {
        self.root.total()
    }

    fn group_below(&self, j: usize, p: u32, c: usize) -> &Group {
        let ci = self.inst.tree().children(j).iter().position(|&x| x == c).unwrap();
        &self.groups[c][self.child_group[j][ci][p as usize] as usize]
    }

    fn point(&self, pos: &[u32]) -> Point {
        self.inst
            .coord_src()
            .iter()
            .map(|&(j, col)| self.inst.relation(j).row(self.sel[j][pos[j] as usize] as usize)[col])
            .collect()
    }

    /// One uniform draw from the join result; `None` if the result is empty.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let tree = self.inst.tree();
        let mut pos = vec![0u32; self.inst.relation_count()];
        pos[tree.root()] = self.root.pick(rng.random_range(0..total));
        for &j in &tree.preorder()[1..] {
            let p = tree.parent(j).unwrap();
            let g = self.group_below(p, pos[p], j);
            pos[j] = g.pick(rng.random_range(0..g.total()));
        }
        Some(self.point(&pos))
    }

    /// The first result in traversal order.
    pub(crate) fn repr(&self) -> Option<Point> {
        let tree = self.inst.tree();
        let first = *self.root.members.first()?;
        let mut pos = vec![0u32; self.inst.relation_count()];
        pos[tree.root()] = first;
        for &j in &tree.preorder()[1..] {
            let p = tree.parent(j).unwrap();
            pos[j] = self.group_below(p, pos[p], j).members[0];
        }
        Some(self.point(&pos))
    }

    /// Appends up to `limit` results to `out`, in traversal order.
    pub(crate) fn report_into(&self, limit: Option<usize>, out: &mut Vec<Point>) {
        let mut pos = vec![0u32; self.inst.relation_count()];
        let mut budget = limit.unwrap_or(usize::MAX);
        let tree = self.inst.tree();
        for &p in &self.root.members {
            if budget == 0 {
                return;
            }
            pos[tree.root()] = p;
            self.enumerate(1, &mut pos, &mut budget, out);
        }
    }

    pub(crate) fn report(&self, limit: Option<usize>) -> Vec<Point> {
        let mut out = Vec::new();
        self.report_into(limit, &mut out);
        out
    }

    fn enumerate(&self, t: usize, pos: &mut [u32], budget: &mut usize, out: &mut Vec<Point>) {
        let tree = self.inst.tree();
        if t == tree.preorder().len() {
            out.push(self.point(pos));
            *budget -= 1;
            return;
        }
        let j = tree.preorder()[t];
        let p = tree.parent(j).unwrap();
        let members = &self.group_below(p, pos[p], j).members;
        for &q in members {
            if *budget == 0 {
                return;
            }
            pos[j] = q;
            self.enumerate(t + 1, pos, budget, out);
        }
    }

    /// Per relation, which selected rows take part in at least one result.
    fn alive(&self) -> Vec<Vec<bool>> {
        let tree = self.inst.tree();
        let m = self.inst.relation_count();
        let mut alive: Vec<Vec<bool>> = (0..m).map(|j| vec![false; self.sel[j].len()]).collect();
        for &p in &self.root.members {
            alive[tree.root()][p as usize] = true;
        }
        for &j in &tree.preorder()[1..] {
            let p = tree.parent(j).unwrap();
            let ci = tree.children(p).iter().position(|&x| x == j).unwrap();
            let mut seen = vec![false; self.groups[j].len()];
            for (pp, a) in alive[p].iter().enumerate() {
                if *a {
                    seen[self.child_group[p][ci][pp] as usize] = true;
                }
            }
            let mut mine = vec![false; self.sel[j].len()];
            for (g, s) in seen.iter().enumerate() {
                if *s {
                    for &q in &self.groups[j][g].members {
                        mine[q as usize] = true;
                    }
                }
            }
            alive[j] = mine;
        }
        alive
    }

    /// The selection with dangling rows removed.
    pub(crate) fn reduced_selection(&self) -> Selection {
        self.alive()
            .iter()
            .zip(&self.sel)
            .map(|(a, s)| s.iter().zip(a).filter(|(_, a)| **a).map(|(r, _)| *r).collect())
            .collect()
    }

    /// Per-dimension bounds of the result, or `None` if it is empty.
    pub(crate) fn bbox(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.total() == 0 {
            return None;
        }
        let alive = self.alive();
        let d = self.inst.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (i, &(j, col)) in self.inst.coord_src().iter().enumerate() {
            let rel = self.inst.relation(j);
            for (p, &row) in self.sel[j].iter().enumerate() {
                if alive[j][p] {
                    let v = rel.row(row as usize)[col];
                    lo[i] = lo[i].min(v);
                    hi[i] = hi[i].max(v);
                }
            }
        }
        Some((lo, hi))
    }
}
