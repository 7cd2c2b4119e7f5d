//! Farthest-point selection, approximate Gonzalez and diversity objectives.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::clustering::{derive_seed, kcenter_refined, kth_pairwise_sorted, projection_values, sig12};
use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::rbbd::{RbbdTree, TreeConfig};
use crate::relational::{count_join, enumerate_join, Instance};

/// Whether some point stays active after inactivating `B(s, r)` for every `s`;
/// returns that point. The tree state is left unchanged.
fn uncovered(tree: &mut RbbdTree<'_>, centers: &[Point], r: f64) -> Result<Option<Point>> {
    let token = tree.snapshot();
    let mut result = Ok(());
    for s in centers {
        if let Err(e) = tree.inactive(s, r) {
            result = Err(e);
            break;
        }
    }
    let rep = tree.rep();
    tree.restore(token)?;
    result.map(|()| rep)
}

/// Largest index in `0..len` whose probe yields a point, given that index 0 does.
fn last_uncovered<F>(len: usize, first: Point, mut probe: F) -> Result<(usize, Point)>
where
    F: FnMut(usize) -> Result<Option<Point>>,
{
    let (mut lo, mut hi) = (0, len - 1);
    let mut best = first;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        match probe(mid)? {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid - 1,
        }
    }
    Ok((lo, best))
}

/// Farthest-point search over a tree built with slack `eps / 2`; `values`
/// are the sorted distinct coordinate values from [`projection_values`].
pub fn farthest_point_on(tree: &mut RbbdTree<'_>, centers: &[Point], epsilon: f64, values: &[f64]) -> Result<Point> {
    let eps = epsilon / 2.0;
    let Some(p0) = uncovered(tree, centers, 0.0)? else {
        return Err(Error::NoCandidate);
    };
    let pairs = values.len() * values.len().saturating_sub(1) / 2;
    let value = |z: usize| -> Result<f64> {
        Ok(if z == 0 {
            0.0
        } else {
            kth_pairwise_sorted(values, z as u64)?
        })
    };
    let (z, p) = last_uncovered(pairs + 1, p0, |z| uncovered(tree, centers, value(z)?))?;
    if z == 0 {
        return Ok(p);
    }
    let lo = value(z)?;
    let hi = if z < pairs {
        value(z + 1)?
    } else {
        (tree.instance().dim() as f64).sqrt() * lo
    };
    let mut grid = vec![lo];
    while *grid.last().expect("non-empty") < hi {
        let next = grid.last().expect("non-empty") * (1.0 + eps);
        grid.push(next.min(hi));
    }
    let (_, p) = last_uncovered(grid.len(), p, |i| uncovered(tree, centers, grid[i]))?;
    Ok(p)
}

/// A join result whose distance to `centers` is at least `(1 - eps)` times the largest.
pub fn farthest_point(inst: &Instance, centers: &[Point], epsilon: f64, seed: u64) -> Result<Point> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(epsilon / 2.0), seed)?;
    farthest_point_on(&mut tree, centers, epsilon, &projection_values(inst))
}

/// Points picked by Gonzalez, with the distance of each pick to the earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GonzalezRun {
    pub points: Vec<Point>,
    pub step_distances: Vec<f64>,
    /// Size of the candidate set the in-memory phase ran on.
    pub candidates: usize,
}

/// Exact farthest-first traversal of `candidates` for up to `k` steps, starting at the first.
pub fn gonzalez_in_memory(candidates: &[Point], k: usize) -> (Vec<Point>, Vec<f64>) {
    let mut picked = Vec::new();
    let mut steps = Vec::new();
    if candidates.is_empty() || k == 0 {
        return (picked, steps);
    }
    let mut near: Vec<f64> = vec![f64::INFINITY; candidates.len()];
    let mut used = vec![false; candidates.len()];
    let mut next = 0;
    let mut d_next = f64::INFINITY;
    while picked.len() < k.min(candidates.len()) {
        used[next] = true;
        picked.push(candidates[next].clone());
        steps.push(d_next);
        for (i, c) in candidates.iter().enumerate() {
            near[i] = near[i].min(dist(c, &candidates[next]));
        }
        let best = (0..candidates.len())
            .filter(|&i| !used[i])
            .max_by(|&a, &b| near[a].total_cmp(&near[b]).then(b.cmp(&a)));
        match best {
            Some(i) => {
                next = i;
                d_next = near[i];
            }
            None => break,
        }
    }
    (picked, steps)
}

/// Multiplier of `eps^-d` in the candidate-set size.
pub const CANDIDATE_CONSTANT: f64 = 1.0;

/// `k` join results forming an approximate Gonzalez sequence: each pick is at
/// least `(1 - eps)` times as far from the earlier picks as the farthest point.
pub fn gonzalez_approx(inst: &Instance, k: usize, epsilon: f64, seed: u64) -> Result<GonzalezRun> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = count_join(inst)?;
    if n == 0 {
        return Err(Error::EmptyJoin);
    }
    if k == 0 || k as u64 > n {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={n}")));
    }
    let factor = (CANDIDATE_CONSTANT * epsilon.powi(-(inst.dim() as i32))).ceil();
    let wanted = (k as f64 * factor).min(n as f64) as usize;
    let candidates = if wanted as u64 >= n {
        enumerate_join(inst, None)?
    } else {
        kcenter_refined(inst, wanted, epsilon, derive_seed(seed, 4))?.centers
    };
    let (mut points, mut step_distances) = gonzalez_in_memory(&candidates, k);
    if points.len() < k {
        let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(epsilon / 2.0), derive_seed(seed, 5))?;
        let values = projection_values(inst);
        while points.len() < k {
            let p = match farthest_point_on(&mut tree, &points, epsilon, &values) {
                Ok(p) => p,
                Err(Error::NoCandidate) => points[0].clone(),
                Err(e) => return Err(e),
            };
            step_distances.push(points.iter().map(|s| dist(s, &p)).fold(f64::INFINITY, f64::min));
            points.push(p);
        }
    }
    Ok(GonzalezRun {
        points,
        step_distances,
        candidates: candidates.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiversityObjective {
    /// Minimum pairwise distance.
    Rre,
    /// Minimum spanning tree weight.
    Rrt,
    /// Shortest tour length.
    Rrc,
    /// Sum of nearest-neighbour distances.
    Rrp,
    /// Minimum perfect matching weight.
    Rrm,
}

impl DiversityObjective {
    pub const ALL: [DiversityObjective; 5] = [Self::Rre, Self::Rrt, Self::Rrc, Self::Rrp, Self::Rrm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rre => "rre",
            Self::Rrt => "rrt",
            Self::Rrc => "rrc",
            Self::Rrp => "rrp",
            Self::Rrm => "rrm",
        }
    }

    /// Value of the objective on `points`, and whether it was computed exactly.
    pub fn evaluate(self, points: &[Point]) -> Result<(f64, bool)> {
        if points.len() < 2 {
            return Err(Error::Domain("diversity needs at least two points".into()));
        }
        let d = distance_matrix(points);
        Ok(match self {
            Self::Rre => (min_pairwise(&d), true),
            Self::Rrt => (mst(&d).0, true),
            Self::Rrc if points.len() <= EXACT_LIMIT => (tour_exact(&d), true),
            Self::Rrc => (tour_from_mst(&d), false),
            Self::Rrp => (pseudoforest(&d), true),
            Self::Rrm if points.len() % 2 == 1 => {
                return Err(Error::Domain("perfect matching needs an even number of points".into()))
            }
            Self::Rrm if points.len() <= EXACT_LIMIT => (matching_exact(&d), true),
            Self::Rrm => (matching_greedy(&d), false),
        })
    }
}

impl fmt::Display for DiversityObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiversityObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown diversity objective {s:?}")))
    }
}

/// Largest point count evaluated exactly by the tour and matching evaluators.
pub const EXACT_LIMIT: usize = 12;

fn distance_matrix(points: &[Point]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| dist(a, b)).collect())
        .collect()
}

fn min_pairwise(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| d[i][j])
        .fold(f64::INFINITY, f64::min)
}

/// Prim's algorithm; returns the weight and the parent of each vertex.
fn mst(d: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = d.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0; n];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .expect("a vertex remains");
        in_tree[u] = true;
        total += best[u];
        for v in 0..n {
            if !in_tree[v] && d[u][v] < best[v] {
                best[v] = d[u][v];
                parent[v] = u;
            }
        }
    }
    (total, parent)
}

fn tour_exact(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    dp[n] = 0.0;
    for mask in 1..full {
        if mask & 1 == 0 {
            continue;
        }
        for last in 0..n {
            let cur = dp[mask * n + last];
            if !cur.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) == 0 {
                    let m2 = mask | (1 << next);
                    let v = cur + d[last][next];
                    if v < dp[m2 * n + next] {
                        dp[m2 * n + next] = v;
                    }
                }
            }
        }
    }
    (0..n)
        .map(|last| dp[(full - 1) * n + last] + d[last][0])
        .fold(f64::INFINITY, f64::min)
}

/// Length of the preorder walk of a minimum spanning tree with shortcuts.
fn tour_from_mst(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let (_, parent) = mst(d);
    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        children[parent[v]].push(v);
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        order.push(u);
        stack.extend(children[u].iter().rev());
    }
    order.windows(2).map(|w| d[w[0]][w[1]]).sum::<f64>() + d[order[n - 1]][order[0]]
}

fn pseudoforest(d: &[Vec<f64>]) -> f64 {
    (0..d.len())
        .map(|i| {
            (0..d.len())
                .filter(|&j| j != i)
                .map(|j| d[i][j])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn matching_exact(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if !dp[mask].is_finite() || mask == full - 1 {
            continue;
        }
        let i = (0..n).find(|&i| mask & (1 << i) == 0).expect("free vertex");
        for (j, dij) in d[i].iter().enumerate().skip(i + 1) {
            if mask & (1 << j) == 0 {
                let m2 = mask | (1 << i) | (1 << j);
                dp[m2] = dp[m2].min(dp[mask] + dij);
            }
        }
    }
    dp[full - 1]
}

fn matching_greedy(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    edges.sort_by(|a, b| d[a.0][a.1].total_cmp(&d[b.0][b.1]));
    let mut used = vec![false; n];
    let mut total = 0.0;
    for (i, j) in edges {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            total += d[i][j];
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversitySolution {
    /// Version of the JSON layout.
    pub spec: &'static str,
    pub objective: DiversityObjective,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub points: Vec<Point>,
    #[serde(serialize_with = "ser_sig12")]
    pub value: f64,
    pub exact: bool,
    pub step_distances: Vec<Option<f64>>,
}

fn ser_sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(sig12(*x))
}

impl DiversitySolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// `k` diverse join results chosen by approximate Gonzalez, with their objective value.
pub fn diversity_solve(
    inst: &Instance,
    k: usize,
    objective: DiversityObjective,
    epsilon: f64,
    seed: u64,
) -> Result<DiversitySolution> {
    if k < 2 {
        return Err(Error::Domain("diversity needs k >= 2".into()));
    }
    if objective == DiversityObjective::Rrm && k % 2 == 1 {
        return Err(Error::Domain("rrm needs an even k".into()));
    }
    let run = gonzalez_approx(inst, k, epsilon, seed)?;
    let (value, exact) = objective.evaluate(&run.points)?;
    Ok(DiversitySolution {
        spec: "1",
        objective,
        k,
        epsilon,
        seed,
        points: run.points,
        value,
        exact,
        step_distances: run
            .step_distances
            .iter()
            .map(|d| d.is_finite().then(|| sig12(*d)))
            .collect(),
    })
}

#[cfg(test)]
mod tests;
