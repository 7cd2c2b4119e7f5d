//! k-center, k-median and k-means over join results.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rbbd::{RbbdTree, TreeConfig};
use crate::relational::{count_join, enumerate_join, Instance};

/// Independent seed for sub-computation `stream` of a run seeded with `seed`.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    KCenter,
    KMedian,
    KMeans,
}

impl Objective {
    /// Exponent applied to distances in the sum objectives.
    pub fn power(self) -> Option<i32> {
        match self {
            Objective::KCenter => None,
            Objective::KMedian => Some(1),
            Objective::KMeans => Some(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::KCenter => "kcenter",
            Objective::KMedian => "kmedian",
            Objective::KMeans => "kmeans",
        }
    }
}

/// Index into the radius ladder; `Infinite` stands for `b = inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beta {
    Finite(usize),
    Infinite,
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(j) => s.serialize_u64(*j as u64),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub method: String,
    pub iterations: usize,
    pub radii_probed: Vec<f64>,
    pub seeds: Vec<u64>,
    pub tau: Vec<u64>,
    pub beta: Vec<Beta>,
    pub sample_sizes: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    #[serde(serialize_with = "ser_opt_sig12")]
    pub scale: Option<f64>,
    pub tree_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSolution {
    /// Version of the JSON layout.
    pub spec: &'static str,
    pub objective: Objective,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub centers: Vec<Point>,
    #[serde(serialize_with = "ser_sig12")]
    pub cost_estimate: f64,
    pub trace: Trace,
}

impl ClusterSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.11e}").parse().expect("formatted float parses")
    } else {
        x
    }
}

fn ser_sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(sig12(*x))
    } else {
        s.serialize_none()
    }
}

fn ser_opt_sig12<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_sig12(v, s),
        None => s.serialize_none(),
    }
}

fn check_params(k: usize, epsilon: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Join size, rejecting empty joins.
fn join_size(inst: &Instance) -> Result<u64> {
    match count_join(inst)? {
        0 => Err(Error::EmptyJoin),
        n => Ok(n),
    }
}

/// Greedy cover: repeatedly picks an active point and inactivates its `2r`
/// ball. `None` when more than `k` picks would be needed. The tree state is
/// left unchanged.
pub fn fixed_radius_on(tree: &mut RbbdTree<'_>, k: usize, r: f64) -> Result<Option<Vec<Point>>> {
    let token = tree.snapshot();
    let mut centers = Vec::new();
    let outcome = loop {
        let Some(p) = tree.rep() else {
            break Ok(Some(centers));
        };
        if centers.len() == k {
            break Ok(None);
        }
        if let Err(e) = tree.inactive(&p, 2.0 * r) {
            break Err(e);
        }
        centers.push(p);
    };
    tree.restore(token)?;
    outcome
}

/// Centers whose `2(1+eps)r` balls cover `q(D)`, or `None` if `k` do not suffice.
pub fn kcenter_fixed_radius(inst: &Instance, k: usize, epsilon: f64, r: f64, seed: u64) -> Result<Option<Vec<Point>>> {
    check_params(k, epsilon)?;
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("radius must be non-negative, got {r}")));
    }
    let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(epsilon), seed)?;
    fixed_radius_on(&mut tree, k, r)
}

fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Pairs `i < j` of the sorted `v` with `v[j] - v[i] <= t`.
fn pairs_within(v: &[f64], t: f64) -> u64 {
    let mut i = 0;
    let mut count = 0u64;
    for j in 0..v.len() {
        while v[j] - v[i] > t {
            i += 1;
        }
        count += (j - i) as u64;
    }
    count
}

/// `z`-th smallest pairwise difference of an already sorted slice.
pub(crate) fn kth_pairwise_sorted(v: &[f64], z: u64) -> Result<f64> {
    let max = pair_count(v.len());
    if z == 0 || z > max {
        return Err(Error::Rank { rank: z, max });
    }
    let mut lo = 0u64;
    let mut hi = (v[v.len() - 1] - v[0]).to_bits();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pairs_within(v, f64::from_bits(mid)) >= z {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(f64::from_bits(lo))
}

/// The `z`-th smallest `|v_i - v_j|` over unordered pairs, counted with multiplicity.
pub fn select_kth_pairwise_distance(values: &[f64], z: u64) -> Result<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    kth_pairwise_sorted(&v, z)
}

/// Distinct values taken by clustering attributes across all relations, sorted.
pub fn projection_values(inst: &Instance) -> Vec<f64> {
    let mut v = Vec::new();
    for &a in inst.dims() {
        for rel in inst.relations() {
            if let Some(c) = rel.column(a) {
                v.extend(rel.rows().map(|row| row[c]));
            }
        }
    }
    v.sort_unstable_by(f64::total_cmp);
    v.dedup_by(|a, b| a == b);
    v
}

/// Smallest index in `0..len` whose probe succeeds, given that the last one does.
fn first_success<F>(len: usize, mut probe: F) -> Result<(usize, Vec<Point>)>
where
    F: FnMut(usize) -> Result<Option<Vec<Point>>>,
{
    let (mut lo, mut hi) = (0, len - 1);
    let mut best = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match probe(mid)? {
            Some(s) => {
                hi = mid;
                best = Some(s);
            }
            None => lo = mid + 1,
        }
    }
    let centers = match best {
        Some(s) => s,
        None => probe(hi)?.ok_or_else(|| Error::InternalGeometry("largest radius did not succeed".into()))?,
    };
    Ok((hi, centers))
}

fn all_points(
    inst: &Instance,
    objective: Objective,
    k: usize,
    epsilon: f64,
    seed: u64,
    method: &str,
) -> Result<ClusterSolution> {
    let centers = dedup_points(enumerate_join(inst, None)?);
    Ok(ClusterSolution {
        spec: "1",
        objective,
        k,
        epsilon,
        seed,
        centers,
        cost_estimate: 0.0,
        trace: Trace {
            method: method.into(),
            ..Trace::default()
        },
    })
}

fn dedup_points(points: Vec<Point>) -> Vec<Point> {
    let mut seen = HashSet::new();
    points
        .into_iter()
        .filter(|p| {
            seen.insert(
                p.iter()
                    .map(|x| if *x == 0.0 { 0 } else { x.to_bits() })
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

struct ConstantRun<'a> {
    tree: RbbdTree<'a>,
    centers: Vec<Point>,
    cost: f64,
    trace: Trace,
}

fn kcenter_constant_run<'a>(inst: &'a Instance, k: usize, epsilon: f64, seed: u64) -> Result<ConstantRun<'a>> {
    let sd = (inst.dim() as f64).sqrt();
    let eps_int = epsilon / (2.0 * sd);
    let tree_seed = derive_seed(seed, 1);
    let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(eps_int), tree_seed)?;
    let v = projection_values(inst);
    let ranks = pair_count(v.len()) as usize + 1;
    let mut trace = Trace {
        method: "constant".into(),
        seeds: vec![tree_seed],
        ..Trace::default()
    };
    let radius = |z: usize| -> Result<f64> {
        Ok(if z == 0 {
            0.0
        } else {
            sd * kth_pairwise_sorted(&v, z as u64)?
        })
    };
    let (z, centers) = first_success(ranks, |z| {
        let r = radius(z)?;
        trace.radii_probed.push(r);
        fixed_radius_on(&mut tree, k, r)
    })?;
    let r = radius(z)?;
    trace.iterations = trace.radii_probed.len();
    trace.tree_nodes = tree.node_count();
    Ok(ConstantRun {
        tree,
        centers,
        cost: 2.0 * (1.0 + eps_int) * r,
        trace,
    })
}

/// At most `k` centers with certified radius `r_S <= (2 sqrt(d) + eps) * opt`.
pub fn kcenter_constant(inst: &Instance, k: usize, epsilon: f64, seed: u64) -> Result<ClusterSolution> {
    check_params(k, epsilon)?;
    if join_size(inst)? < 2 {
        return all_points(inst, Objective::KCenter, k, epsilon, seed, "constant");
    }
    let run = kcenter_constant_run(inst, k, epsilon, seed)?;
    Ok(ClusterSolution {
        spec: "1",
        objective: Objective::KCenter,
        k,
        epsilon,
        seed,
        centers: run.centers,
        cost_estimate: run.cost,
        trace: run.trace,
    })
}

/// At most `k` centers with certified radius `r_S <= (2 + eps) * opt`.
pub fn kcenter_refined(inst: &Instance, k: usize, epsilon: f64, seed: u64) -> Result<ClusterSolution> {
    check_params(k, epsilon)?;
    if join_size(inst)? < 2 {
        return all_points(inst, Objective::KCenter, k, epsilon, seed, "refined");
    }
    let eps = epsilon / 5.0;
    let ConstantRun {
        mut tree,
        centers,
        cost,
        mut trace,
    } = kcenter_constant_run(inst, k, eps, seed)?;
    trace.method = "refined".into();
    let (centers, cost) = if cost == 0.0 {
        (centers, 0.0)
    } else {
        let spread = 2.0 * (inst.dim() as f64).sqrt() + eps;
        let base = cost / spread;
        let steps = (spread.ln() / eps.ln_1p()).ceil() as usize;
        let mut grid: Vec<f64> = (0..=steps).map(|i| base * (1.0 + eps).powi(i as i32)).collect();
        grid[steps] = grid[steps].max(cost);
        let (i, s) = first_success(grid.len(), |i| {
            trace.radii_probed.push(grid[i]);
            fixed_radius_on(&mut tree, k, grid[i])
        })?;
        (s, 2.0 * (1.0 + eps) * grid[i])
    };
    trace.iterations = trace.radii_probed.len();
    trace.tree_nodes = tree.node_count();
    Ok(ClusterSolution {
        spec: "1",
        objective: Objective::KCenter,
        k,
        epsilon,
        seed,
        centers,
        cost_estimate: cost,
        trace,
    })
}

/// Centers and cost of a `(2 + 0.1)`-approximate k-center solution.
pub fn estimate_scale(inst: &Instance, k: usize, seed: u64) -> Result<(Vec<Point>, f64)> {
    let sol = kcenter_refined(inst, k, 0.1, seed)?;
    Ok((sol.centers, sol.cost_estimate))
}

/// Constants of the sampling schedule for k-means and k-median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub sample_factor: f64,
    pub stop_factor: f64,
    pub beta_divisor: f64,
    pub epsilon_divisor: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            sample_factor: 240.0,
            stop_factor: 480.0,
            beta_divisor: 10.0,
            epsilon_divisor: 400.0,
        }
    }
}

/// The radius ladder and thresholds derived from `n`, `k` and the scale `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSchedule {
    pub log_n: f64,
    pub m: usize,
    pub sample_size: usize,
    pub stop_threshold: u64,
    pub beta_divisor: f64,
    /// `b_0 ..= b_M`; `b_inf` is implicit.
    pub b: Vec<f64>,
}

impl KMeansSchedule {
    pub fn new(n: u64, k: usize, scale: f64, cfg: &KMeansConfig) -> Self {
        let log_n = (n as f64).log2();
        let m = (2.0 * log_n).ceil() as usize + 3;
        let k_log2 = k as f64 * log_n * log_n;
        let b0 = scale / (4.0 * n as f64);
        Self {
            log_n,
            m,
            sample_size: (cfg.sample_factor * k_log2).ceil() as usize,
            stop_threshold: (cfg.stop_factor * k_log2).ceil() as u64,
            beta_divisor: cfg.beta_divisor,
            b: (0..=m).map(|j| b0 * 2f64.powi(j as i32)).collect(),
        }
    }

    /// Radius of ladder index `j`, where `j = M + 1` is infinite.
    pub fn radius(&self, j: usize) -> f64 {
        self.b.get(j).copied().unwrap_or(f64::INFINITY)
    }

    pub fn beta_threshold(&self, tau: u64) -> f64 {
        tau as f64 / (self.beta_divisor * self.log_n)
    }
}

/// One pass of the sampling loop over `tree`; returns centers and `r_S`.
/// `scale` is only evaluated when the loop body runs.
pub fn kmeans_on_tree<F>(
    tree: &mut RbbdTree<'_>,
    k: usize,
    power: i32,
    cfg: &KMeansConfig,
    scale: F,
    rng: &mut ChaCha8Rng,
    trace: &mut Trace,
) -> Result<(Vec<Point>, f64)>
where
    F: FnOnce() -> Result<f64>,
{
    let n = tree.active_count();
    let mut tau = n;
    trace.tau.push(tau);
    let threshold = KMeansSchedule::new(n, k, 0.0, cfg).stop_threshold;
    let mut centers = Vec::new();
    let mut cost = 0.0;
    if tau > threshold {
        let l = scale()?;
        trace.scale = Some(l);
        let sched = KMeansSchedule::new(n, k, l, cfg);
        let slack = 1.0 + tree.epsilon();
        while tau > sched.stop_threshold {
            let z = sched.sample_size.min(tau as usize);
            let xs = tree.sample(z, rng)?;
            trace.sample_sizes.push(z);
            let mut tokens = Vec::with_capacity(sched.m + 2);
            let mut c = Vec::with_capacity(sched.m + 2);
            for j in 0..=sched.m + 1 {
                tokens.push(tree.snapshot());
                let r = sched.radius(j);
                let mut cj = 0;
                for x in &xs {
                    cj += tree.inactive_counted(x, r)?;
                }
                c.push(cj);
            }
            let cut = sched.beta_threshold(tau);
            let beta = (0..=sched.m + 1)
                .rev()
                .find(|&j| c[j] as f64 > cut)
                .unwrap_or(sched.m + 1);
            if beta <= sched.m {
                tree.restore(tokens[beta + 1])?;
            }
            tree.release(tokens[0])?;
            for (j, &cj) in c.iter().enumerate().take(beta + 1) {
                tau -= cj;
                if cj > 0 {
                    cost += cj as f64 * (slack * sched.radius(j)).powi(power);
                }
            }
            centers.extend(xs);
            trace.beta.push(if beta <= sched.m {
                Beta::Finite(beta)
            } else {
                Beta::Infinite
            });
            trace.counts.push(c);
            trace.tau.push(tau);
            trace.iterations += 1;
        }
    }
    centers.extend(tree.report()?);
    Ok((dedup_points(centers), cost))
}

/// `O(k log^3 n)` centers with certified cost `r_S <= (84 + eps) * opt`,
/// for k-median (`KMedian`) or k-means (`KMeans`).
pub fn kmeans_constant(
    inst: &Instance,
    k: usize,
    epsilon: f64,
    objective: Objective,
    seed: u64,
    cfg: &KMeansConfig,
) -> Result<ClusterSolution> {
    check_params(k, epsilon)?;
    let power = objective
        .power()
        .ok_or_else(|| Error::Domain("the sampling schedule serves kmedian and kmeans only".into()))?;
    if join_size(inst)? < 2 {
        return all_points(inst, objective, k, epsilon, seed, "sampling");
    }
    let tree_seed = derive_seed(seed, 1);
    let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(epsilon / cfg.epsilon_divisor), tree_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let scale_seed = derive_seed(seed, 3);
    let mut trace = Trace {
        method: "sampling".into(),
        seeds: vec![tree_seed, scale_seed],
        ..Trace::default()
    };
    let (centers, cost) = kmeans_on_tree(
        &mut tree,
        k,
        power,
        cfg,
        || estimate_scale(inst, k, scale_seed).map(|(_, l)| l),
        &mut rng,
        &mut trace,
    )?;
    trace.tree_nodes = tree.node_count();
    Ok(ClusterSolution {
        spec: "1",
        objective,
        k,
        epsilon,
        seed,
        centers,
        cost_estimate: cost,
        trace,
    })
}

#[cfg(test)]
mod tests;
