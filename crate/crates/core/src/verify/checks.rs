//! Acceptance checks over caller-supplied instances.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    brute_cost, brute_join, brute_opt, chi_square_uniformity, multiset, phi, sandwich_violations, BruteOracle,
    TwinTracker, FLOAT_SLACK,
};
use crate::clustering::{
    derive_seed, estimate_scale, kcenter_constant, kcenter_refined, kmeans_constant, KMeansConfig, Objective,
};
use crate::error::Result;
use crate::geometry::{dist2, Interval, Point, Rect, Region};
use crate::gonzalez::{diversity_solve, farthest_point, gonzalez_approx, gonzalez_in_memory, DiversityObjective};
use crate::oracles::{count_rect, region_query, report_rect, repr_rect, sample_rect, QueryAnswer, QueryKind};
use crate::rbbd::{RbbdTree, TreeConfig};
use crate::relational::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: u32,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckReport {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            status: if passed { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    fn skip(id: u32, name: &'static str, why: &str) -> Self {
        Self {
            id,
            name,
            status: Status::Skip,
            detail: why.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "criterion {:>2} [{tag}] {}: {}", self.id, self.name, self.detail)
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + FLOAT_SLACK) + f64::MIN_POSITIVE
}

fn bounds(points: &[Point], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

fn coordinate<R: Rng>(rng: &mut R, points: &[Point], i: usize, lo: f64, hi: f64) -> f64 {
    if rng.random_bool(0.5) {
        points.choose(rng).map_or(lo, |p| p[i])
    } else {
        rng.random_range(lo - 1.0..hi + 1.0 + f64::EPSILON)
    }
}

/// A random box over the data's range, with mixed open and closed sides;
/// endpoints often hit data values and some boxes are empty.
pub fn random_box<R: Rng>(rng: &mut R, points: &[Point], d: usize) -> Rect {
    let (lo, hi) = bounds(points, d);
    Rect::new(
        (0..d)
            .map(|i| {
                if rng.random_bool(0.25) || points.is_empty() {
                    return Interval::unbounded();
                }
                let a = coordinate(rng, points, i, lo[i], hi[i]);
                let b = coordinate(rng, points, i, lo[i], hi[i]);
                let (a, b) = if rng.random_bool(0.95) {
                    (a.min(b), a.max(b))
                } else {
                    (a, b)
                };
                Interval {
                    lo: a,
                    hi: b,
                    lo_closed: rng.random_bool(0.7),
                    hi_closed: rng.random_bool(0.7),
                }
            })
            .collect(),
    )
}

/// Exact agreement of count, report and repr with the materialized join.
pub fn oracle_exactness(instances: &[Instance], boxes_per_instance: usize, seed: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pairs, mut bad) = (0usize, 0usize);
    for inst in instances {
        let all = brute_join(inst);
        for _ in 0..boxes_per_instance {
            let rect = random_box(&mut rng, &all, inst.dim());
            let inside: Vec<Point> = all.iter().filter(|p| rect.contains(p)).cloned().collect();
            let count_ok = count_rect(inst, &rect)? == inside.len() as u64;
            let report_ok = multiset(&report_rect(inst, &rect)?) == multiset(&inside);
            let repr_ok = match repr_rect(inst, &rect)? {
                Some(p) => rect.contains(&p) && inside.contains(&p),
                None => inside.is_empty(),
            };
            pairs += 1;
            bad += usize::from(!(count_ok && report_ok && repr_ok));
        }
    }
    let elapsed = start.elapsed();
    Ok(CheckReport::new(
        1,
        "oracle exactness",
        bad == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{bad} mismatches over {pairs} (instance, box) pairs in {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn distinct(points: &[Point]) -> usize {
    multiset(points).len()
}

/// A random region with a hole inside the data's closed bounding box.
fn random_holed_region<R: Rng>(rng: &mut R, points: &[Point], d: usize) -> Region {
    let (lo, hi) = bounds(points, d);
    let outer = Rect::closed(&lo, &hi);
    let hole = Rect::new(
        (0..d)
            .map(|i| {
                let a = rng.random_range(lo[i]..=hi[i]);
                let b = rng.random_range(lo[i]..=hi[i]);
                Interval {
                    lo: a.min(b),
                    hi: a.max(b),
                    lo_closed: rng.random_bool(0.5),
                    hi_closed: rng.random_bool(0.5),
                }
            })
            .collect(),
    );
    Region::with_hole(outer, hole)
}

const MAX_SUPPORT: usize = 64;

fn support_ok(support: &[Point]) -> bool {
    support.len() <= MAX_SUPPORT && distinct(support) >= 2
}

/// Chi-square uniformity of box sampling, holed-region sampling and tree sampling.
pub fn sampling_uniformity(instances: &[Instance], reps: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passes = [0usize; 3];
    let mut ran = [0usize; 3];
    for rep in 0..reps {
        for inst in instances {
            let all = brute_join(inst);
            let d = inst.dim();
            let draw_seed = derive_seed(seed, rep as u64);

            let rect = (0..200)
                .map(|t| {
                    if t == 0 {
                        Rect::unbounded(d)
                    } else {
                        random_box(&mut rng, &all, d)
                    }
                })
                .find(|r| support_ok(&all.iter().filter(|p| r.contains(p)).cloned().collect::<Vec<_>>()));
            if let Some(rect) = rect {
                let support: Vec<Point> = all.iter().filter(|p| rect.contains(p)).cloned().collect();
                let draws = sample_rect(inst, &rect, 400 * support.len(), draw_seed)?;
                ran[0] += 1;
                passes[0] += usize::from(chi_square_uniformity(&draws, &support)?.passed);
            }

            let region = (0..200)
                .map(|_| random_holed_region(&mut rng, &all, d))
                .find(|r| support_ok(&all.iter().filter(|p| r.contains(p)).cloned().collect::<Vec<_>>()));
            if let Some(region) = region {
                let support: Vec<Point> = all.iter().filter(|p| region.contains(p)).cloned().collect();
                let kind = QueryKind::Sample {
                    z: 400 * support.len(),
                    seed: draw_seed,
                };
                if let QueryAnswer::Points(draws) = region_query(kind, inst, &region)? {
                    ran[1] += 1;
                    passes[1] += usize::from(chi_square_uniformity(&draws, &support)?.passed);
                }
            }

            if support_ok(&all) || all.len() > MAX_SUPPORT {
                let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(0.2), draw_seed)?;
                tree.record_events();
                let mut twin = TwinTracker::new(inst);
                for _ in 0..20 {
                    if support_ok(&twin.oracle.active_points()) {
                        break;
                    }
                    let x = all.choose(&mut rng).expect("non-empty join").clone();
                    let r = rng.random_range(0.0..3.0);
                    let t = tree.snapshot();
                    tree.inactive(&x, r)?;
                    if twin.oracle.active_points().is_empty() || tree.rep().is_none() {
                        tree.restore(t)?;
                    } else {
                        tree.release(t)?;
                    }
                    twin.apply_all(&tree.take_events())?;
                }
                let support = twin.oracle.active_points();
                if support_ok(&support) {
                    let draws = tree.sample(400 * support.len(), &mut ChaCha8Rng::seed_from_u64(draw_seed))?;
                    ran[2] += 1;
                    passes[2] += usize::from(chi_square_uniformity(&draws, &support)?.passed);
                }
            }
        }
    }
    let ok = (0..3).all(|i| ran[i] > 0 && passes[i] * 20 >= ran[i] * 19);
    Ok(CheckReport::new(
        2,
        "sampling uniformity",
        ok,
        format!(
            "passed box {}/{}, holed region {}/{}, tree {}/{} at alpha=1e-3",
            passes[0], ran[0], passes[1], ran[1], passes[2], ran[2]
        ),
    ))
}

fn random_ball<R: Rng>(rng: &mut R, points: &[Point], d: usize) -> (Point, f64) {
    let (lo, hi) = bounds(points, d);
    let diam = dist2(&lo, &hi).sqrt().max(1.0);
    let x = if rng.random_bool(0.5) {
        points.choose(rng).expect("non-empty").clone()
    } else {
        (0..d).map(|i| rng.random_range(lo[i] - 1.0..=hi[i] + 1.0)).collect()
    };
    let r = if rng.random_bool(0.1) {
        0.0
    } else {
        rng.random_range(0.0..diam / 2.0)
    };
    (x, r)
}

/// Canonical nodes of random balls cover the ball and stay inside its `(1+eps)` blow-up.
pub fn canonical_sandwich(instances: &[Instance], balls: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut bad, mut balls_bad) = (0, 0, 0);
    let per = balls.div_ceil(instances.len().max(1));
    for (i, inst) in instances.iter().enumerate() {
        let eps = [0.1, 0.25, 0.5][i % 3];
        let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(eps), derive_seed(seed, i as u64))?;
        tree.record_events();
        let mut twin = TwinTracker::new(inst);
        let all = twin.oracle.points.clone();
        for _ in 0..per {
            let (x, r) = random_ball(&mut rng, &all, inst.dim());
            let ids = tree.query_canonical(&x, r)?;
            let v = sandwich_violations(&tree, &twin.oracle, &ids, &x, r);
            total += 1;
            bad += v;
            balls_bad += usize::from(v > 0);
            if rng.random_bool(0.3) && tree.active_count() > 1 {
                tree.inactive(&x, r)?;
                twin.apply_all(&tree.take_events())?;
            }
        }
    }
    Ok(CheckReport::new(
        3,
        "canonical sandwich",
        bad == 0,
        format!("{bad} violating points in {balls_bad} of {total} balls"),
    ))
}

/// Node counts, representatives and reports agree with a replayed twin after random operations.
pub fn state_consistency(instances: &[Instance], sequences: usize, ops: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bad_states, mut bad_reports, mut bad_counts, mut checks) = (0, 0, 0, 0);
    for s in 0..sequences {
        let inst = &instances[s % instances.len()];
        let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(0.25), derive_seed(seed, s as u64))?;
        tree.record_events();
        let mut twin = TwinTracker::new(inst);
        let all = twin.oracle.points.clone();
        let mut tokens = Vec::new();
        for _ in 0..ops {
            match rng.random_range(0..7) {
                0 | 1 => {
                    let (x, r) = random_ball(&mut rng, &all, inst.dim());
                    tree.inactive(&x, r)?;
                }
                2 => {
                    let (x, r) = random_ball(&mut rng, &all, inst.dim());
                    let c = tree.count(&x, r)? as usize;
                    let within = |rr: f64| {
                        twin.oracle
                            .active_points()
                            .iter()
                            .filter(|p| dist2(p, &x) <= rr)
                            .count()
                    };
                    let outer = crate::geometry::slack_radius2(r, tree.epsilon());
                    bad_counts += usize::from(c < within(r * r) || c > within(outer));
                }
                3 => {
                    if tree.rep().is_some() {
                        let draws = tree.sample(10, &mut rng)?;
                        bad_counts += draws.iter().filter(|p| !twin.oracle.is_active_point(p)).count();
                    }
                }
                4 => tokens.push(tree.snapshot()),
                5 => {
                    if let Some(t) = tokens.pop() {
                        tree.restore(t)?;
                    }
                }
                _ => {
                    if let Some(t) = tokens.pop() {
                        tree.release(t)?;
                    }
                }
            }
            twin.apply_all(&tree.take_events())?;
            checks += 1;
            bad_states += usize::from(!twin.mismatches(&tree).is_empty());
            bad_reports += usize::from(!twin.report_matches(&tree.report()?));
        }
    }
    Ok(CheckReport::new(
        4,
        "state consistency",
        bad_states + bad_reports + bad_counts == 0,
        format!(
            "{checks} checkpoints: {bad_states} node-state, {bad_reports} report, {bad_counts} count/sample mismatches"
        ),
    ))
}

/// Fraction of a node's points inside the box chosen by a randomized centroid shrink.
pub fn shrink_balance(instances: &[Instance], runs: usize, seed: u64) -> Result<CheckReport> {
    const EPS: f64 = 0.1;
    let (lo, hi) = (1.0 / 3.0 - 2.0 * EPS, 2.0 / 3.0 + 2.0 * EPS);
    let mut eligible = Vec::new();
    for inst in instances {
        let tree = RbbdTree::build(inst, TreeConfig::with_epsilon(EPS), 0)?;
        if tree.node(tree.root()).total() >= 4 * tree.lambda() as u64 {
            eligible.push((inst, brute_join(inst), tree.lambda()));
        }
    }
    if eligible.is_empty() {
        return Ok(CheckReport::skip(
            5,
            "shrink balance",
            "no instance has a node with at least 4 Lambda points",
        ));
    }
    let (mut done, mut good, mut worst) = (0usize, 0usize, 0.5f64);
    for run in 0..runs {
        let (inst, all, lambda) = &eligible[run % eligible.len()];
        let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(EPS), derive_seed(seed, run as u64))?;
        let mut node = tree.root();
        if run % 2 == 1 {
            let kids = tree.fair_split(node)?;
            if let Some(&k) = kids.iter().find(|&&k| tree.node(k).total() >= 4 * *lambda as u64) {
                node = k;
            }
        }
        let region = tree.node(node).region().clone();
        let members: Vec<&Point> = all.iter().filter(|p| region.contains(p)).collect();
        let outcome = tree.randomized_centroid_shrink(node)?;
        done += 1;
        let fraction = match &outcome.balanced {
            Some(b) => members.iter().filter(|p| b.contains(p)).count() as f64 / members.len() as f64,
            None => 1.0,
        };
        if (fraction - 0.5).abs() > (worst - 0.5).abs() {
            worst = fraction;
        }
        good += usize::from((lo..=hi).contains(&fraction));
    }
    Ok(CheckReport::new(
        5,
        "shrink balance",
        good * 100 >= done * 99 && done >= runs,
        format!("{good}/{done} shrinks in [{lo:.3}, {hi:.3}], most extreme fraction {worst:.4}"),
    ))
}

fn dim_factor(inst: &Instance) -> f64 {
    2.0 * (inst.dim() as f64).sqrt()
}

/// Instances small enough for exhaustive optima.
fn tiny(inst: &Instance, all: &[Point]) -> bool {
    let _ = inst;
    !all.is_empty() && all.len() <= super::BRUTE_OPT_LIMIT
}

/// k-center certificate and approximation factor against exhaustive or Gonzalez bounds.
pub fn kcenter_guarantee(instances: &[Instance], epsilon: f64, seed: u64) -> Result<CheckReport> {
    let (mut runs, mut ok, mut cert_bad, mut large_runs, mut large_bad) = (0, 0, 0, 0, 0);
    for (i, inst) in instances.iter().enumerate() {
        let all = brute_join(inst);
        if all.is_empty() {
            continue;
        }
        let bound = dim_factor(inst) + epsilon;
        if tiny(inst, &all) {
            for k in 1..=3 {
                let sol = kcenter_constant(inst, k, epsilon, derive_seed(seed, (i * 8 + k) as u64))?;
                let u = brute_cost(&all, &sol.centers, Objective::KCenter)?;
                let (_, opt) = brute_opt(&all, k, Objective::KCenter)?;
                runs += 1;
                let cert = le(u, sol.cost_estimate) && sol.centers.len() <= k;
                cert_bad += usize::from(!cert);
                ok += usize::from(cert && le(sol.cost_estimate, bound * opt));
            }
        } else {
            let k = [2, 3, 5][i % 3];
            let sol = kcenter_constant(inst, k, epsilon, derive_seed(seed, i as u64))?;
            let u = brute_cost(&all, &sol.centers, Objective::KCenter)?;
            let (g, _) = gonzalez_in_memory(&all, k);
            let gcost = brute_cost(&all, &g, Objective::KCenter)?;
            large_runs += 1;
            large_bad += usize::from(!(le(u, sol.cost_estimate) && le(u, bound * gcost)));
        }
    }
    if runs + large_runs == 0 {
        return Ok(CheckReport::skip(6, "k-center guarantee", "no non-empty instance"));
    }
    Ok(CheckReport::new(
        6,
        "k-center guarantee",
        cert_bad == 0 && ok * 100 >= runs * 99 && large_bad == 0,
        format!("tiny: {ok}/{runs} within (2 sqrt(d)+eps) opt, {cert_bad} certificate failures; larger: {large_bad}/{large_runs} violations"),
    ))
}

/// Refined k-center cost within `(2 + eps)` of the exhaustive optimum.
pub fn refined_kcenter(instances: &[Instance], epsilon: f64, seed: u64) -> Result<CheckReport> {
    let (mut runs, mut ok, mut large_runs, mut large_bad) = (0, 0, 0, 0);
    for (i, inst) in instances.iter().enumerate() {
        let all = brute_join(inst);
        if all.is_empty() {
            continue;
        }
        if tiny(inst, &all) {
            for k in 1..=3 {
                let sol = kcenter_refined(inst, k, epsilon, derive_seed(seed, (i * 8 + k) as u64))?;
                let u = brute_cost(&all, &sol.centers, Objective::KCenter)?;
                let (_, opt) = brute_opt(&all, k, Objective::KCenter)?;
                runs += 1;
                ok += usize::from(sol.centers.len() <= k && le(u, sol.cost_estimate) && le(u, (2.0 + epsilon) * opt));
            }
        } else {
            let k = [2, 3, 5][i % 3];
            let sol = kcenter_refined(inst, k, epsilon, derive_seed(seed, i as u64))?;
            let u = brute_cost(&all, &sol.centers, Objective::KCenter)?;
            let (g, _) = gonzalez_in_memory(&all, k);
            let gcost = brute_cost(&all, &g, Objective::KCenter)?;
            large_runs += 1;
            large_bad += usize::from(!(le(u, sol.cost_estimate) && le(u, (2.0 + epsilon) * gcost)));
        }
    }
    if runs + large_runs == 0 {
        return Ok(CheckReport::skip(7, "refined k-center", "no non-empty instance"));
    }
    Ok(CheckReport::new(
        7,
        "refined k-center",
        ok * 100 >= runs * 99 && large_bad == 0,
        format!("tiny: {ok}/{runs} within (2+eps) opt; larger: {large_bad}/{large_runs} violations"),
    ))
}

/// Constants small enough that the sampling loop runs on desk-sized inputs.
pub fn scaled_kmeans_config() -> KMeansConfig {
    KMeansConfig {
        sample_factor: 0.25,
        stop_factor: 0.5,
        ..KMeansConfig::default()
    }
}

/// k-means and k-median certificates, size and iteration bounds, and the scale sandwich.
pub fn kmeans_guarantee(instances: &[Instance], epsilon: f64, seed: u64) -> Result<CheckReport> {
    let (mut runs, mut cert_bad, mut size_bad, mut iter_bad) = (0usize, 0usize, 0usize, 0usize);
    let (mut ratio_runs, mut ratio_ok, mut sandwich_runs, mut sandwich_bad) = (0usize, 0usize, 0usize, 0usize);
    for (i, inst) in instances.iter().enumerate() {
        let all = brute_join(inst);
        if all.is_empty() {
            continue;
        }
        let n = all.len() as f64;
        let small = all.len() <= 12;
        let mut configs = vec![KMeansConfig::default()];
        if all.len() >= 64 {
            configs.push(scaled_kmeans_config());
        }
        for cfg in &configs {
            for objective in [Objective::KMeans, Objective::KMedian] {
                for k in 1..=2 {
                    let s = derive_seed(
                        seed,
                        (i * 16 + k * 2 + usize::from(objective == Objective::KMeans)) as u64,
                    );
                    let sol = kmeans_constant(inst, k, epsilon, objective, s, cfg)?;
                    let mu = brute_cost(&all, &sol.centers, objective)?;
                    runs += 1;
                    cert_bad += usize::from(!le(mu, sol.cost_estimate));
                    if n >= 2.0 {
                        size_bad += usize::from(sol.centers.len() as f64 > 300.0 * k as f64 * n.log2().powi(3));
                        iter_bad += usize::from(sol.trace.iterations as f64 > 4.0 * n.log2() + 8.0);
                    }
                    if small && *cfg == KMeansConfig::default() {
                        let (_, opt) = brute_opt(&all, k, objective)?;
                        ratio_runs += 1;
                        ratio_ok += usize::from(le(sol.cost_estimate, 84.5 * opt));
                    }
                }
            }
        }
        if small {
            for k in 1..=2 {
                let (_, l) = estimate_scale(inst, k, derive_seed(seed, 1000 + i as u64 * 4 + k as u64))?;
                let (_, mu_opt) = brute_opt(&all, k, Objective::KMeans)?;
                sandwich_runs += 1;
                sandwich_bad += usize::from(!(le(l * l / 9.0, mu_opt) && le(mu_opt, n * l * l)));
            }
        }
    }
    if runs == 0 {
        return Ok(CheckReport::skip(8, "k-means/median", "no non-empty instance"));
    }
    let passed = cert_bad == 0
        && size_bad == 0
        && iter_bad * 100 <= runs
        && ratio_ok * 100 >= ratio_runs * 95
        && sandwich_bad == 0;
    Ok(CheckReport::new(
        8,
        "k-means/median",
        passed,
        format!(
            "{runs} runs: {cert_bad} certificate, {size_bad} size, {iter_bad} iteration violations; \
             ratio <= 84.5 in {ratio_ok}/{ratio_runs}; scale sandwich {sandwich_bad}/{sandwich_runs} violations"
        ),
    ))
}

/// Farthest-point quality and monotone Gonzalez steps.
pub fn farthest_and_gonzalez(instances: &[Instance], pairs: usize, epsilon: f64, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let usable: Vec<(&Instance, Vec<Point>)> = instances
        .iter()
        .map(|inst| (inst, brute_join(inst)))
        .filter(|(_, all)| distinct(all) >= 2 && all.len() <= 500)
        .collect();
    if usable.is_empty() {
        return Ok(CheckReport::skip(
            9,
            "farthest point / Gonzalez",
            "needs an instance with 2..=500 results",
        ));
    }
    let (mut runs, mut success, mut violations) = (0, 0, 0);
    for t in 0..pairs {
        let (inst, all) = &usable[t % usable.len()];
        let s: Vec<Point> = loop {
            let size = rng.random_range(1..=4.min(all.len() - 1).max(1));
            let s: Vec<Point> = all.choose_multiple(&mut rng, size).cloned().collect();
            if all.iter().any(|p| phi(p, &s) > 0.0) {
                break s;
            }
        };
        runs += 1;
        if let Ok(p) = farthest_point(inst, &s, epsilon, derive_seed(seed, t as u64)) {
            success += 1;
            let best = all.iter().map(|q| phi(q, &s)).fold(0.0, f64::max);
            violations += usize::from(!(all.contains(&p) && le((1.0 - epsilon) * best, phi(&p, &s))));
        }
    }
    let mut steps_bad = 0;
    for (i, (inst, all)) in usable.iter().enumerate() {
        let k = all.len().min(5);
        let run = gonzalez_approx(inst, k, epsilon.max(0.5), derive_seed(seed, 10_000 + i as u64))?;
        let finite = run.candidates.min(k);
        steps_bad += usize::from(!run.step_distances[..finite].windows(2).all(|w| w[1] <= w[0]));
    }
    Ok(CheckReport::new(
        9,
        "farthest point / Gonzalez",
        violations == 0 && success * 100 >= runs * 99 && steps_bad == 0,
        format!(
            "{success}/{runs} successful, {violations} below (1-eps) max; {steps_bad}/{} Gonzalez runs not monotone",
            usable.len()
        ),
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Median wall time of `count_rect` and of one `inactive` call on a fresh tree.
pub fn time_oracles(inst: &Instance, seed: u64) -> Result<(f64, f64)> {
    let all_box = Rect::unbounded(inst.dim());
    let mut count_t = Vec::new();
    let mut inactive_t = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = crate::oracles::repr_rect(inst, &all_box)?.unwrap_or_else(|| vec![0.0; inst.dim()]);
    for run in 0..3 {
        let rect = Rect::new(
            (0..inst.dim())
                .map(|_| {
                    let a = rng.random_range(0.0..5.0);
                    Interval::closed(a, a + 5.0)
                })
                .collect(),
        );
        let t = Instant::now();
        std::hint::black_box(count_rect(inst, &rect)?);
        count_t.push(t.elapsed().as_secs_f64());
        let mut tree = RbbdTree::build(inst, TreeConfig::with_epsilon(0.5), derive_seed(seed, run))?;
        let t = Instant::now();
        std::hint::black_box(tree.inactive(&x, 2.0)?);
        inactive_t.push(t.elapsed().as_secs_f64());
    }
    Ok((median(count_t), median(inactive_t)))
}

/// Doubling the input at most triples the oracle time.
pub fn scaling(small: &Instance, large: &Instance, seed: u64) -> Result<CheckReport> {
    let (c1, i1) = time_oracles(small, seed)?;
    let (c2, i2) = time_oracles(large, seed)?;
    let (rc, ri) = (c2 / c1.max(1e-9), i2 / i1.max(1e-9));
    Ok(CheckReport::new(
        10,
        "scaling smoke test",
        rc <= 3.0 && ri <= 3.0,
        format!(
            "count_rect {:.2}ms -> {:.2}ms (x{rc:.2}), inactive {:.2}ms -> {:.2}ms (x{ri:.2})",
            c1 * 1e3,
            c2 * 1e3,
            i1 * 1e3,
            i2 * 1e3
        ),
    ))
}

/// JSON of every solver, produced twice with the same seed.
pub fn solution_jsons(inst: &Instance, seed: u64) -> Result<Vec<String>> {
    let mut out = vec![
        kcenter_constant(inst, 2, 0.2, seed)?.to_json(),
        kcenter_refined(inst, 2, 0.2, seed)?.to_json(),
        kmeans_constant(inst, 2, 0.1, Objective::KMeans, seed, &KMeansConfig::default())?.to_json(),
        kmeans_constant(inst, 2, 0.1, Objective::KMedian, seed, &scaled_kmeans_config())?.to_json(),
    ];
    if brute_join(inst).len() >= 2 {
        out.push(diversity_solve(inst, 2, DiversityObjective::Rre, 0.5, seed)?.to_json());
    }
    Ok(out)
}

/// Identical seeds give byte-identical solutions.
pub fn determinism(instances: &[Instance], seed: u64) -> Result<CheckReport> {
    let (mut runs, mut differ) = (0, 0);
    for (i, inst) in instances.iter().enumerate() {
        if brute_join(inst).is_empty() {
            continue;
        }
        let s = derive_seed(seed, i as u64);
        let a = solution_jsons(inst, s)?;
        let b = solution_jsons(inst, s)?;
        runs += a.len();
        differ += a.iter().zip(&b).filter(|(x, y)| x != y).count();
    }
    Ok(CheckReport::new(
        11,
        "determinism",
        differ == 0 && runs > 0,
        format!("{differ}/{runs} solutions differ between identical runs"),
    ))
}

/// Every check that applies to one user instance, at reduced repetition counts.
pub fn run_on_instance(inst: &Instance, seed: u64) -> Result<Vec<CheckReport>> {
    let all = BruteOracle::new(inst).points;
    let one = std::slice::from_ref(inst);
    let mut out = Vec::new();
    if all.is_empty() {
        return Ok(vec![CheckReport::skip(0, "instance", "the join is empty")]);
    }
    out.push(oracle_exactness(one, 100, seed)?);
    out.push(sampling_uniformity(one, 20, seed)?);
    out.push(canonical_sandwich(one, 200, seed)?);
    out.push(state_consistency(one, 4, 50, seed)?);
    out.push(shrink_balance(one, 50, seed)?);
    out.push(kcenter_guarantee(one, 0.2, seed)?);
    out.push(refined_kcenter(one, 0.3, seed)?);
    out.push(kmeans_guarantee(one, 0.1, seed)?);
    out.push(farthest_and_gonzalez(one, 50, 0.2, seed)?);
    out.push(determinism(one, seed)?);
    Ok(out)
}
