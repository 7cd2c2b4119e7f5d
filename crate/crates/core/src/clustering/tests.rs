use super::*;
use crate::verify::synth::{line, points, uniform_points};
use crate::verify::{brute_cost, brute_join, brute_opt};

fn cost(inst: &Instance, centers: &[Point], objective: Objective) -> f64 {
    brute_cost(&brute_join(inst), centers, objective).unwrap()
}

#[test]
fn kth_pairwise_examples() {
    assert_eq!(select_kth_pairwise_distance(&[1.0, 3.0, 7.0], 2).unwrap(), 4.0);
    assert_eq!(select_kth_pairwise_distance(&[7.0, 1.0, 3.0], 3).unwrap(), 6.0);
    for z in 1..=3 {
        assert_eq!(select_kth_pairwise_distance(&[5.0, 5.0, 5.0], z).unwrap(), 0.0);
    }
    assert_eq!(select_kth_pairwise_distance(&[0.0, 1.0], 1).unwrap(), 1.0);
    assert!(matches!(
        select_kth_pairwise_distance(&[0.0, 1.0], 2),
        Err(Error::Rank { rank: 2, max: 1 })
    ));
    assert!(matches!(
        select_kth_pairwise_distance(&[0.0, 1.0], 0),
        Err(Error::Rank { .. })
    ));
}

#[test]
fn kth_pairwise_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(2..30);
        let v: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(-50.0..50.0f64) * 8.0).round() / 8.0)
            .collect();
        let mut diffs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                diffs.push((v[i] - v[j]).abs());
            }
        }
        diffs.sort_by(f64::total_cmp);
        for (z, d) in diffs.iter().enumerate() {
            assert_eq!(select_kth_pairwise_distance(&v, z as u64 + 1).unwrap(), *d);
        }
    }
}

#[test]
fn fixed_radius_examples() {
    let inst = line(&[0.0, 1.0, 10.0]);
    let s = kcenter_fixed_radius(&inst, 2, 0.1, 1.0, 3).unwrap().unwrap();
    assert!(s.len() <= 2);
    assert!(cost(&inst, &s, Objective::KCenter) <= 2.2);
    assert!(kcenter_fixed_radius(&inst, 2, 0.1, 0.4, 3).unwrap().is_none());
    let s = kcenter_fixed_radius(&inst, 3, 0.1, 0.0, 3).unwrap().unwrap();
    assert_eq!(s.len(), 3);
}

#[test]
fn fixed_radius_leaves_tree_state_unchanged() {
    let inst = line(&[0.0, 1.0, 10.0, 11.0]);
    let mut tree = RbbdTree::build(&inst, TreeConfig::with_epsilon(0.1), 1).unwrap();
    fixed_radius_on(&mut tree, 2, 1.0).unwrap().unwrap();
    assert_eq!(tree.active_count(), 4);
}

#[test]
fn fixed_radius_succeeds_at_every_radius_above_opt() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let pts = uniform_points(&mut rng, 14, 2, 10.0, 0.5);
        let inst = points(&pts);
        let (_, opt) = brute_opt(&brute_join(&inst), 3, Objective::KCenter).unwrap();
        for i in 0..20 {
            let r = opt * (1.0 + 0.1 * i as f64);
            let s = kcenter_fixed_radius(&inst, 3, 0.1, r, seed).unwrap();
            assert!(s.is_some(), "seed {seed}: r = {r} >= opt = {opt} failed");
        }
    }
}

#[test]
fn kcenter_constant_examples() {
    let inst = line(&[0.0, 1.0, 10.0]);
    let sol = kcenter_constant(&inst, 2, 0.2, 9).unwrap();
    let u = cost(&inst, &sol.centers, Objective::KCenter);
    assert!(
        u <= sol.cost_estimate && sol.cost_estimate <= 2.2 + 1e-12,
        "{u} {}",
        sol.cost_estimate
    );
    assert!(sol.centers.len() <= 2);

    let sol = kcenter_constant(&inst, 3, 0.2, 9).unwrap();
    assert_eq!(cost(&inst, &sol.centers, Objective::KCenter), 0.0);
    assert_eq!(sol.cost_estimate, 0.0);

    let inst = line(&[0.0, 10.0]);
    let sol = kcenter_constant(&inst, 1, 0.2, 9).unwrap();
    assert!(cost(&inst, &sol.centers, Objective::KCenter) <= sol.cost_estimate);
    assert!(sol.cost_estimate <= 2.2 * 10.0 + 1e-9);
}

#[test]
fn kcenter_bounds_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..40u64 {
        let d = 1 + (seed as usize % 3);
        let pts = uniform_points(&mut rng, 12, d, 8.0, 0.25);
        let inst = points(&pts);
        let all = brute_join(&inst);
        for k in 1..=3 {
            let (_, opt) = brute_opt(&all, k, Objective::KCenter).unwrap();
            let sol = kcenter_constant(&inst, k, 0.2, seed).unwrap();
            let u = brute_cost(&all, &sol.centers, Objective::KCenter).unwrap();
            let bound = 2.0 * (d as f64).sqrt() + 0.2;
            assert!(sol.centers.len() <= k);
            assert!(u <= sol.cost_estimate, "u {u} > r_S {}", sol.cost_estimate);
            assert!(
                sol.cost_estimate <= bound * opt * (1.0 + 1e-12),
                "r_S {} > {bound}*{opt}",
                sol.cost_estimate
            );

            let refined = kcenter_refined(&inst, k, 0.3, seed).unwrap();
            let u = brute_cost(&all, &refined.centers, Objective::KCenter).unwrap();
            assert!(refined.centers.len() <= k);
            assert!(u <= refined.cost_estimate);
            assert!(
                refined.cost_estimate <= 2.3 * opt * (1.0 + 1e-12),
                "refined {} > 2.3*{opt}",
                refined.cost_estimate
            );
        }
    }
}

#[test]
fn kcenter_over_a_join() {
    let inst = crate::verify::synth::build(
        &[
            ("R1", &["A", "B"], vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![3.0, 3.0]]),
            (
                "R2",
                &["B", "C"],
                vec![vec![1.0, 10.0], vec![2.0, 10.0], vec![2.0, 20.0], vec![4.0, 30.0]],
            ),
        ],
        &[("R1", "R2")],
        None,
    )
    .unwrap();
    let all = brute_join(&inst);
    let sol = kcenter_refined(&inst, 2, 0.3, 4).unwrap();
    let (_, opt) = brute_opt(&all, 2, Objective::KCenter).unwrap();
    assert!(brute_cost(&all, &sol.centers, Objective::KCenter).unwrap() <= sol.cost_estimate);
    assert!(sol.cost_estimate <= 2.3 * opt + 1e-12);
    for c in &sol.centers {
        assert!(all.contains(c));
    }
}

#[test]
fn refined_zero_cost_when_k_covers_everything() {
    let inst = line(&[0.0, 1.0, 10.0]);
    let sol = kcenter_refined(&inst, 5, 0.3, 1).unwrap();
    assert_eq!(sol.cost_estimate, 0.0);
    assert_eq!(cost(&inst, &sol.centers, Objective::KCenter), 0.0);
}

#[test]
fn scale_sandwich() {
    let inst = line(&[0.0, 0.1, 5.0, 5.1]);
    let (_, l) = estimate_scale(&inst, 2, 3).unwrap();
    assert!((0.1..=0.21 + 1e-12).contains(&l), "L = {l}");
    let mu = 0.1f64 * 0.1 + 0.1 * 0.1;
    assert!(l * l / 9.0 <= mu && mu <= 4.0 * l * l);

    let inst = line(&[0.0, 10.0]);
    let (_, l) = estimate_scale(&inst, 1, 3).unwrap();
    assert!((10.0..=21.0).contains(&l), "L = {l}");
    assert!(l * l / 9.0 <= 100.0 && 100.0 <= 2.0 * l * l);
}

#[test]
fn kmeans_small_instances_return_everything() {
    let inst = line(&[0.0, 0.1, 5.0, 5.1]);
    let sol = kmeans_constant(&inst, 2, 0.1, Objective::KMeans, 1, &KMeansConfig::default()).unwrap();
    assert_eq!(sol.centers.len(), 4);
    assert_eq!(sol.cost_estimate, 0.0);
    assert_eq!(sol.trace.iterations, 0);
    let inst = line(&[0.0, 10.0]);
    let sol = kmeans_constant(&inst, 1, 0.1, Objective::KMedian, 1, &KMeansConfig::default()).unwrap();
    assert_eq!(cost(&inst, &sol.centers, Objective::KMedian), 0.0);
    assert!(matches!(
        kmeans_constant(&inst, 1, 0.1, Objective::KCenter, 1, &KMeansConfig::default()),
        Err(Error::Domain(_))
    ));
}

fn scaled() -> KMeansConfig {
    KMeansConfig {
        sample_factor: 0.25,
        stop_factor: 0.5,
        beta_divisor: 10.0,
        epsilon_divisor: 400.0,
    }
}

#[test]
fn kmeans_certificate_bounds_cost_when_the_loop_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..12u64 {
        let pts = uniform_points(&mut rng, 400, 2, 50.0, 0.125);
        let inst = points(&pts);
        let all = brute_join(&inst);
        for objective in [Objective::KMeans, Objective::KMedian] {
            let sol = kmeans_constant(&inst, 2, 0.1, objective, seed, &scaled()).unwrap();
            assert!(sol.trace.iterations >= 1);
            let mu = brute_cost(&all, &sol.centers, objective).unwrap();
            assert!(mu <= sol.cost_estimate, "{objective:?}: {mu} > {}", sol.cost_estimate);
            let n = all.len() as f64;
            assert!(sol.trace.iterations as f64 <= 4.0 * n.log2() + 8.0);
            assert!(sol.trace.tau.windows(2).all(|w| w[1] < w[0]));
            assert!((sol.centers.len() as f64) < n);
        }
    }
}

#[test]
fn solutions_serialize_deterministically() {
    let inst = line(&[0.0, 1.0, 10.0, 10.5, 3.0]);
    let a = kcenter_refined(&inst, 2, 0.2, 77).unwrap().to_json();
    let b = kcenter_refined(&inst, 2, 0.2, 77).unwrap().to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["spec"], "1");
    assert_eq!(v["objective"], "kcenter");
    assert_eq!(v["seed"], 77);
}

#[test]
fn sig12_rounds() {
    assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
    assert_eq!(sig12(0.0), 0.0);
    assert!(sig12(f64::INFINITY).is_infinite());
}

#[test]
fn errors() {
    let inst = line(&[0.0, 1.0]);
    assert!(matches!(kcenter_constant(&inst, 0, 0.1, 1), Err(Error::Domain(_))));
    assert!(matches!(kcenter_constant(&inst, 1, 0.0, 1), Err(Error::Domain(_))));
    let empty = crate::verify::synth::build(
        &[
            ("R", &["A", "B"], vec![vec![1.0, 2.0]]),
            ("S", &["B", "C"], vec![vec![3.0, 4.0]]),
        ],
        &[("R", "S")],
        None,
    )
    .unwrap();
    assert!(matches!(kcenter_refined(&empty, 1, 0.1, 1), Err(Error::EmptyJoin)));
    assert!(matches!(
        kmeans_constant(&empty, 1, 0.1, Objective::KMeans, 1, &KMeansConfig::default()),
        Err(Error::EmptyJoin)
    ));
}
