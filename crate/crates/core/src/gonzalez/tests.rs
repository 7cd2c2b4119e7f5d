use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::verify::synth::{line, points, uniform_points};
use crate::verify::{brute_join, phi};

fn brute_max(all: &[Point], centers: &[Point]) -> f64 {
    all.iter().map(|p| phi(p, centers)).fold(0.0, f64::max)
}

#[test]
fn farthest_point_examples() {
    let inst = line(&[0.0, 4.0, 10.0]);
    assert_eq!(farthest_point(&inst, &[vec![0.0]], 0.3, 1).unwrap(), vec![10.0]);
    assert_eq!(
        farthest_point(&inst, &[vec![0.0], vec![10.0]], 0.3, 1).unwrap(),
        vec![4.0]
    );
    let all = vec![vec![0.0], vec![4.0], vec![10.0]];
    assert!(matches!(farthest_point(&inst, &all, 0.3, 1), Err(Error::NoCandidate)));
    let eq = line(&[-1.0, 1.0]);
    let p = farthest_point(&eq, &[vec![0.0]], 0.3, 1).unwrap();
    assert!(p == vec![-1.0] || p == vec![1.0]);
}

#[test]
fn farthest_point_bound_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..40u64 {
        let d = 1 + seed as usize % 3;
        let pts = uniform_points(&mut rng, 60, d, 20.0, 0.125);
        let inst = points(&pts);
        let all = brute_join(&inst);
        let s: Vec<Point> = (0..rng.random_range(1..4))
            .map(|_| all[rng.random_range(0..all.len())].clone())
            .collect();
        let p = farthest_point(&inst, &s, 0.2, seed).unwrap();
        assert!(all.contains(&p));
        assert!(phi(&p, &s) >= 0.8 * brute_max(&all, &s), "seed {seed}");
    }
}

#[test]
fn in_memory_gonzalez_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts = uniform_points(&mut rng, 50, 2, 10.0, 0.01);
    let (picked, steps) = gonzalez_in_memory(&pts, 10);
    assert_eq!(picked.len(), 10);
    assert!(steps[0].is_infinite());
    assert!(steps.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn gonzalez_examples() {
    let inst = line(&[0.0, 1.0, 10.0]);
    let run = gonzalez_approx(&inst, 2, 0.2, 5).unwrap();
    let all = brute_join(&inst);
    let best = brute_max(&all, &run.points[..1]);
    assert!(phi(&run.points[1], &run.points[..1]) >= 0.8 * best);

    let run = gonzalez_approx(&inst, 3, 0.2, 5).unwrap();
    let mut got = run.points.clone();
    got.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(got, all);

    let same = line(&[2.0]);
    let run = gonzalez_approx(&same, 1, 0.2, 5).unwrap();
    assert_eq!(run.points, vec![vec![2.0]]);
    assert!(matches!(gonzalez_approx(&inst, 4, 0.2, 5), Err(Error::Domain(_))));
}

#[test]
fn gonzalez_pads_with_duplicates() {
    let inst = crate::verify::synth::build(
        &[("R", &["A", "B"], vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]])],
        &[],
        Some(&["A"]),
    )
    .unwrap();
    let run = gonzalez_approx(&inst, 3, 0.2, 1).unwrap();
    assert_eq!(run.points, vec![vec![1.0]; 3]);
}

#[test]
fn gonzalez_prefix_bound_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..10u64 {
        let pts = uniform_points(&mut rng, 200, 2, 20.0, 0.125);
        let inst = points(&pts);
        let all = brute_join(&inst);
        let run = gonzalez_approx(&inst, 4, 0.5, seed).unwrap();
        for i in 1..run.points.len() {
            let best = brute_max(&all, &run.points[..i]);
            assert!(
                phi(&run.points[i], &run.points[..i]) >= 0.5 * best,
                "seed {seed} step {i}"
            );
        }
    }
}

#[test]
fn evaluators() {
    let square = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
    assert_eq!(DiversityObjective::Rre.evaluate(&square).unwrap(), (1.0, true));
    assert_eq!(DiversityObjective::Rrt.evaluate(&square).unwrap(), (3.0, true));
    assert_eq!(DiversityObjective::Rrc.evaluate(&square).unwrap(), (4.0, true));
    assert_eq!(DiversityObjective::Rrp.evaluate(&square).unwrap(), (4.0, true));
    assert_eq!(DiversityObjective::Rrm.evaluate(&square).unwrap(), (2.0, true));
    let pair = vec![vec![0.0], vec![3.0]];
    assert_eq!(
        DiversityObjective::Rrt.evaluate(&pair).unwrap().0,
        DiversityObjective::Rre.evaluate(&pair).unwrap().0
    );
    assert_eq!(DiversityObjective::Rrm.evaluate(&pair).unwrap().0, 3.0);
    assert!(DiversityObjective::Rrm.evaluate(&square[..3]).is_err());
}

#[test]
fn heuristic_evaluators_bound_exact_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let pts = uniform_points(&mut rng, 10, 2, 10.0, 0.001);
        let d = distance_matrix(&pts);
        let exact = tour_exact(&d);
        let approx = tour_from_mst(&d);
        assert!(exact <= approx + 1e-9 && approx <= 2.0 * exact + 1e-9);
        let m = matching_exact(&d);
        assert!(m <= matching_greedy(&d) + 1e-9);
    }
    let big = uniform_points(&mut rng, 14, 2, 10.0, 0.001);
    assert!(!DiversityObjective::Rrc.evaluate(&big).unwrap().1);
    assert!(!DiversityObjective::Rrm.evaluate(&big).unwrap().1);
}

#[test]
fn diversity_is_feasible_and_not_above_optimum() {
    let inst = line(&[0.0, 1.0, 10.0]);
    let sol = diversity_solve(&inst, 2, DiversityObjective::Rre, 0.2, 1).unwrap();
    assert!(sol.value <= 10.0);
    assert!(sol.value >= 10.0 / 4.0);
    assert!(matches!(
        diversity_solve(&inst, 3, DiversityObjective::Rrm, 0.2, 1),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        diversity_solve(&inst, 1, DiversityObjective::Rre, 0.2, 1),
        Err(Error::Domain(_))
    ));
    let sol = diversity_solve(&inst, 2, DiversityObjective::Rrm, 0.2, 1).unwrap();
    assert_eq!(sol.value, dist(&sol.points[0], &sol.points[1]));
    assert_eq!("RRT".parse::<DiversityObjective>().unwrap(), DiversityObjective::Rrt);
}
