use super::*;
use crate::relational::fixtures::{e1, instance, line};
use crate::relational::{count_join, enumerate_join};

fn half_open(lo: f64, hi: f64) -> Interval {
    Interval {
        lo,
        hi,
        lo_closed: true,
        hi_closed: false,
    }
}

fn eight() -> Instance {
    line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
}

fn plane(points: &[[f64; 2]]) -> Instance {
    instance(
        &[("P", &["X", "Y"], points.iter().map(|p| p.to_vec()).collect())],
        &[],
        None,
    )
    .unwrap()
}

fn sorted(mut v: Vec<Point>) -> Vec<Point> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn root_of_e1() {
    let inst = e1();
    let t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    let root = t.node(t.root());
    assert_eq!(root.state().count, 3);
    assert_eq!(root.gen(), GenKind::Root);
    let r = root.region().outer.clone();
    assert_eq!(r.sides[0], Interval::closed(1.0, 1.0 + 2f64.powi(-16)));
    assert_eq!(r.sides[1], Interval::closed(1.0, 2.0));
    assert_eq!(r.sides[2], Interval::closed(10.0, 26.0));
    assert!(enumerate_join(&inst, None).unwrap().contains(&t.rep().unwrap()));
}

#[test]
fn single_result_is_a_leaf_and_empty_join_fails() {
    let inst = line(&[4.0]);
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    assert_eq!(t.node(0).leaf(), Some(LeafKind::Single));
    assert_eq!(t.rep(), Some(vec![4.0]));
    assert!(matches!(t.expand(0), Err(Error::ExpandOnLeaf(0))));
    let empty = line(&[]);
    assert!(matches!(
        RbbdTree::build(&empty, TreeConfig::default(), 1),
        Err(Error::EmptyJoin)
    ));
}

#[test]
fn fair_split_of_plain_box() {
    let inst = plane(&[[0.0, 0.0], [4.0, 2.0], [1.0, 1.0]]);
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    let [a, b] = t.fair_split(0).unwrap();
    assert_eq!(
        t.node(a).region().outer.sides,
        vec![half_open(0.0, 2.0), Interval::closed(0.0, 2.0)]
    );
    assert_eq!(
        t.node(b).region().outer.sides,
        vec![Interval::closed(2.0, 4.0), Interval::closed(0.0, 2.0)]
    );
    assert_eq!(t.node(a).gen(), GenKind::Fair);
}

#[test]
fn fair_split_keeps_hole_in_one_child() {
    let inst = plane(&[[0.0, 0.0], [4.0, 4.0], [1.0, 3.0], [3.0, 1.0]]);
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    let root = t.frame.root();
    let (l, _) = t.frame.children(&root).unwrap();
    let (ll, _) = t.frame.children(&l).unwrap();
    let id = t
        .make_node(NodeRegion::with_hole(root, ll), Some(0), GenKind::Shrink, 1)
        .unwrap();
    assert_eq!(t.node(id).total(), 3);
    let [a, b] = t.fair_split(id).unwrap();
    let ra = t.node(a).region().clone();
    assert_eq!(ra.outer.sides, vec![half_open(0.0, 2.0), Interval::closed(0.0, 4.0)]);
    assert_eq!(ra.hole.unwrap().sides, vec![half_open(0.0, 2.0), half_open(0.0, 2.0)]);
    assert!(t.node(b).region().hole.is_none());
    assert_eq!(t.node(a).total() + t.node(b).total(), 3);
}

#[test]
fn fair_split_on_the_line() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    let kids = t.expand(0).unwrap();
    assert_eq!(t.node(kids[0]).region().outer.sides[0], half_open(0.0, 4.0));
    assert_eq!(t.node(kids[0]).total(), 4);
    assert_eq!(t.node(kids[1]).total(), 4);
    // Children of a fair split are expanded by a shrink.
    assert_eq!(t.node(kids[0]).gen(), GenKind::Fair);
    t.expand(kids[0]).unwrap();
    assert_eq!(t.stats().shrinks + t.stats().shrink_fallbacks, 1);
}

#[test]
fn shrink_on_twelve_points_is_balanced() {
    let pts: Vec<f64> = (0..12).map(f64::from).collect();
    let inst = line(&pts);
    for seed in 0..20 {
        let mut t = RbbdTree::build(&inst, TreeConfig::with_epsilon(0.3), seed).unwrap();
        assert_eq!(t.node(0).region().outer.sides[0], Interval::closed(0.0, 16.0));
        let out = t.randomized_centroid_shrink(0).unwrap();
        let region = out.balanced.unwrap();
        let inside = pts.iter().filter(|p| region.contains(&[**p])).count() as f64 / 12.0;
        assert!(
            (1.0 / 3.0 - 0.3..=2.0 / 3.0 + 0.3).contains(&inside),
            "seed {seed}: {inside}"
        );
    }
}

#[test]
fn shrink_separates_two_points() {
    let inst = line(&[0.0, 100.0]);
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 5).unwrap();
    let out = t.randomized_centroid_shrink(0).unwrap();
    let region = out.balanced.unwrap();
    let inside = [0.0, 100.0].iter().filter(|p| region.contains(&[**p])).count();
    assert_eq!(inside, 1);
    for &c in t.node(0).children() {
        assert_eq!(t.node(c).total(), 1);
    }
}

#[test]
fn identical_points_form_a_unit_leaf() {
    let inst = instance(
        &[("R1", &["A", "B"], vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]])],
        &[],
        Some(&["A"]),
    )
    .unwrap();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 1).unwrap();
    assert_eq!(t.node(0).leaf(), Some(LeafKind::Unit));
    assert_eq!(t.node(0).total(), 3);
    assert!(matches!(t.randomized_centroid_shrink(0), Err(Error::ExpandOnLeaf(0))));
    assert_eq!(t.count(&[1.0], 0.0).unwrap(), 3);
}

#[test]
fn ball_oracles_on_the_line() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::with_epsilon(0.25), 3).unwrap();
    let ids = t.query_canonical(&[3.4], 1.0).unwrap();
    let covered: Vec<f64> = (0..8)
        .map(f64::from)
        .filter(|p| ids.iter().any(|&i| t.node(i).region().contains(&[*p])))
        .collect();
    assert_eq!(covered, vec![3.0, 4.0]);
    assert_eq!(t.count(&[3.4], 1.0).unwrap(), 2);
    t.inactive(&[3.4], 1.0).unwrap();
    assert_eq!(t.active_count(), 6);
    assert_eq!(
        sorted(t.report().unwrap()),
        vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0], vec![6.0], vec![7.0]]
    );
    t.inactive(&[3.4], 1.0).unwrap();
    assert_eq!(t.active_count(), 6);
    assert!(t.query_canonical(&[100.0], 1.0).unwrap().is_empty());
    assert!(matches!(t.query_canonical(&[0.0], -1.0), Err(Error::Domain(_))));
    t.inactive(&[3.5], 10.0).unwrap();
    assert_eq!(t.rep(), None);
    assert!(t.report().unwrap().is_empty());
    assert!(matches!(t.sample_seeded(3, 1), Err(Error::EmptyActiveSet)));
    assert!(t.sample_seeded(0, 1).unwrap().is_empty());
}

#[test]
fn zero_radius_covers_only_the_center() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 3).unwrap();
    assert_eq!(t.count(&[5.0], 0.0).unwrap(), 1);
    assert_eq!(t.count(&[5.5], 0.0).unwrap(), 0);
    assert_eq!(t.count(&[0.0], f64::INFINITY).unwrap(), 8);
}

#[test]
fn sampling_active_points_is_uniform() {
    let inst = eight();
    let t = RbbdTree::build(&inst, TreeConfig::default(), 3).unwrap();
    let draws = t.sample_seeded(4000, 11).unwrap();
    for p in 0..8 {
        let f = draws.iter().filter(|d| d[0] == p as f64).count() as f64 / 4000.0;
        assert!((f - 0.125).abs() <= 0.02, "{p}: {f}");
    }
    let single = line(&[2.5]);
    let t = RbbdTree::build(&single, TreeConfig::default(), 3).unwrap();
    assert_eq!(t.sample_seeded(5, 1).unwrap(), vec![vec![2.5]; 5]);
}

#[test]
fn snapshots_restore_in_lifo_order() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 3).unwrap();
    let before = sorted(t.report().unwrap());
    let s0 = t.snapshot();
    t.inactive(&[1.0], 1.0).unwrap();
    let mid = sorted(t.report().unwrap());
    let s1 = t.snapshot();
    t.inactive(&[6.0], 1.0).unwrap();
    t.restore(s1).unwrap();
    assert_eq!(sorted(t.report().unwrap()), mid);
    assert!(matches!(t.restore(s1), Err(Error::Token)));
    t.restore(s0).unwrap();
    assert_eq!(sorted(t.report().unwrap()), before);
    assert_eq!(t.active_count(), 8);

    let other_inst = eight();
    let mut other = RbbdTree::build(&other_inst, TreeConfig::default(), 3).unwrap();
    let foreign = other.snapshot();
    assert!(matches!(t.restore(foreign), Err(Error::Token)));
}

#[test]
fn release_keeps_current_state() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 3).unwrap();
    let s = t.snapshot();
    t.inactive(&[1.0], 1.0).unwrap();
    t.release(s).unwrap();
    assert!(t.undo.is_empty());
    assert!(t.active_count() < 8);
    assert!(matches!(t.restore(s), Err(Error::Token)));
}

#[test]
fn replay_after_restore_is_identical() {
    let inst = line(
        &(0..40)
            .map(|i| (i * 7 % 13) as f64 + i as f64 * 0.01)
            .collect::<Vec<_>>(),
    );
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 9).unwrap();
    let s = t.snapshot();
    let run = |t: &mut RbbdTree| {
        let mut counts = Vec::new();
        for c in [1.0, 5.0, 9.0, 12.0] {
            counts.push(t.count(&[c], 1.5).unwrap());
            t.inactive(&[c], 1.5).unwrap();
        }
        counts
    };
    let first = run(&mut t);
    t.restore(s).unwrap();
    assert_eq!(run(&mut t), first);
}

#[test]
fn box_queries() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::with_epsilon(0.1), 3).unwrap();
    let q = Rect::closed(&[2.0], &[5.0]);
    assert_eq!(t.count_box(&q).unwrap(), 4);
    t.inactive_box(&q).unwrap();
    assert_eq!(
        sorted(t.report().unwrap()),
        vec![vec![0.0], vec![1.0], vec![6.0], vec![7.0]]
    );
}

#[test]
fn dump_lists_every_node() {
    let inst = eight();
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 3).unwrap();
    t.expand(0).unwrap();
    let dump = t.dump();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "0, box, [0..8], 1, 8, root");
    assert_eq!(lines[1], "1, box, [0..4), 1, 4, fair");
    assert_eq!(lines[2], "1, box, [4..8], 1, 4, fair");
}

fn check_partition(t: &RbbdTree, probes: &[Point]) {
    for (id, n) in t.nodes().iter().enumerate() {
        if n.children().is_empty() {
            continue;
        }
        for p in probes {
            let hits = n.children().iter().filter(|&&c| t.node(c).region().contains(p)).count();
            assert_eq!(hits, usize::from(n.region().contains(p)), "node {id} point {p:?}");
        }
        let sum: u64 = n.children().iter().map(|&c| t.node(c).total()).sum();
        assert_eq!(sum, n.total(), "node {id}");
    }
}

#[test]
fn full_expansion_partitions_and_stays_shallow() {
    let pts: Vec<[f64; 2]> = (0..300)
        .map(|i| [((i * 37) % 101) as f64, ((i * 53) % 97) as f64 * 0.5])
        .collect();
    let inst = plane(&pts);
    let mut t = RbbdTree::build(&inst, TreeConfig::default(), 4).unwrap();
    t.expand_all().unwrap();
    let mut probes: Vec<Point> = pts.iter().map(|p| p.to_vec()).collect();
    for i in 0..60 {
        for j in 0..30 {
            probes.push(vec![i as f64 * 1.7, j as f64 * 1.7]);
        }
    }
    check_partition(&t, &probes);
    let n = count_join(&inst).unwrap() as f64;
    assert!(
        (t.height() as f64) <= 8.0 * n.ln() / 1.5f64.ln() + 16.0,
        "height {}",
        t.height()
    );
    for n in t.nodes() {
        if n.children().is_empty() && n.total() > 0 {
            assert!(matches!(n.leaf(), Some(LeafKind::Single | LeafKind::Unit)));
        }
    }
}
