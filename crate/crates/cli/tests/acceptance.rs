//! The acceptance suite: one line per criterion on stderr, one test per criterion.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relclust_core::relational::count_join;
use relclust_core::verify::checks::{self, CheckReport};
use relclust_core::verify::synth::{chain, points, scaling_chain, uniform_points, ChainShape};
use relclust_core::Instance;

/// Criteria run one at a time so the timing check sees an idle machine.
static SERIAL: Mutex<()> = Mutex::new(());

fn record(report: CheckReport) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{report}");
    assert!(report.passed(), "{report}");
}

fn run(f: impl FnOnce() -> relclust_core::Result<CheckReport>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    record(f().expect("check ran to completion"));
}

fn join_size(inst: &Instance) -> u64 {
    count_join(inst).expect("count succeeds")
}

/// Random chains with `lo..=hi` join results and at most five dimensions.
fn chains(rng: &mut ChaCha8Rng, count: usize, rows: usize, lo: u64, hi: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    while out.len() < count {
        let relations = rng.random_range(1..=3);
        let private = relations == 1 || rng.random_bool(0.7);
        let shape = ChainShape {
            relations,
            rows: rng.random_range(1..=rows),
            key_domain: rng.random_range(2..=20),
            private,
            project_private: private && (relations == 3 || rng.random_bool(0.4)),
        };
        let inst = chain(rng, shape);
        if (lo..=hi).contains(&join_size(&inst)) {
            out.push(inst);
        }
    }
    out
}

/// Single-relation point sets of `lo..=hi` points in one to three dimensions.
fn point_sets(rng: &mut ChaCha8Rng, count: usize, lo: usize, hi: usize) -> Vec<Instance> {
    (0..count)
        .map(|_| {
            let n = rng.random_range(lo..=hi);
            let d = rng.random_range(1..=3);
            let grain = [0.25, 1.0, 0.001][rng.random_range(0..3)];
            points(&uniform_points(rng, n, d, 10.0, grain))
        })
        .collect()
}

/// Half chains, half point sets, all with `lo..=hi` join results.
fn mixed(seed: u64, count: usize, lo: u64, hi: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (hi as usize).clamp(4, 100);
    let mut out = chains(&mut rng, count / 2, rows, lo, hi);
    out.extend(
        point_sets(&mut rng, 4 * count, lo as usize, hi as usize)
            .into_iter()
            .filter(|i| (lo..=hi).contains(&join_size(i)))
            .take(count - count / 2),
    );
    out
}

#[test]
fn criterion_01_oracle_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let instances = chains(&mut rng, 100, 100, 0, 10_000);
    run(|| checks::oracle_exactness(&instances, 6, 101));
}

#[test]
fn criterion_02_sampling_uniformity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let instances = vec![
        chains(&mut rng, 1, 12, 20, 64).remove(0),
        points(&uniform_points(&mut rng, 48, 2, 6.0, 1.0)),
    ];
    run(|| checks::sampling_uniformity(&instances, 10, 102));
}

#[test]
fn criterion_03_canonical_sandwich() {
    let instances = mixed(3, 20, 1, 2000);
    run(|| checks::canonical_sandwich(&instances, 200, 103));
}

#[test]
fn criterion_04_state_consistency() {
    let instances = mixed(4, 10, 2, 300);
    run(|| checks::state_consistency(&instances, 20, 50, 104));
}

#[test]
fn criterion_05_shrink_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let instances = vec![
        points(&uniform_points(&mut rng, 30_000, 2, 100.0, 0.001)),
        points(&uniform_points(&mut rng, 30_000, 1, 100.0, 1.0)),
        chain(
            &mut rng,
            ChainShape {
                relations: 2,
                rows: 5_000,
                key_domain: 500,
                private: true,
                project_private: true,
            },
        ),
    ];
    run(|| checks::shrink_balance(&instances, 1000, 105));
}

fn guarantee_instances(seed: u64) -> Vec<Instance> {
    let mut out = mixed(seed, 100, 1, 16);
    out.extend(mixed(seed + 1, 50, 17, 5000));
    out
}

#[test]
fn criterion_06_kcenter_guarantee() {
    let instances = guarantee_instances(6);
    run(|| checks::kcenter_guarantee(&instances, 0.2, 106));
}

#[test]
fn criterion_07_refined_kcenter() {
    let instances = guarantee_instances(6);
    run(|| checks::refined_kcenter(&instances, 0.3, 107));
}

#[test]
fn criterion_08_kmeans_guarantee() {
    let mut instances = mixed(8, 60, 1, 12);
    instances.extend(mixed(9, 10, 64, 500));
    run(|| checks::kmeans_guarantee(&instances, 0.1, 108));
}

#[test]
fn criterion_09_farthest_and_gonzalez() {
    let instances = mixed(10, 20, 2, 500);
    run(|| checks::farthest_and_gonzalez(&instances, 200, 0.2, 109));
}

#[test]
fn criterion_10_scaling() {
    let small = scaling_chain(10_000, 110);
    let large = scaling_chain(20_000, 110);
    run(|| checks::scaling(&small, &large, 110));
}

fn write_points(dir: &Path, rows: &[Vec<f64>]) -> PathBuf {
    let mut csv = String::from("X,Y\n");
    for r in rows {
        csv.push_str(&format!("{},{}\n", r[0], r[1]));
    }
    std::fs::write(dir.join("p.csv"), csv).unwrap();
    let cfg = dir.join("instance.json");
    std::fs::write(
        &cfg,
        r#"{"relations": [{"name": "P", "file": "p.csv", "attrs": ["X", "Y"]}]}"#,
    )
    .unwrap();
    cfg
}

fn cli_output(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_relclust"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    [out.stdout, out.stderr].concat()
}

#[test]
fn criterion_11_determinism() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let library = checks::determinism(&mixed(11, 6, 2, 400), 111).expect("check ran to completion");

    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let generated = write_points(dir.path(), &uniform_points(&mut rng, 300, 2, 10.0, 0.01));
    let e1 = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/e1/instance.json");
    let mut invocations = Vec::new();
    for inst in [e1, generated] {
        let inst = inst.to_str().unwrap().to_string();
        for objective in ["kcenter", "kcenter-refined", "kmedian", "kmeans"] {
            invocations.push(
                [
                    "cluster",
                    "-i",
                    &inst,
                    "--objective",
                    objective,
                    "-k",
                    "2",
                    "--epsilon",
                    "0.2",
                    "--seed",
                    "7",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>(),
            );
        }
        for objective in ["rre", "rrt", "rrc", "rrp", "rrm"] {
            invocations.push(
                [
                    "diversity",
                    "-i",
                    &inst,
                    "--objective",
                    objective,
                    "-k",
                    "2",
                    "--seed",
                    "7",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            );
        }
    }
    let differing: Vec<String> = invocations
        .iter()
        .filter(|args| {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            cli_output(&args) != cli_output(&args)
        })
        .map(|args| args.join(" "))
        .collect();
    let passed = library.passed() && differing.is_empty();
    let report = CheckReport {
        status: if passed {
            checks::Status::Pass
        } else {
            checks::Status::Fail
        },
        detail: format!(
            "{}; {}/{} command lines differ between identical runs",
            library.detail,
            differing.len(),
            invocations.len()
        ),
        ..library
    };
    drop(_guard);
    record(report);
}
