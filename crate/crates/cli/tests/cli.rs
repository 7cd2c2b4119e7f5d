use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn e1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/e1/instance.json")
}

fn relclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn e1_args<'a>(cmd: &'a str, e1: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd, "-i", e1];
    v.extend_from_slice(rest);
    v
}

/// Two relations sharing a constant key: a cross product of `a * c` results.
fn cross_product(dir: &Path, a: usize, c: usize) -> PathBuf {
    let r1: String = (0..a).map(|i| format!("{i},1\n")).collect();
    let r2: String = (0..c).map(|i| format!("1,{i}\n")).collect();
    std::fs::write(dir.join("r1.csv"), format!("A,B\n{r1}")).unwrap();
    std::fs::write(dir.join("r2.csv"), format!("B,C\n{r2}")).unwrap();
    let cfg = dir.join("instance.json");
    std::fs::write(
        &cfg,
        r#"{"relations": [{"name": "R1", "file": "r1.csv", "attrs": ["A", "B"]},
                          {"name": "R2", "file": "r2.csv", "attrs": ["B", "C"]}],
            "join_tree_edges": [["R1", "R2"]]}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn query_count_on_e1() {
    let p = e1();
    let out = relclust(&e1_args(
        "query",
        p.to_str().unwrap(),
        &["--kind", "count", "--box", "C:10..10"],
    ));
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "2");
}

#[test]
fn query_report_and_repr() {
    let p = e1();
    let p = p.to_str().unwrap();
    let out = relclust(&e1_args(
        "query",
        p,
        &["--kind", "report", "--box", "A:1..1,B:2..2,C:6..25"],
    ));
    let pts: Vec<Vec<f64>> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(pts.len(), 2);
    assert!(pts.iter().all(|q| q[1] == 2.0));
    let out = relclust(&e1_args("query", p, &["--kind", "repr", "--box", "C:30..40"]));
    assert_eq!(stdout(&out).trim(), "[]");
    let out = relclust(&e1_args("query", p, &["--kind", "sample", "--z", "5", "--seed", "3"]));
    let pts: Vec<Vec<f64>> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(pts.len(), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 3"));
}

#[test]
fn ingest_reports_join_size() {
    let p = e1();
    let out = relclust(&["ingest", "-i", p.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("join size: 3"), "{text}");
    assert!(text.contains("R1: 3 rows, 2 after reduction"), "{text}");
}

#[test]
fn cluster_emits_versioned_json() {
    let p = e1();
    let out = relclust(&e1_args(
        "cluster",
        p.to_str().unwrap(),
        &["--objective", "kcenter", "-k", "2", "--epsilon", "0.2", "--seed", "7"],
    ));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["spec"], "1");
    assert_eq!(v["seed"], 7);
    assert!(v["centers"].as_array().unwrap().len() <= 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 7"));
}

#[test]
fn cluster_verification_levels_pass() {
    let p = e1();
    for objective in ["kcenter", "kcenter-refined", "kmedian", "kmeans"] {
        for level in ["sandwich", "full-brute"] {
            let out = relclust(&e1_args(
                "cluster",
                p.to_str().unwrap(),
                &["--objective", objective, "-k", "1", "--seed", "1", "--verify", level],
            ));
            assert_eq!(
                out.status.code(),
                Some(0),
                "{objective} {level}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sol.json");
    let p = e1();
    let args = ["--objective", "kmeans", "-k", "2", "--seed", "5"];
    let out = relclust(&e1_args("cluster", p.to_str().unwrap(), &args));
    let mut with_file = args.to_vec();
    with_file.extend(["-o", file.to_str().unwrap()]);
    relclust(&e1_args("cluster", p.to_str().unwrap(), &with_file));
    assert_eq!(std::fs::read_to_string(&file).unwrap(), stdout(&out));
}

#[test]
fn config_errors_exit_2() {
    let p = e1();
    let p = p.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        e1_args("cluster", p, &["--objective", "kcenter", "-k", "2", "--epsilon", "1.5"]),
        e1_args("cluster", p, &["--objective", "kcenter", "-k", "0"]),
        e1_args("cluster", p, &["--objective", "nonsense", "-k", "2"]),
        e1_args("query", p, &["--kind", "count", "--box", "Z:0..1"]),
        e1_args("query", p, &["--kind", "count", "--box", "C:0"]),
        e1_args("diversity", p, &["--objective", "rrm", "-k", "3"]),
        e1_args("diversity", p, &["--objective", "bogus", "-k", "2"]),
        vec!["ingest", "-i", "/nonexistent/instance.json"],
    ];
    for args in cases {
        let out = relclust(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn full_brute_refused_on_large_joins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cross_product(dir.path(), 400, 300);
    let cfg = cfg.to_str().unwrap();
    let out = relclust(&["ingest", "-i", cfg]);
    assert!(stdout(&out).contains("join size: 120000"));
    let out = relclust(&[
        "cluster",
        "-i",
        cfg,
        "--objective",
        "kcenter",
        "-k",
        "2",
        "--verify",
        "full-brute",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refused"));
}

#[test]
fn verify_on_tiny_instance_passes() {
    let p = e1();
    let out = relclust(&["verify", "-i", p.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("criterion")));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn diversity_is_deterministic() {
    let p = e1();
    let args = e1_args(
        "diversity",
        p.to_str().unwrap(),
        &["--objective", "rrc", "-k", "3", "--seed", "9"],
    );
    let a = relclust(&args);
    let b = relclust(&args);
    assert!(a.status.success());
    assert_eq!((a.stdout, a.stderr), (b.stdout, b.stderr));
}

#[test]
fn bench_prints_one_row_per_size() {
    let out = relclust(&["bench", "--sizes", "200,400"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3);
}
