use std::path::Path;
use std::process::{Command, Output};

use sparse_fusion::fixtures::running_example;
use sparse_fusion::msp::FusedPartitioning;
use sparse_fusion::sparse::write_matrix_market;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sparse-fusion"));
    c.env_remove("SPARSE_FUSION_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lap10.mtx");
    let o = run(&["gen", "--laplacian", "10", "--out", s(&p)]);
    assert!(o.status.success(), "{}", text(&o));
    let head = std::fs::read_to_string(&p).unwrap();
    assert!(head.starts_with("%%MatrixMarket matrix coordinate real"));
    assert!(head.lines().any(|l| l.starts_with("100 100 ")));

    let q = dir.path().join("band.mtx");
    let o = run(&[
        "gen",
        "--banded",
        "50",
        "--bandwidth",
        "4",
        "--seed",
        "7",
        "--out",
        s(&q),
    ]);
    assert!(o.status.success());
    let again = dir.path().join("band2.mtx");
    run(&[
        "gen",
        "--banded",
        "50",
        "--bandwidth",
        "4",
        "--seed",
        "7",
        "--out",
        s(&again),
    ]);
    assert_eq!(std::fs::read(&q).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn fuse_happy_path_and_schedule_dump() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lap10.mtx");
    run(&["gen", "--laplacian", "10", "--out", s(&p)]);
    let dump = dir.path().join("sched.json");
    let o = run(&[
        "fuse",
        "--combo",
        "4",
        "--matrix",
        s(&p),
        "--threads",
        "4",
        "--dump-schedule",
        s(&dump),
        "--repeats",
        "1",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let out = text(&o);
    for key in ["speedup", "NER", "barriers", "separated (from reuse ratio)"] {
        assert!(out.contains(key), "missing {key}: {out}");
    }
    let v = FusedPartitioning::from_json(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert!(v.fusion);
}

#[test]
fn threads_env_var_is_a_default_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lap4.mtx");
    run(&["gen", "--laplacian", "4", "--out", s(&p)]);
    let o = bin()
        .env("SPARSE_FUSION_THREADS", "3")
        .args(["fuse", "--combo", "5", "--matrix", s(&p), "--repeats", "1"])
        .output()
        .unwrap();
    assert!(
        text(&o)
            .lines()
            .any(|l| l.starts_with("threads") && l.ends_with(" 3")),
        "{}",
        text(&o)
    );
    let o = bin()
        .env("SPARSE_FUSION_THREADS", "3")
        .args([
            "fuse",
            "--combo",
            "5",
            "--matrix",
            s(&p),
            "--threads",
            "2",
            "--repeats",
            "1",
        ])
        .output()
        .unwrap();
    assert!(text(&o)
        .lines()
        .any(|l| l.starts_with("threads") && l.ends_with(" 2")));
}

#[test]
fn permutation_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lap4.mtx");
    run(&["gen", "--laplacian", "4", "--out", s(&p)]);
    let perm = dir.path().join("perm.txt");
    std::fs::write(
        &perm,
        (0..16).rev().map(|i| format!("{i}\n")).collect::<String>(),
    )
    .unwrap();
    let o = run(&[
        "fuse",
        "--combo",
        "6",
        "--matrix",
        s(&p),
        "--perm",
        s(&perm),
        "--repeats",
        "1",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    std::fs::write(&perm, "0\n0\n").unwrap();
    assert_eq!(
        run(&[
            "fuse",
            "--combo",
            "6",
            "--matrix",
            s(&p),
            "--perm",
            s(&perm)
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lap4.mtx");
    run(&["gen", "--laplacian", "4", "--out", s(&p)]);
    assert_eq!(
        run(&["fuse", "--combo", "bogus", "--matrix", s(&p)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["fuse", "--combo", "1", "--matrix", "/no/such.mtx"])
            .status
            .code(),
        Some(2)
    );
    // not positive definite: IC0 breaks down
    let bad = dir.path().join("indef.mtx");
    std::fs::write(
        &bad,
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 3\n2 2 1\n",
    )
    .unwrap();
    assert_eq!(
        run(&["fuse", "--combo", "5", "--matrix", s(&bad)])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn validate_default_suite_passes() {
    let o = run(&["validate", "--combo", "all", "--replays", "3"]);
    assert!(o.status.success(), "{}", text(&o));
    let out = text(&o);
    assert!(!out.contains("FAIL"));
    assert!(out.contains("0 failed"));
}

#[test]
fn corrupted_schedule_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.mtx");
    write_matrix_market(&running_example(), &p).unwrap();
    let dump = dir.path().join("s.json");
    let o = run(&[
        "fuse",
        "--combo",
        "4",
        "--matrix",
        s(&p),
        "--threads",
        "3",
        "--dump-schedule",
        s(&dump),
        "--repeats",
        "1",
    ]);
    assert!(o.status.success(), "{}", text(&o));

    let mut v = FusedPartitioning::from_json(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    // the w-partition holding first-kernel 5 and 6 and their consumers
    let w = v.spartitions[0]
        .iter_mut()
        .find(|w| w.len() == 4 && w.iter().any(|e| e.iter == 5))
        .unwrap();
    w.reverse();
    std::fs::write(&dump, v.to_json().unwrap()).unwrap();
    let o = run(&[
        "validate",
        "--combo",
        "4",
        "--matrix",
        s(&p),
        "--schedule",
        s(&dump),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", text(&o));
    assert!(text(&o).contains("Ordering"), "{}", text(&o));

    // schedule for a larger problem than the matrix
    let lap = dir.path().join("lap2.mtx");
    run(&["gen", "--laplacian", "2", "--out", s(&lap)]);
    let o = run(&[
        "validate",
        "--combo",
        "4",
        "--matrix",
        s(&lap),
        "--schedule",
        s(&dump),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn bench_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    run(&[
        "gen",
        "--laplacian",
        "4",
        "--out",
        s(&dir.path().join("a.mtx")),
    ]);
    run(&[
        "gen",
        "--banded",
        "20",
        "--bandwidth",
        "3",
        "--out",
        s(&dir.path().join("b.mtx")),
    ]);
    let report = dir.path().join("r.csv");
    let o = run(&[
        "bench",
        "--suite",
        s(dir.path()),
        "--combos",
        "all",
        "--threads",
        "1,4",
        "--format",
        "csv",
        "--warmup",
        "1",
        "--repeats",
        "1",
        "--out",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 7 * 2 * 4);
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")), "{csv}");

    let o = run(&[
        "bench",
        "--suite",
        s(dir.path()),
        "--combos",
        "5",
        "--format",
        "json",
        "--warmup",
        "0",
        "--repeats",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2 * 4);

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["bench", "--suite", s(empty.path())]).status.code(),
        Some(2)
    );
}
