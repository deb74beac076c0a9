mod common;

use std::process::Command;

fn intentkb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intentkb"))
}

#[test]
fn run_all_reproduces_the_golden_kb() {
    let dir = tempfile::tempdir().unwrap();
    let conf = common::corpus_dir().join("pipeline.conf");
    let out = intentkb()
        .args(["run-all", "--config"])
        .arg(&conf)
        .args(["--seed", "42", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("kb.tsv")).unwrap(),
        std::fs::read(common::golden_kb_path()).unwrap()
    );
}

#[test]
fn each_verb_runs_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let conf = common::corpus_dir().join("pipeline.conf");
    for verb in ["acquire", "categorize", "cluster", "build", "eval"] {
        let out = intentkb()
            .args([verb, "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{verb}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(format!("{verb}.report.json")).is_file());
    }
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let conf = common::corpus_dir().join("pipeline.conf");
    // no upstream artifacts yet
    let out = intentkb()
        .args(["build", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clusters.tsv"));

    let out = intentkb()
        .args(["acquire", "--config", "/nonexistent/pipeline.conf"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "trees = many\n").unwrap();
    let out = intentkb().args(["acquire", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = intentkb().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
