use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfmap-chow"))
        .args(args)
        .env("SELFMAP_CHOW_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

#[test]
fn basis_listings() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = run(&cache, &["--json", "basis", "--d", "2", "--n", "0"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["rank"], 2);

    let out = run(&cache, &["--json", "basis", "--d", "1", "--n", "1", "--weights", "1"]);
    let v = json(&out);
    assert_eq!(v["unstable"], serde_json::json!(["D|B=1|k=1"]));

    let out = run(&cache, &["basis", "--d", "1", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not admissible"));
    assert!(stderr(&out).contains("L*d_T"));
}

#[test]
fn intersection_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cases: [(&[&str], &str); 3] = [
        (
            &["intersect", "--d", "2", "--factor", "D|B=|k=1", "--factor", "D|B=|k=1"],
            "1",
        ),
        (&["intersect", "--d", "1", "--weights", "1", "--factor", "H"], "-1/4"),
        (&["intersect", "--d", "0", "--weights", "1,1"], "1"),
    ];
    for (args, expected) in cases {
        let out = run(&cache, args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        assert_eq!(stdout(&out).trim(), expected, "{args:?}");
    }
}

#[test]
fn invalid_queries_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = run(&cache, &["intersect", "--d", "2", "--factor", "D|B=|k=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("expected 2 factors"));
    let out = run(
        &cache,
        &["intersect", &dir.path().join("missing.json").display().to_string()],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_queries_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = run(
        &cache,
        &[
            "--json",
            "intersect",
            "--d",
            "1",
            "--weights",
            "1/2,1",
            "--factor",
            "2*D|B=|k=1 - D|B=2|k=1",
            "--factor",
            "H",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let first = json(&out);
    let file = dir.path().join("query.json");
    fs::write(&file, first["query"].to_string()).unwrap();
    let again = json(&run(&cache, &["--json", "intersect", file.to_str().unwrap()]));
    assert_eq!(again["query"], first["query"]);
    assert_eq!(again["value"], first["value"]);
}

#[test]
fn cold_and_warm_cache_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "--json",
        "intersect",
        "--d",
        "2",
        "--weights",
        "0",
        "--factor",
        "H",
        "--factor",
        "H",
        "--factor",
        "H",
    ];
    let cold = json(&run(&cache, &args));
    let warm = json(&run(&cache, &args));
    assert_eq!(cold["value"], "-5/48");
    assert_eq!(cold["value"], warm["value"]);
    assert_eq!(cold["cache"]["hit"], false);
    assert_eq!(warm["cache"]["hit"], true);
    assert_eq!(fs::read_to_string(&cache).unwrap().lines().count(), 1);
}

#[test]
fn explicit_cache_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_cache = dir.path().join("env");
    let flag_cache = dir.path().join("flag");
    let flag = flag_cache.display().to_string();
    let out = run(
        &env_cache,
        &["--cache", &flag, "intersect", "--d", "0", "--weights", "1,1"],
    );
    assert!(out.status.success());
    assert!(flag_cache.exists());
    assert!(!env_cache.exists());
}

#[test]
fn corrupted_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["--json", "intersect", "--d", "1", "--weights", "1", "--factor", "H"];
    run(&cache, &args);
    let good = fs::read_to_string(&cache).unwrap();
    let (key, rest) = good.split_once('\t').unwrap();
    let (query, _) = rest.split_once('\t').unwrap();
    let tampered = format!("{good}garbage line\n{key}\t{query}\t7/3\n");
    fs::write(&cache, tampered).unwrap();

    let out = run(&cache, &args);
    assert!(out.status.success());
    assert!(stderr(&out).contains("warning: cache"));
    let v = json(&out);
    assert_eq!(v["value"], "-1/4");
    assert_eq!(v["cache"]["hit"], false);
    // The conflicting key was dropped and recomputed; the file is clean again.
    let rebuilt = fs::read_to_string(&cache).unwrap();
    assert_eq!(rebuilt, good);
    let out = run(&cache, &args);
    assert!(stderr(&out).is_empty());
    assert_eq!(json(&out)["cache"]["hit"], true);
}

#[test]
fn selfcheck_reports_every_suite_and_repairs_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    fs::write(&cache, "not a record\n").unwrap();
    let out = run(&cache, &["--json", "--jobs", "2", "selfcheck"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stderr(&out).contains("rebuilt"));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 9);
    assert_eq!(fs::read_to_string(&cache).unwrap(), "");
}

#[test]
fn classes_and_pullbacks() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = run(&cache, &["class", "dp", "--d", "2", "--n", "0"]);
    assert_eq!(stdout(&out).trim(), "1/4*D|B=|k=1 + D|B=|k=2");
    let per_one = stdout(&run(&cache, &["class", "per", "--d", "4", "--n", "0", "--m", "1"]));
    let pulled = run(
        &cache,
        &[
            "--json",
            "pullback",
            "selfcompose",
            "--d",
            "2",
            "--n",
            "0",
            "--m",
            "2",
            "--class",
            per_one.trim(),
        ],
    );
    let per_two = run(&cache, &["--json", "class", "per", "--d", "2", "--n", "0", "--m", "2"]);
    assert_eq!(json(&pulled)["pullback"], json(&per_two)["class"]);
    let out = run(
        &cache,
        &[
            "--json", "pullback", "compose", "--d1", "1", "--n1", "1", "--d2", "2", "--class", "H",
        ],
    );
    let v = json(&out);
    assert_eq!(v["first"], serde_json::json!({"H": "1/1"}));
    let out = run(
        &cache,
        &["identify", "--d", "1", "--n", "1", "--weights", "1", "D|B=1|k=1"],
    );
    assert_eq!(stdout(&out), "basis: D|B=1|k=1\nquotient: 0\n");
}
