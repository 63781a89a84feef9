use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hcforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn hcforge")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn unit_clique(n: usize) -> String {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push(format!("[{i},{j},1.0,0.0]"));
        }
    }
    format!("{{\"n\":{n},\"edges\":[{}]}}", edges.join(","))
}

#[test]
fn eval_on_clique_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", &unit_clique(4));
    let tree = write(dir.path(), "t.txt", "((0,1),(2,3))\n");
    let v = json(&run(&["eval", "--instance", inst.to_str().unwrap(), "--tree", tree.to_str().unwrap()]));
    assert_eq!(v["schema"], "hcforge/v1");
    // n(n-1)(n-2)/6 = 4
    assert_eq!(v["rev"].as_f64().unwrap(), 4.0);
    assert_eq!(v["dis"].as_f64().unwrap(), 0.0);
    assert_eq!(v["config"]["command"], "eval");
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(run(&["eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn malformed_tree_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", &unit_clique(3));
    let tree = write(dir.path(), "t.txt", "((0,1),(1,2))");
    let out = run(&["eval", "--instance", inst.to_str().unwrap(), "--tree", tree.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn oracle_guard() {
    let dir = tempfile::tempdir().unwrap();
    let big = write(dir.path(), "big.json", &unit_clique(11));
    let out = run(&["oracle", "--instance", big.to_str().unwrap(), "--objective", "hcc"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["oracle", "--instance", big.to_str().unwrap(), "--objective", "hcc", "--max-n", "12"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--yes-i-know"));

    let small = write(dir.path(), "s.json", &unit_clique(5));
    let v = json(&run(&["oracle", "--instance", small.to_str().unwrap(), "--objective", "rev"]));
    assert_eq!(v["value"].as_f64().unwrap(), 10.0);
}

#[test]
fn gen_then_hcc_and_epras() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    let out = run(&["gen", "--kind", "hccpm", "--n", "6", "--seed", "5", "--out", inst.to_str().unwrap()]);
    assert!(out.status.success());
    let i = inst.to_str().unwrap();

    let h = json(&run(&["hcc", "--instance", i, "--seed", "1"]));
    assert_eq!(h["seed"], 1);
    let opt = json(&run(&["oracle", "--instance", i, "--objective", "hcc"]));
    assert!(h["hcc"].as_f64().unwrap() >= 0.4767 * opt["value"].as_f64().unwrap());

    let e = json(&run(&["epras", "--instance", i, "--objective", "rev", "--eps", "0.5", "--seed", "2"]));
    assert!(e["value"].as_f64().unwrap() >= e["baselineValue"].as_f64().unwrap() - 1e-9);
    for key in ["tree", "candidatesTried", "caseApplied"] {
        assert!(e.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn gen_transforms_need_input() {
    let out = run(&["gen", "--kind", "complement"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let base = write(dir.path(), "c.json", &unit_clique(2));
    let out = run(&["gen", "--kind", "clique-augment", "--input", base.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["n"], 4);
}

#[test]
fn sketch_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write(dir.path(), "t.txt", "(((0,1),(2,3)),((4,5),(6,7)))");
    let v = json(&run(&["sketch", "--tree", tree.to_str().unwrap(), "--eps", "0.0833"]));
    for key in ["internal_nodes", "max_children", "bags", "tree"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn partition_clique_examples() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", &unit_clique(4));
    let i = inst.to_str().unwrap();
    let found = write(
        dir.path(),
        "a.json",
        r#"{"alpha":[2,2],"beta":[[1,4],[4,1]],"eps_err":0,"delta":0.1,"channel":"sim"}"#,
    );
    let v = json(&run(&["partition", "--instance", i, "--target", found.to_str().unwrap()]));
    assert_eq!(v["verdict"], "found");
    let none = write(
        dir.path(),
        "b.json",
        r#"{"alpha":[2,2],"beta":[[1,0],[0,1]],"eps_err":0.01,"delta":0.1,"channel":"sim"}"#,
    );
    let v = json(&run(&["partition", "--instance", i, "--target", none.to_str().unwrap()]));
    assert_eq!(v["verdict"], "infeasible");
}

#[test]
fn bench_is_byte_identical() {
    let a = run(&["bench", "--suite", "oracles", "--seed", "7"]);
    let b = bin().args(["bench", "--suite", "oracles", "--seed", "7"]).env("HCFORGE_THREADS", "1").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# hcforge bench csv v1 suite=oracles seed=7\nproperty,trials,violations,measured\n"));
}
