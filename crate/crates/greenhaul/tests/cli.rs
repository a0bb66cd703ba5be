use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/five_node.json");

fn greenhaul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenhaul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn solve_and_oracle_agree_on_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (plan, grid, log) = (tmp(&dir, "plan.json"), tmp(&dir, "grid.json"), tmp(&dir, "log.csv"));
    let out = greenhaul(&[
        "solve",
        "--instance",
        FIXTURE,
        "--out",
        plan.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = greenhaul(&[
        "oracle",
        "--instance",
        FIXTURE,
        "--grid-t",
        "5",
        "--grid-c",
        "33",
        "--grid-w",
        "5",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let (p, g) = (read_json(&plan), read_json(&grid));
    let alg = p["summary"]["objective"].as_f64().unwrap();
    let gap = p["gap_bound"].as_f64().unwrap();
    let opt = g["summary"]["objective"].as_f64().unwrap();
    assert!(alg > 0.0, "the fixture needs grid energy");
    // the dual's gap bound also covers the (coarser) grid optimum
    assert!(alg - opt <= gap + 1e-6, "{alg} {opt} {gap}");

    let log = std::fs::read_to_string(&log).unwrap();
    assert!(log.starts_with("k,dual,certified_dual,max_residual,best_feasible_objective,gap_bound"));
    assert_eq!(log.lines().count(), 201);

    for (f, strict) in [(&plan, false), (&grid, true)] {
        let mut args = vec!["check", "--instance", FIXTURE, "--plan", f.to_str().unwrap()];
        if strict {
            args.push("--strict-soc");
        }
        let out = greenhaul(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn infeasible_and_refused_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(Path::new(FIXTURE));
    doc["params"]["deadline_h"] = Value::from(0.5);
    let tight = tmp(&dir, "tight.json");
    std::fs::write(&tight, doc.to_string()).unwrap();
    assert_eq!(greenhaul(&["solve", "--instance", tight.to_str().unwrap(), "--iters", "20"]).status.code(), Some(2));
    assert_eq!(greenhaul(&["oracle", "--instance", tight.to_str().unwrap()]).status.code(), Some(2));

    let big = tmp(&dir, "big.json");
    let out = greenhaul(&["gen", "--topology", "planar", "--nodes", "20", "--stations", "3", "--out", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(greenhaul(&["oracle", "--instance", big.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(greenhaul(&["solve", "--instance", "/nonexistent/x.json"]).status.code(), Some(1));
    let junk = tmp(&dir, "junk.json");
    std::fs::write(&junk, "{\"nodes\": 3}").unwrap();
    assert_eq!(greenhaul(&["solve", "--instance", junk.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(greenhaul(&["solve", "--instance", FIXTURE, "--deadline-factor", "0.5"]).status.code(), Some(1));
    assert_eq!(greenhaul(&["solve"]).status.code(), Some(1));
    assert_eq!(greenhaul(&["--help"]).status.code(), Some(0));
}

#[test]
fn generation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..2).map(|i| tmp(&dir, &format!("g{i}.json"))).collect();
    for f in &files {
        let out = greenhaul(&[
            "gen",
            "--seed",
            "11",
            "--topology",
            "grid",
            "--nodes",
            "9",
            "--stations",
            "2",
            "--intensity",
            "diurnal:0.4:0.2",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
}

#[test]
fn sweeps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "alpha.csv");
    let out = greenhaul(&[
        "sweep-alpha",
        "--instances",
        FIXTURE,
        "--alphas",
        "0.0,0.05",
        "--iters",
        "40",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("alpha,instances,solved,"));
    assert_eq!(text.lines().count(), 3);

    let csv = tmp(&dir, "deadline.csv");
    let out = greenhaul(&[
        "sweep-deadline",
        "--instances",
        FIXTURE,
        "--factors",
        "1.2",
        "--iters",
        "40",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
}
