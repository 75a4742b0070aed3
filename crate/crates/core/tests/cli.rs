//! End-to-end behaviour of the `qsuper` binary.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn qsuper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsuper"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn finite_suite_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let o = qsuper(&[
        "check-finite",
        "--M",
        "2",
        "--N",
        "1",
        "--variant",
        "i",
        "--max-degree",
        "3",
        "--report",
        p.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&p);
    let rels = r["relations"].as_array().unwrap();
    assert!(!rels.is_empty());
    for rel in rels {
        for k in ["id", "status", "witness", "lhs", "rhs"] {
            assert!(rel.get(k).is_some(), "missing {k}");
        }
        assert_eq!(rel["status"], "pass");
    }
    assert_eq!(r["metadata"]["target"], "finite");
}

#[test]
fn finite_sabotage_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let o = qsuper(&[
        "check-finite",
        "--M",
        "2",
        "--N",
        "1",
        "--variant",
        "i",
        "--max-degree",
        "4",
        "--sabotage",
        "f2.j=1",
        "--report",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let r = report(&p);
    let fail = r["relations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["status"] == "fail")
        .expect("a failing relation");
    assert!(fail["witness"]["basis"].is_string());
    assert!(fail["lhs"].is_string() && fail["rhs"].is_string());
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL "));
}

#[test]
fn affine_smoke_suite_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let t = Instant::now();
    let o = qsuper(&[
        "check-affine",
        "--energy-cut",
        "0",
        "--mode-window",
        "0",
        "--report",
        p.to_str().unwrap(),
    ]);
    let el = t.elapsed();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(el.as_secs_f64() < 1.0, "smoke suite took {el:?}");
    let r = report(&p);
    let eq14 = r["relations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["id"].as_str().unwrap().starts_with("drinfeld.eq14"))
        .unwrap();
    assert_eq!(eq14["status"], "not-applicable");
}

#[test]
fn affine_override_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let o = qsuper(&[
        "check-affine",
        "--energy-cut",
        "1",
        "--mode-window",
        "1",
        "--momentum",
        "box:0",
        "--override",
        "f13=1",
        "--filter",
        "eq10.i=2.j=1",
        "--report",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(report(&p)["metadata"]["parameters"]["overrides"], "f13=1");
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = qsuper(&[
            "check-affine",
            "--energy-cut",
            "1",
            "--mode-window",
            "1",
            "--momentum",
            "box:0",
            "--k",
            "2",
            "--report",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn apply_prints_the_image() {
    let o = qsuper(&["apply", "--expr", "e1 f1 - f1 e1", "--on", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "[L1]");
    let o = qsuper(&["apply", "--expr", "t1", "--on", "x12", "--jobs", "2"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "L1*q^-2*x12");
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let p = p.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "check-finite",
            "--M",
            "1",
            "--N",
            "0",
            "--variant",
            "i",
            "--max-degree",
            "2",
            "--report",
            p,
        ],
        vec![
            "check-finite",
            "--M",
            "2",
            "--N",
            "1",
            "--variant",
            "iii",
            "--max-degree",
            "2",
            "--report",
            p,
        ],
        vec![
            "check-finite",
            "--M",
            "2",
            "--N",
            "1",
            "--variant",
            "i",
            "--max-degree",
            "2",
            "--sabotage",
            "f3.j=1.jp=9",
            "--report",
            p,
        ],
        vec![
            "check-affine",
            "--energy-cut",
            "1",
            "--mode-window",
            "1",
            "--override",
            "f99=1",
            "--report",
            p,
        ],
        vec![
            "check-affine",
            "--energy-cut",
            "1",
            "--mode-window",
            "-1",
            "--report",
            p,
        ],
        vec![
            "check-affine",
            "--energy-cut",
            "1",
            "--mode-window",
            "1",
            "--k",
            "x",
            "--report",
            p,
        ],
        vec![
            "check-affine",
            "--energy-cut",
            "1",
            "--mode-window",
            "1",
            "--report",
            p,
            "--jobs",
            "0",
        ],
        vec!["apply", "--expr", "g1", "--on", "1"],
        vec!["apply", "--expr", "e1", "--on", "y12"],
        vec!["no-such-command"],
    ];
    for args in cases {
        assert_eq!(code(&qsuper(&args)), 2, "{args:?}");
    }
}
