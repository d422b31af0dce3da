//! End-to-end tests of the command-line front door: verbs, exit codes,
//! report shapes, self-verification, and byte-determinism.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lpdis"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lpdis-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const DYADIC_SPEC: &str = r#"{"kind":"stepfn","p":"1","generators":[
 {"pieces":[{"lo":"0","hi":"1","re":"1","im":"0"}]},
 {"pieces":[{"lo":"0","hi":"1/2","re":"1","im":"0"}]},
 {"pieces":[{"lo":"0","hi":"1/4","re":"1","im":"0"}]},
 {"pieces":[{"lo":"1/4","hi":"1/2","re":"1","im":"0"}]}
]}"#;

const SWAPPED_SPEC: &str = r#"{"kind":"stepfn","p":"1","generators":[
 {"pieces":[{"lo":"0","hi":"1","re":"1","im":"0"}]},
 {"pieces":[{"lo":"1/2","hi":"1","re":"1","im":"0"}]},
 {"pieces":[{"lo":"1/4","hi":"1/2","re":"1","im":"0"}]},
 {"pieces":[{"lo":"0","hi":"1/4","re":"1","im":"0"}]}
]}"#;

fn read_report(path: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_status(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sigma_on_disjoint_generators_contains_zero() {
    let dir = workdir("sigma");
    let spec = dir.join("disjoint.json");
    // generators 0 and 1 are disjointly supported
    std::fs::write(
        &spec,
        r#"{"kind":"stepfn","p":"3","generators":[
          {"pieces":[{"lo":"0","hi":"1/2","re":"1","im":"0"}]},
          {"pieces":[{"lo":"1/2","hi":"1","re":"0","im":"1"}]}
        ]}"#,
    )
    .unwrap();
    let report = dir.join("sigma.json");
    let out = bin()
        .args(["sigma", spec.to_str().unwrap(), "--report", report.to_str().unwrap()])
        .output()
        .unwrap();
    assert_status(&out, 0);
    let doc = read_report(&report);
    assert_eq!(doc["verb"], "sigma");
    assert_eq!(doc["contains_zero"], true);
    // reported numbers are rational-string interval pairs
    assert!(doc["sigma"]["lo"].is_string() && doc["sigma"]["hi"].is_string());
}

#[test]
fn disintegrate_then_verify_round_trips() {
    let dir = workdir("disintegrate");
    let spec = dir.join("dyadic.json");
    std::fs::write(&spec, DYADIC_SPEC).unwrap();
    let report = dir.join("dis.json");
    let out = bin()
        .args([
            "disintegrate",
            spec.to_str().unwrap(),
            "--budget",
            "2",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 0);
    let doc = read_report(&report);
    let stages = doc["stages"].as_array().unwrap();
    assert_eq!(
        stages.last().unwrap()["certificate"]["level"], 2,
        "final stage must carry a level-2 certificate"
    );
    // the verify verb independently reproduces every certificate bound
    let vreport = dir.join("verify.json");
    let out = bin()
        .args([
            "verify",
            report.to_str().unwrap(),
            spec.to_str().unwrap(),
            "--report",
            vreport.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 0);
    assert_eq!(read_report(&vreport)["all_certified"], true);
}

#[test]
fn isometry_then_verify_round_trips() {
    let dir = workdir("isometry");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    std::fs::write(&a, DYADIC_SPEC).unwrap();
    std::fs::write(&b, SWAPPED_SPEC).unwrap();
    let report = dir.join("iso.json");
    let out = bin()
        .args([
            "isometry",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--precision",
            "6",
            "--budget",
            "2",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 0);
    let vreport = dir.join("verify.json");
    let out = bin()
        .args([
            "verify",
            report.to_str().unwrap(),
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--report",
            vreport.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 0);
    assert_eq!(read_report(&vreport)["all_certified"], true);
}

#[test]
fn exponent_rejections_exit_with_status_4() {
    let dir = workdir("exponent");
    let p2 = dir.join("p2.json");
    std::fs::write(
        &p2,
        r#"{"kind":"stepfn","p":"2","generators":[{"pieces":[{"lo":"0","hi":"1","re":"1","im":"0"}]}]}"#,
    )
    .unwrap();
    let p3 = dir.join("p3.json");
    std::fs::write(
        &p3,
        r#"{"kind":"stepfn","p":"3","generators":[{"pieces":[{"lo":"0","hi":"1","re":"1","im":"0"}]}]}"#,
    )
    .unwrap();
    let report = dir.join("never.json");
    let out = bin()
        .args([
            "isometry",
            p2.to_str().unwrap(),
            p2.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 4);
    let p1 = dir.join("p1.json");
    std::fs::write(&p1, DYADIC_SPEC).unwrap();
    let out = bin()
        .args([
            "isometry",
            p1.to_str().unwrap(),
            p3.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&out, 4);
}

#[test]
fn parse_errors_exit_with_status_2() {
    let dir = workdir("parse");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "definitely not json").unwrap();
    let report = dir.join("never.json");
    let out = bin()
        .args(["sigma", bad.to_str().unwrap(), "--report", report.to_str().unwrap()])
        .output()
        .unwrap();
    assert_status(&out, 2);
    assert!(!report.exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = workdir("determinism");
    let spec = dir.join("dyadic.json");
    std::fs::write(&spec, DYADIC_SPEC).unwrap();
    let r1 = dir.join("run1.json");
    let r2 = dir.join("run2.json");
    for r in [&r1, &r2] {
        let out = bin()
            .args([
                "disintegrate",
                spec.to_str().unwrap(),
                "--budget",
                "2",
                "--report",
                r.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_status(&out, 0);
    }
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
}
