use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn locc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = locc(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const L_BLOCKED: &str = r#"{"n":4,"dims":[2,2,2,2],"class":"L","parties":[
  {"bloch":[0.1,0.1,0.2]},{"bloch":[0.1,-0.1,0]},{"bloch":[0,0,0]},{"bloch":[0,0,0]}]}"#;

const L_UNLOCK: &str = r#"{"n":4,"dims":[2,2,2,2],"class":"L","parties":[
  {"bloch":[0.08,0.08,0.2]},{"bloch":[0,0,0]},{"bloch":[0,0,0]},{"bloch":[0,0,0]}]}"#;

#[test]
fn analyze_blocked_l_state() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "l.json", L_BLOCKED);
    let r = ok_json(dir.path(), &["analyze", "l.json"]);
    let res = &r["result"];
    assert_eq!(res["reachable"]["reachable"], false);
    assert_eq!(res["convertible"], false);
    for p in res["parties"].as_array().unwrap() {
        assert_eq!(p["status"], "certified-no");
    }
    assert_eq!(res["isolated"], "yes");
    assert_eq!(r["command"], serde_json::json!(["analyze", "l.json"]));
}

#[test]
fn two_step_synthesis_then_run() {
    let dir = TempDir::new().unwrap();
    let r = ok_json(
        dir.path(),
        &[
            "synth", "two-step-l", "--g1", "0.1,0.1,0.2", "--g2", "0.1,-0.1,0", "--h2", "0.1,0.1,-0.2",
            "-o", "protocol.json", "--state-out", "source.json",
        ],
    );
    let p = r["result"]["p"].as_f64().unwrap();
    assert!((p - 0.75).abs() <= 1e-9, "p = {p}");
    assert_eq!(r["result"]["run"]["deterministic"], true);
    let run = ok_json(dir.path(), &["protocol", "run", "protocol.json", "source.json"]);
    assert_eq!(run["result"]["deterministic"], true);
    let total = run["result"]["total_probability"].as_f64().unwrap();
    assert!((total - 1.0).abs() <= 1e-9);
}

#[test]
fn locc1_synthesis_passes_run_and_unlocks() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", L_UNLOCK);
    // σ₃^{⊗4} is element 3 of the L group
    write(dir.path(), "w.json", r#"{"party":0,"symmetries":[0,3],"p":[0.7,0.3],"h":{"bloch":[0.2,0.2,0.2]}}"#);
    ok_json(dir.path(), &["synth", "locc1", "g.json", "w.json", "-o", "p.json"]);
    let run = ok_json(dir.path(), &["protocol", "run", "p.json", "g.json"]);
    assert_eq!(run["result"]["deterministic"], true);
    let lock = ok_json(dir.path(), &["lock-report", "g.json", "--step", "w.json"]);
    let unlocked: Vec<u64> = lock["result"]["unlocked"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["party"].as_u64().unwrap())
        .collect();
    assert_eq!(unlocked, vec![1, 2, 3]);
    assert_eq!(lock["result"]["prop_commute"], false);
}

#[test]
fn corollary2_demo_fraction_zero() {
    let dir = TempDir::new().unwrap();
    let r = ok_json(dir.path(), &["demo", "corollary2", "--class", "pauli4", "--samples", "2000", "--seed", "7"]);
    assert_eq!(r["result"]["hits"], 0);
    assert_eq!(r["result"]["fraction"], 0.0);
    assert_eq!(r["seed"], 7);
}

#[test]
fn identical_argv_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "l.json", L_BLOCKED);
    for args in [
        &["volume", "--kind", "s", "--anchor", "l.json", "--slice", "party-ball:0", "--samples", "64", "--seed", "5"][..],
        &["--seed", "3", "convertible", "l.json", "--party", "0"][..],
        &["--text", "analyze", "l.json"][..],
    ] {
        let a = locc(dir.path(), args);
        let b = locc(dir.path(), args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn build_psi_m_emits_loadable_state() {
    let dir = TempDir::new().unwrap();
    let out = locc(dir.path(), &["build", "psi-m", "--m", "2", "--alpha", "1,0,2,0,3,0,4,0", "-o", "psi.json"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("renormalized"));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["generic"], true);
    assert_eq!(r["result"]["stabilizer_order"], 4);
    let reach = ok_json(dir.path(), &["reachable", "psi.json"]);
    assert_eq!(reach["result"]["reachable"], false);
    let quiet = locc(
        dir.path(),
        &["build", "psi-m", "--m", "2", "--alpha", "0.5,0,0.5,0,0.5,0,0.5,0", "--path", "symmetrizer", "--genericity", "seed"],
    );
    assert!(quiet.status.success());
    let msg = String::from_utf8_lossy(&quiet.stderr);
    assert!(!msg.contains("renormalized"));
    assert!(msg.contains("not generic"));
}

#[test]
fn sep_check_reports_weights() {
    let dir = TempDir::new().unwrap();
    let id = r#"{"n":4,"dims":[2,2,2,2],"class":"L","parties":[{"bloch":[0,0,0]},{"bloch":[0,0,0]},{"bloch":[0,0,0]},{"bloch":[0,0,0]}]}"#;
    write(dir.path(), "id.json", id);
    let r = ok_json(dir.path(), &["sep-check", "id.json", "id.json"]);
    assert_eq!(r["result"]["status"], "certified-yes");
    assert!(r["result"]["residual"].as_f64().unwrap() <= 1e-9);
    let m = ok_json(dir.path(), &["mes-check", "id.json"]);
    assert_eq!(m["result"]["value"], true);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.json", "{\"n\": 4,");
    write(dir.path(), "ghz.json", r#"{"n":1,"dims":[2],"class":"ghz","parties":[{"bloch":[0,0,0]}]}"#);
    write(
        dir.path(),
        "short.json",
        r#"{"n":4,"dims":[2,2,2,2],"class":"L","parties":[{"bloch":[0,0,0]}]}"#,
    );
    write(dir.path(), "l.json", L_BLOCKED);
    for args in [
        &["analyze", "bad.json"][..],
        &["analyze", "missing.json"][..],
        &["reachable", "ghz.json"][..],
        &["reachable", "short.json"][..],
        &["convertible", "l.json", "--party", "9"][..],
        &["demo", "corollary2", "--class", "ghz"][..],
        &["volume", "--kind", "a", "--anchor", "l.json", "--slice", "segment:0"][..],
        &["synth", "two-step-l", "--g1", "0.1,0.2,0.2", "--g2", "0.1,-0.1,0", "--h2", "0.1,0.1,-0.2"][..],
        &["frobnicate"][..],
    ] {
        let out = locc(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

mod roundtrip {
    // The binary's file types are exercised through JSON values here.
    use super::*;

    #[test]
    fn state_file_is_stable() {
        let dir = TempDir::new().unwrap();
        ok_json(
            dir.path(),
            &[
                "synth", "two-step-l", "--g1", "0.1,0.1,0.2", "--g2", "0.1,-0.1,0", "--h2", "0.1,0.1,-0.2",
                "-o", "p.json", "--state-out", "s.json",
            ],
        );
        let s: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
        assert_eq!(s["class"], "L");
        let p0 = s["parties"][0]["bloch"][2].as_f64().unwrap();
        // the value survives the write with all 17 digits
        assert_eq!(p0, 0.19999999999999998);
        let p: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
        let again: Value = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, again);
    }
}
