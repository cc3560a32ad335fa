mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chirpest::harness::read_signal;

fn chirpest(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirpest"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn tone_spec() -> String {
    common::bundled_spec("tone").to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(chirpest(&[], tmp.path()).status.code(), Some(2));
    assert_eq!(chirpest(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(chirpest(&["estimate", "x.sig", "--algo", "SGD"], tmp.path()).status.code(), Some(2));
    assert_eq!(chirpest(&["benchmark"], tmp.path()).status.code(), Some(2));
}

#[test]
fn validation_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    let text = fs::read_to_string(common::bundled_spec("tone"))
        .unwrap()
        .replace("123.4", "623.4");
    fs::write(&bad, text).unwrap();
    let out = chirpest(&["benchmark", "--config", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("f_s/2"));

    let missing = chirpest(&["estimate", "no-such-file.sig"], tmp.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn noiseless_tone_round_trips_through_simulate_and_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let sig = tmp.path().join("tone.sig");
    let sim = chirpest(&["simulate", "--config", &tone_spec(), "--out", sig.to_str().unwrap()], tmp.path());
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let (header, signal) = read_signal(&sig).unwrap();
    assert_eq!(signal.len(), 128);
    assert_eq!(header.provenance.snr_db, None);

    let est = chirpest(&["estimate", sig.to_str().unwrap(), "--seed", "4"], tmp.path());
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let report: serde_json::Value = serde_json::from_slice(&est.stdout).unwrap();
    let f = report["phase"][0][0].as_f64().unwrap();
    assert!((f - 123.4).abs() <= 1e-2, "estimated {f}");
    let amp = report["amplitude"][0][0].as_f64().unwrap();
    assert!((amp - 1.0).abs() <= 1e-2, "amplitude {amp}");
}

#[test]
fn gradcheck_passes_on_the_table1_mixture() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = common::bundled_spec("table1");
    let out = chirpest(&["gradcheck", "--config", spec.to_str().unwrap()], tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    let err: f64 = stdout
        .split_whitespace()
        .nth(3)
        .and_then(|v| v.parse().ok())
        .expect("error printed");
    assert!(err <= 1e-4);
}

#[test]
fn benchmark_twice_writes_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = chirpest(
            &["benchmark", "--config", &tone_spec(), "--seed", "7", "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let table_a = run("a");
    let table_b = run("b");
    assert_eq!(table_a.len(), table_b.len());

    let mut compared = 0;
    for entry in walk(&tmp.path().join("a")) {
        let rel = entry.strip_prefix(tmp.path().join("a")).unwrap();
        if rel == Path::new("timing.json") {
            continue;
        }
        assert_eq!(fs::read(&entry).unwrap(), fs::read(tmp.path().join("b").join(rel)).unwrap(), "{rel:?}");
        compared += 1;
    }
    assert!(compared > 3);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}
