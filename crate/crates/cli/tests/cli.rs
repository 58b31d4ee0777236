//! End-to-end runs of the `langevin-lab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write_manifest(dir: &Path, file: &str, body: &str) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, body).unwrap();
    path
}

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langevin-lab"))
        .args(args)
        .env_remove("LANGEVIN_LAB_THREADS")
        .output()
        .unwrap()
}

fn run(op: &str, manifest: &Path, out: &Path) -> Output {
    lab(&[op, "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn results(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap()
}

fn header(out: &Path) -> String {
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    text.lines().next().unwrap().to_owned()
}

const CYCLES: &str = r#"{"name":"cy","seed":SEED,"operation":"cycles",
    "knobs":{"horizon":HORIZON,"dt":0.01,"replicas":2}}"#;

fn cycles_manifest(seed: u64, horizon: f64) -> String {
    CYCLES
        .replace("SEED", &seed.to_string())
        .replace("HORIZON", &horizon.to_string())
}

#[test]
fn stationary_fourth_moment() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(
        dir.path(),
        "m.json",
        r#"{"name":"st","params":{"kappa":1,"p":4,"sigma":1,"delta":0.5},"operation":"stationary"}"#,
    );
    let out = dir.path().join("out");
    let o = run("stationary", &m, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = results(&out);
    assert_eq!(v["status"], "ok");
    assert!((v["headline"]["value"].as_f64().unwrap() - 0.75).abs() < 1e-10);
    assert_eq!(header(&out), "p,moment,closed_form");
    let svg = std::fs::read_to_string(out.join("figure.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    for key in ["seed", "version", "wall_time_s", "manifest_hash", "config_hash"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
}

#[test]
fn variational_zero_area_costs_nothing() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(
        dir.path(),
        "m.json",
        r#"{"name":"va","operation":"variational",
            "knobs":{"x0":0,"T":2,"m":0,"drift":"ExactD","eps":0,"N":64}}"#,
    );
    let out = dir.path().join("out");
    let o = run("variational", &m, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = results(&out);
    assert_eq!(v["headline"]["value"].as_f64().unwrap(), 0.0);
    assert_eq!(header(&out), "time,value");
    // the resolved instance carries every field
    let inst = &v["result"]["instance"];
    for key in ["x0", "T", "m", "p", "kappa", "sigma", "drift", "eps", "N"] {
        assert!(!inst[key].is_null(), "missing {key}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(dir.path(), "m.json", &cycles_manifest(5, 100.0));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("cycles", &m, &a).status.success());
    assert!(lab(&["cycles", "--manifest", m.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "2"])
        .status
        .success());
    let ca = std::fs::read(a.join("results.csv")).unwrap();
    let cb = std::fs::read(b.join("results.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
    assert_eq!(header(&a), "start,end,duration,area,peak");
    assert_eq!(results(&a)["manifest_hash"], results(&b)["manifest_hash"]);
}

#[test]
fn simulate_writes_a_path() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(
        dir.path(),
        "m.json",
        r#"{"name":"sim","seed":3,"operation":"simulate","knobs":{"horizon":1,"dt":0.01}}"#,
    );
    let out = dir.path().join("out");
    assert!(run("simulate", &m, &out).status.success());
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("time,value"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn invalid_manifests_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("stationary", r#"{"name":"x","operation":"stationary","params":{"kappa":-1,"p":4,"sigma":1,"delta":0.5}}"#),
        ("stationary", r#"{"name":"x","operation":"stationary","colour":"red"}"#),
        ("stationary", r#"{"name":"x","operation":"stationary","knobs":{"p_grd":[2]}}"#),
        ("fpt", r#"{"name":"x","operation":"stationary"}"#),
        ("stationary", "not json"),
    ];
    for (op, body) in cases {
        let m = write_manifest(dir.path(), "m.json", body);
        let o = run(op, &m, &out);
        assert_eq!(o.status.code(), Some(2), "{body}");
    }
    let o = lab(&["stationary", "--manifest", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inconclusive_fpt_exits_3_with_partial_artifacts() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(
        dir.path(),
        "m.json",
        r#"{"name":"fq","seed":1,"operation":"fpt","params":{"kappa":0.5,"p":4,"sigma":1,"delta":0.5},
            "knobs":{"replicas":10000,"dt":0.001,"horizon":0.002,"bins":2}}"#,
    );
    let out = dir.path().join("out");
    let o = run("fpt", &m, &out);
    assert_eq!(o.status.code(), Some(3));
    let v = results(&out);
    assert_eq!(v["status"], "non-converged");
    for key in ["bins", "empirical", "bound", "violations"] {
        assert!(v["result"][key].is_array(), "missing {key}");
    }
}

#[test]
fn report_aggregates_matching_runs_and_refuses_others() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (name, seed, horizon) in [("a", 1, 100.0), ("b", 2, 100.0), ("c", 3, 50.0)] {
        let m = write_manifest(d, &format!("{name}.json"), &cycles_manifest(seed, horizon));
        assert!(run("cycles", &m, &d.join(name)).status.success());
    }
    let ok = write_manifest(d, "r.json", r#"{"name":"r","operation":"report","knobs":{"runs":["a","b"]}}"#);
    let out = d.join("r");
    let o = run("report", &ok, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out), "run,seed,manifest_hash,headline");
    assert_eq!(results(&out)["result"]["runs"], 2);

    let bad = write_manifest(d, "q.json", r#"{"name":"q","operation":"report","knobs":{"runs":["a","c"]}}"#);
    let o = run("report", &bad, &d.join("q"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different parameter sets"));
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(dir.path(), "m.json", r#"{"name":"st","operation":"stationary"}"#);
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_langevin-lab"))
        .args(["stationary", "--manifest", m.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("LANGEVIN_LAB_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(results(&out)["threads"], 3);
}
