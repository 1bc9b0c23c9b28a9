use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idslab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(stdout: &str, key: &str) -> f64 {
    let tag = format!("{key}=");
    stdout
        .split_whitespace()
        .find_map(|w| w.strip_prefix(&tag))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .parse()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn free_ids_matches_sqrt_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("free.cfg");
    let out = run_ok(&[
        "ids",
        "--spec",
        cfg.to_str().unwrap(),
        "--d",
        "1",
        "--E",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let n = field(&out, "N");
    let exact = 0.5f64.sqrt() / std::f64::consts::PI;
    assert!((n - exact).abs() < 2e-4, "{n} vs {exact}");
    let json = std::fs::read_to_string(dir.path().join("periodized-1d-n20-s0.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(meta["config"]["seed"], 0);
    assert_eq!(meta["config"]["spec"]["dimension"], 1);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let cfg = configs().join("bernoulli.cfg");
    let cfg = cfg.to_str().unwrap();
    let mut runs = Vec::new();
    for w in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap().to_string();
        let d = d.as_str();
        let common = ["--spec", cfg, "--workers", w, "--out", d];
        let ids = [&["ids", "--n", "3", "--samples", "12", "--grid", "0.05:2:3", "--theta-nodes", "8"][..], &common[..]].concat();
        let fv = [&["ids", "--method", "fv", "--bc", "neumann", "--n", "5", "--samples", "9", "--E", "0.2,0.8"][..], &common[..]].concat();
        let dev = [&["deviation", "--n", "4", "--E", "0.5", "--trials", "50", "--cutoff-mult", "4"][..], &common[..]].concat();
        let sf = [&["sample-field", "--n", "3", "--index", "2", "--periodize", "--format", "binary"][..], &common[..]].concat();
        for args in [ids, fv, dev, sf] {
            run_ok(&args);
        }
        runs.push((dir, files(Path::new(d))));
    }
    assert_eq!(runs[0].1.len(), 8);
    assert_eq!(runs[0].1, runs[1].1);
}

#[test]
fn ld_rate_prints_exact_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["ld-rate", "--law", "bernoulli:0.5", "--m", "100", "--t", "0.2", "--out", dir.path().to_str().unwrap()]);
    let p = field(&out, "probability");
    assert!((p - 7.85014e-5).abs() < 1e-9, "{out}");
    assert!((field(&out, "hoeffding") - 2.0 * (-8.0f64).exp()).abs() < 1e-12);
    assert!(out.contains("exact=true"));
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [&[&str]; 5] = [
        &["ids", "--bogus"],
        &["frobnicate"],
        &["ids", "--spec", "/nonexistent/spec.cfg", "--out", d],
        &["sandwich", "--alpha", "1.5", "--out", d],
        &["ids", "--samples", "0", "--out", d],
    ];
    for args in cases {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // nothing is computed or written before validation fails
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn runtime_errors_exit_with_one() {
    // the output directory cannot be created under a regular file
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = bin()
        .args(["homogenized", "--E", "0.3", "--theta-nodes", "4", "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["homogenized", "--E", "0.3", "--theta-nodes", "4"])
        .env("IDSLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("homogenized-1d-n0-s0.csv").exists());
    assert!(dir.path().join("homogenized-1d-n0-s0.json").exists());
}

#[test]
fn help_exits_zero_and_documents_defaults() {
    let out = bin().args(["sandwich", "--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("default: 200"));
}

#[test]
fn run_returns_codes_in_process() {
    assert_eq!(idslab_cli::run(["idslab", "--nope"]), 2);
    assert_eq!(idslab_cli::run(["idslab", "ld-rate", "--law", "poisson:1", "--m", "3", "--t", "0.1"]), 2);
}
