use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn memvol(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_memvol"));
    cmd.args(args).env_remove("MEMVOL_THREADS");
    if let Some(n) = threads {
        cmd.env("MEMVOL_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

#[test]
fn verify_passes_without_memory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "run.cfg",
        "process.tau = 0\nnumerics.n_paths = 4000\n",
    );
    let out = memvol(&["verify", "--config", s(&cfg)], None);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("ok ")).count(),
        5,
        "{stdout}"
    );
}

#[test]
fn verify_passes_with_memory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "run.cfg",
        "tau = 0.1\nb = 0.3\nnumerics.n_paths = 4000\n",
    );
    let out = memvol(&["verify", "--config", s(&cfg)], None);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn maturity_beyond_horizon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "run.cfg", "tau = 0.1\npricing.maturity = 2\n");
    let price = dir.path().join("price.json");
    let out = memvol(
        &[
            "price",
            "--config",
            s(&cfg),
            "--engine",
            "pde",
            "--out",
            s(&price),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert!(err["details"][0]
        .as_str()
        .unwrap()
        .contains("pricing.maturity"));
    assert!(!price.exists());
}

#[test]
fn every_config_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "run.cfg",
        "process.tau = -1\nnumerics.n_steps = zero\n",
    );
    let out = memvol(
        &[
            "effvol",
            "--config",
            s(&cfg),
            "--out",
            s(&dir.path().join("b.csv")),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    let details = stderr_json(&out)["details"].as_array().unwrap().clone();
    assert_eq!(details.len(), 2, "{details:?}");
    assert!(details[0]
        .as_str()
        .unwrap()
        .starts_with("process.tau (line 1)"));
    assert!(details[1]
        .as_str()
        .unwrap()
        .starts_with("numerics.n_steps (line 2)"));
}

#[test]
fn effvol_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("b.csv"),
        "t,value\n0,0.2\n0.5,0.35\n1,0.25\n",
    )
    .unwrap();
    let cfg = config(
        dir.path(),
        "run.cfg",
        "tau = 0.2\nb = csv:b.csv\nnumerics.n_steps = 50\n",
    );
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1"), Some("4")].into_iter().enumerate() {
        let path = dir.path().join(format!("b{i}.csv"));
        let out = memvol(&["effvol", "--config", s(&cfg), "--out", s(&path)], threads);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(fs::read(&path).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    assert_eq!(lines.next(), Some("t,B"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn simulate_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "run.cfg", "tau = 0.1\nnumerics.n_steps = 40\n");
    let read = |threads: &str| {
        let path = dir.path().join(format!("paths{threads}.csv"));
        let out = memvol(
            &[
                "simulate",
                "--config",
                s(&cfg),
                "--paths",
                "20",
                "--kind",
                "full",
                "--out",
                s(&path),
            ],
            Some(threads),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read(&path).unwrap()
    };
    let one = read("1");
    assert_eq!(one, read("3"));
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 2 + 20 * 41);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "run.cfg", "");
    let out = memvol(&["verify", "--config", s(&cfg)], Some("none"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn price_reports_and_writes_surface() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "run.cfg",
        "tau = 0.1\nnumerics.n_paths = 2000\n",
    );
    let mc_path = dir.path().join("mc.json");
    let out = memvol(
        &[
            "price",
            "--config",
            s(&cfg),
            "--engine",
            "mc",
            "--out",
            s(&mc_path),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mc: Value = serde_json::from_slice(&fs::read(&mc_path).unwrap()).unwrap();
    assert_eq!(mc["engine"], "mc");
    assert!(mc["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(mc["config_digest"].as_str().unwrap().len(), 64);

    let pde_path = dir.path().join("pde.json");
    let surface = dir.path().join("surface.csv");
    let out = memvol(
        &[
            "price",
            "--config",
            s(&cfg),
            "--engine",
            "pde",
            "--out",
            s(&pde_path),
            "--surface",
            s(&surface),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let pde: Value = serde_json::from_slice(&fs::read(&pde_path).unwrap()).unwrap();
    let (p, m, se) = (
        pde["price"].as_f64().unwrap(),
        mc["price"].as_f64().unwrap(),
        mc["std_error"].as_f64().unwrap(),
    );
    assert!((p - m).abs() < 4.0 * se, "pde {p} mc {m} se {se}");
    assert_eq!(pde["config_digest"], mc["config_digest"]);
    let text = fs::read_to_string(&surface).unwrap();
    assert_eq!(text.lines().nth(1), Some("t,S,V"));
    assert!(text.lines().count() > 100);
}

#[test]
fn surface_needs_the_pde_engine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "run.cfg", "");
    let out = memvol(
        &[
            "price",
            "--config",
            s(&cfg),
            "--engine",
            "mc",
            "--out",
            s(&dir.path().join("p.json")),
            "--surface",
            s(&dir.path().join("s.csv")),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn digest_tracks_referenced_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("b.csv");
    fs::write(&curve, "t,value\n0,0.2\n1,0.3\n").unwrap();
    let cfg = config(dir.path(), "run.cfg", "b = csv:b.csv\n");
    let digest = || {
        let out = memvol(&["moments", "--config", s(&cfg), "--t", "0.5"], None);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["config_digest"].as_str().unwrap().to_owned()
    };
    let first = digest();
    fs::write(&curve, "t,value\n0,0.2\n1,0.35\n").unwrap();
    assert_ne!(first, digest());
}
