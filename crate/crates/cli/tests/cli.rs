use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pathread(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathread"))
        .args(args)
        .current_dir(dir)
        .env_remove("PATHREAD_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Column name to values, skipping comment lines.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn beta_curve_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = pathread(&["beta-curve", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&tmp.path().join("o/beta-curve.csv"));
    assert_eq!(rows.len(), 181);
    for (a, b) in [("beta_plus", "beta_plus_closed_form"), ("beta_minus", "beta_minus_closed_form")] {
        for (x, y) in column(&h, &rows, a).iter().zip(column(&h, &rows, b)) {
            assert!((x - y).abs() < 1e-9, "{a}: {x} vs {y}");
        }
    }
}

#[test]
fn calibrate_theta_recovers_every_preset() {
    let tmp = TempDir::new().unwrap();
    let out = pathread(&["calibrate-theta", "--out", "o"], tmp.path());
    assert!(out.status.success());
    let (h, rows) = read_csv(&tmp.path().join("o/calibrate-theta.csv"));
    let est = column(&h, &rows, "theta_estimate");
    for (got, want) in est.iter().zip([-1.42, 0.11, 0.70, 1.82, 2.60]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    for (got, want) in column(&h, &rows, "ratio_plus_r_re").iter().zip([3.0; 5]) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn single_shot_json_reproduces_matched_overlaps() {
    let tmp = TempDir::new().unwrap();
    let out = pathread(&["single-shot", "--out", "o", "--format", "json"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&fs::read(tmp.path().join("o/single-shot.json")).unwrap()).unwrap();
    assert_eq!(doc["experiment"], "single-shot");
    assert_eq!(doc["config"]["seed"], 1729);
    let cols: Vec<&str> = doc["data"]["columns"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let k = cols.iter().position(|&c| c == "gaussian_overlap_error").unwrap();
    let rows = doc["data"]["rows"].as_array().unwrap();
    let overlap = |i: usize| rows[i][k].as_f64().unwrap();
    assert_eq!(rows[0][0], "T");
    assert_eq!(rows[1][0], "T+R");
    // replicate spread at 1e5 shots is about 0.05 and 0.02 percentage points
    assert!((overlap(0) - 0.048).abs() < 0.0025, "{}", overlap(0));
    assert!((overlap(1) - 0.010).abs() < 0.001, "{}", overlap(1));
    assert!(tmp.path().join("o/single-shot-histogram-t.json").exists());
    assert!(tmp.path().join("o/single-shot-histogram-plus.json").exists());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[single_shot]\nshots = 5000\nexport_shots = true\n[error_vs_time]\npoints = 4\nshots = 2000\n",
    );
    for exp in ["single-shot", "error-vs-time"] {
        let a = pathread(&[exp, "-c", &cfg, "-o", "a", "--threads", "1"], tmp.path());
        let b = pathread(&[exp, "-c", &cfg, "-o", "b", "--threads", "4"], tmp.path());
        assert!(a.status.success() && b.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for n in names {
        let x = fs::read(tmp.path().join("a").join(&n)).unwrap();
        let y = fs::read(tmp.path().join("b").join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn seed_changes_monte_carlo_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[single_shot]\nshots = 2000\n");
    pathread(&["single-shot", "-c", &cfg, "-o", "a", "--seed", "1"], tmp.path());
    pathread(&["single-shot", "-c", &cfg, "-o", "b", "--seed", "2"], tmp.path());
    let x = fs::read(tmp.path().join("a/single-shot.csv")).unwrap();
    let y = fs::read(tmp.path().join("b/single-shot.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn validation_failures_exit_2_and_write_nothing() {
    let tmp = TempDir::new().unwrap();
    for text in [
        "device = \"Q9\"\n",
        "[single_shot]\nshots = 0\n",
        "[single_shot]\np_thermal = -0.1\n",
        "not toml at all = = 1\n",
        "[single_shot]\nunknown = 3\n",
    ] {
        let cfg = write_config(tmp.path(), text);
        let out = pathread(&["single-shot", "-c", &cfg, "-o", "never"], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!tmp.path().join("never").exists(), "{text}");
    }
    let out = pathread(&["iq-sweep", "--device", "nope", "-o", "never"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pathread(&["iq-sweep", "-c", "missing.toml", "-o", "never"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("never").exists());
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    // eta D^2 T1 < 1: no interior optimum
    let cfg = write_config(tmp.path(), "[optimal_error]\nn_c = 1e-9\n");
    let out = pathread(&["optimal-error", "-c", &cfg, "-o", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = pathread(&["beta-curve", "-o", "blocker/sub"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn output_dir_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[output]\ndir = \"from-file\"\n");
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_pathread"));
        c.args(args).current_dir(tmp.path()).env_remove("PATHREAD_OUT");
        if let Some(e) = env {
            c.env("PATHREAD_OUT", e);
        }
        assert!(c.output().unwrap().status.success());
    };
    run(&["beta-curve"], None);
    assert!(tmp.path().join("pathread-out/beta-curve.csv").exists());
    run(&["beta-curve"], Some("from-env"));
    assert!(tmp.path().join("from-env/beta-curve.csv").exists());
    run(&["beta-curve", "-c", &cfg], Some("from-env-2"));
    assert!(tmp.path().join("from-file/beta-curve.csv").exists());
    assert!(!tmp.path().join("from-env-2").exists());
    run(&["beta-curve", "-c", &cfg, "-o", "from-flag"], Some("from-env-3"));
    assert!(tmp.path().join("from-flag/beta-curve.csv").exists());
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = TempDir::new().unwrap();
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        let p = p.to_string_lossy();
        for exp in ["iq-sweep", "distance-sweep", "optimal-error"] {
            let out = pathread(&[exp, "-c", &p, "-o", "o"], tmp.path());
            assert!(out.status.success(), "{p} {exp}: {}", String::from_utf8_lossy(&out.stderr));
        }
        n += 1;
    }
    assert!(n >= 4);
}
