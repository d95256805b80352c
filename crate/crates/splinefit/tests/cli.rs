//! Black-box tests of the command-line binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_splinefit");
const ENSO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/enso.csv");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn binary")
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn fit_writes_model_and_curve() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &[
            "fit",
            "--family",
            "pspline",
            "--degree",
            "2",
            "--knots",
            "80",
            "--diff-order",
            "1",
            "--select",
            "gcv",
            ENSO,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model: serde_json::Value = serde_json::from_str(&read(dir.path(), "model.json")).unwrap();
    let edf = model["edf"].as_f64().unwrap();
    assert!(edf.is_finite() && edf <= 83.0);
    let curve = read(dir.path(), "curve.csv");
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "z,fitted");
    assert_eq!(lines.len(), 501);
}

#[test]
fn fit_is_deterministic() {
    let a = tmp();
    let b = tmp();
    for dir in [a.path(), b.path()] {
        let out = run_in(dir, &["fit", "--family", "bspline", "--knots", "20", ENSO]);
        assert!(out.status.success());
    }
    assert_eq!(read(a.path(), "model.json"), read(b.path(), "model.json"));
    assert_eq!(read(a.path(), "curve.csv"), read(b.path(), "curve.csv"));
}

#[test]
fn fit_one_row_exits_2() {
    let dir = tmp();
    let data = dir.path().join("tiny.csv");
    fs::write(&data, "x,y\n1.0,2.0\n").unwrap();
    let out = run_in(dir.path(), &["fit", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("degenerate") || err.contains("at least 2"),
        "stderr: {err}"
    );
}

#[test]
fn unknown_flag_exits_2() {
    let dir = tmp();
    let out = run_in(dir.path(), &["fit", "--no-such-flag", ENSO]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_preset_row_counts_and_seed_sensitivity() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &["grid", "--preset", "pspline-table4", "--seed", "1", "--out", "s1.csv", ENSO],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s1 = read(dir.path(), "s1.csv");
    assert_eq!(s1.lines().count(), 43); // header + 42 rows
    let out = run_in(
        dir.path(),
        &["grid", "--preset", "pspline-table4", "--seed", "2", "--out", "s2.csv", ENSO],
    );
    assert!(out.status.success());
    assert_ne!(s1, read(dir.path(), "s2.csv"));
}

#[test]
fn grid_empty_degree_list_exits_2() {
    let dir = tmp();
    let out = run_in(dir.path(), &["grid", "--knots", "5", ENSO]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_best_flag_prints_winner() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &[
            "grid", "--family", "pspline", "--degrees", "2", "--knots", "30,50",
            "--diff-orders", "1", "--best", ENSO,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("best: family=pspline"), "stdout: {stdout}");
}

#[test]
fn band_bonferroni_wider_than_pointwise() {
    let dir = tmp();
    for (kind, file) in [("pointwise", "pw.csv"), ("bonferroni", "bf.csv")] {
        let out = run_in(
            dir.path(),
            &[
                "band", "--kind", kind, "--alpha", "0.05", "--points", "50",
                "--knots", "20", "--out", file, ENSO,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let parse = |name: &str| -> Vec<f64> {
        read(dir.path(), name)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect()
    };
    let pw = parse("pw.csv");
    let bf = parse("bf.csv");
    assert_eq!(pw.len(), 50);
    for (a, b) in pw.iter().zip(&bf) {
        assert!(b >= a);
    }
}

#[test]
fn simulated_band_is_seed_reproducible() {
    let dir = tmp();
    for file in ["a.csv", "b.csv"] {
        let out = run_in(
            dir.path(),
            &[
                "band", "--kind", "simulated", "--draws", "10000", "--seed", "7",
                "--knots", "20", "--out", file, ENSO,
            ],
        );
        assert!(out.status.success());
    }
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));
}

#[test]
fn band_out_of_domain_point_exits_1() {
    let dir = tmp();
    let pts = dir.path().join("pts.csv");
    fs::write(&pts, "z\n10\n50\n9000\n").unwrap();
    let out = run_in(
        dir.path(),
        &["band", "--points-from", pts.to_str().unwrap(), "--knots", "20", ENSO],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("outside") && err.contains("point 2"), "stderr: {err}");
}

#[test]
fn diagnose_emits_residual_table() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &["diagnose", "--knots", "80", "--diff-order", "1", "--window", "7", ENSO],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(dir.path(), "residuals.csv");
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "fitted,residual,smoothed");
    assert_eq!(lines.len(), 169); // header + one row per observation
}

#[test]
fn diagnose_window_one_is_passthrough() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &["diagnose", "--knots", "20", "--window", "1", ENSO],
    );
    assert!(out.status.success());
    for line in read(dir.path(), "residuals.csv").lines().skip(1) {
        let mut f = line.split(',');
        let residual: f64 = f.nth(1).unwrap().parse().unwrap();
        let smoothed: f64 = f.next().unwrap().parse().unwrap();
        assert_eq!(residual, smoothed);
    }
}

/// Every documented flag must parse and every parsed flag must be
/// documented; checked by exercising `--help` per subcommand.
#[test]
fn help_lists_every_flag() {
    let dir = tmp();
    let expected: &[(&str, &[&str])] = &[
        (
            "fit",
            &[
                "--x-col", "--y-col", "--delimiter", "--family", "--degree", "--knots",
                "--diff-order", "--lambda", "--select", "--rescale", "--seed",
                "--out-model", "--out-curve", "--curve-points",
            ],
        ),
        (
            "grid",
            &[
                "--preset", "--family", "--degrees", "--knots", "--diff-orders",
                "--fraction", "--seed", "--split-mode", "--select", "--format",
                "--out", "--best",
            ],
        ),
        (
            "band",
            &[
                "--kind", "--alpha", "--points", "--points-from", "--draws", "--seed",
                "--out",
            ],
        ),
        ("diagnose", &["--window", "--seed", "--out"]),
    ];
    for (sub, flags) in expected {
        let out = run_in(dir.path(), &[sub, "--help"]);
        assert!(out.status.success());
        let help = String::from_utf8_lossy(&out.stdout).to_string();
        for flag in *flags {
            assert!(help.contains(flag), "{sub} --help missing {flag}");
        }
    }
}

#[test]
fn seed_env_var_is_honored() {
    let dir = tmp();
    let run_seeded = |env: Option<&str>, flag: Option<&str>, file: &str| {
        let mut cmd = Command::new(BIN);
        cmd.current_dir(dir.path());
        cmd.args(["band", "--kind", "simulated", "--draws", "5000", "--knots", "20"]);
        if let Some(s) = env {
            cmd.env("SPLINEFIT_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        cmd.args(["--out", file, ENSO]);
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run_seeded(Some("123"), None, "env.csv");
    run_seeded(None, Some("123"), "flag.csv");
    run_seeded(Some("999"), Some("123"), "flag_wins.csv");
    let env = read(dir.path(), "env.csv");
    assert_eq!(env, read(dir.path(), "flag.csv"));
    assert_eq!(env, read(dir.path(), "flag_wins.csv"));
}

#[test]
fn outputs_are_the_only_side_effect() {
    let dir = tmp();
    let out = run_in(
        dir.path(),
        &["fit", "--knots", "10", "--out-model", "m.json", "--out-curve", "c.csv", ENSO],
    );
    assert!(out.status.success());
    let mut names: Vec<PathBuf> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    let names: Vec<String> = names
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().to_string())
        .collect();
    assert_eq!(names, vec!["c.csv", "m.json"]);
}
