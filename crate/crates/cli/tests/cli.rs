//! End-to-end checks of the binary: subcommand output, exit codes, config
//! diagnostics and report files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn ulamlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ulamlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ulamlab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const RN_CONFIG: &str = r#"[experiment]
name = "rn-up-cli"
theorems = ["RN-D-up"]

[setting]
kind = "random"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 0.5

[control]
family = "power-sum"
r = "1/2"

[grids]
seeds = ["1","2","3","-1","-2","-3"]
levels = 1
depth = 130
n-max = 120
tolerance = 1e-11
"#;

#[test]
fn padic_expressions() {
    let out = ulamlab(&["padic", "norm(12, p=2)"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "1/4");

    let out = ulamlab(&["padic", "3 * inv(3) - 1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "Qp(2; 0; )");

    let out = ulamlab(&["padic", "norm(12)", "--prime", "3"]);
    assert_eq!(stdout(&out).trim(), "1/3");

    let out = ulamlab(&["padic", "norm(12, q=5)"]);
    assert!(!out.status.success(), "unknown option must be rejected");
}

#[test]
fn run_single_config_and_exit_codes() {
    let dir = fresh_dir("run");
    let cfg = dir.join("rn.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&cfg, RN_CONFIG).unwrap();

    let out = ulamlab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("RN-D-up: pass"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], serde_json::Value::Bool(true));
    assert_eq!(report["header"]["seed"], serde_json::json!(7));
    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("point_id,setting,theorem_id,error,bound,margin,converged,iterations"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_name_the_field_and_exit_2() {
    let dir = fresh_dir("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, RN_CONFIG.replace("kind = \"random\"", "kind = \"classical\"")).unwrap();
    let out = ulamlab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theorems"), "diagnostic names the field: {err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn certify_theorem_filter() {
    let dir = fresh_dir("certify");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cl.toml");
    std::fs::write(
        &cfg,
        r#"[experiment]
name = "cl-additive"
theorems = ["CL-RASSIAS"]

[setting]
kind = "classical"

[function]
perturbation = "none"

[control]
family = "power-sum"
r = "1/2"

[grids]
seeds = ["1","2","3","-1","-2","-3"]
levels = 1
depth = 130
n-max = 120
"#,
    )
    .unwrap();
    let out = ulamlab(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--theorem",
        "CL-RASSIAS",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("CL-RASSIAS: pass"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_emits_one_row_per_step() {
    let dir = fresh_dir("sweep");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("rn.toml");
    std::fs::write(&cfg, RN_CONFIG).unwrap();
    let out = ulamlab(&[
        "sweep",
        "r",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "0.1",
        "--to",
        "0.9",
        "--steps",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep-r.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "param,value,theorem_id,min_margin,status");
    assert_eq!(rows.len(), 10, "header plus nine rows");
    for row in &rows[1..] {
        assert!(row.ends_with(",pass"), "sweep row failed: {row}");
        let margin: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(margin >= 0.0);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn extract_reports_convergence() {
    let dir = fresh_dir("extract");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("rn.toml");
    std::fs::write(&cfg, RN_CONFIG).unwrap();
    let out = ulamlab(&[
        "extract",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("converged"));
    let _ = std::fs::remove_dir_all(&dir);
}
