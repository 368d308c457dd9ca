use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
target = "psi_finite"
t_grid = [10.0, 20.0]
n_paths = 20000
seed = 11
method = "auto"
tolerance = 0.5

[x_rule]
kind = "ray"
gamma = 2.0
points = 4
x_max_factor = 3.0

[model]
premium_rate = 1.2
case = "case1"
claims = { family = "pareto", alpha = 2.5, scale = 1.5 }
inter_arrivals = { family = "exponential", mean = 1.0 }
claim_plan = { mode = "gaussian_na", rho = -0.2, block = 5 }
"#;

fn ruinsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruinsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&ruinsim(&["verify", "thm9.9"])), 64);
    assert_eq!(code(&ruinsim(&["frobnicate"])), 64);
    assert_eq!(code(&ruinsim(&["simulate"])), 64);
    assert_eq!(code(&ruinsim(&["simulate", "--config", "/no/such/file.toml"])), 64);
    assert_eq!(code(&ruinsim(&["verify", "thm1.3", "--threads", "many"])), 64);
}

#[test]
fn help_exits_0() {
    let o = ruinsim(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verify"));
}

#[test]
fn empty_t_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("t_grid = [10.0, 20.0]", "t_grid = []"));
    let o = ruinsim(&["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_grid"));
}

#[test]
fn failing_gate_exits_2_and_names_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("gamma = 2.0", "gamma = 0.5"));
    let out = dir.path().join("out");
    let o = ruinsim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma = 0.5"));
    assert!(!out.join("ratios.csv").exists());
}

#[test]
fn thread_count_and_reruns_leave_outputs_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let mut runs = Vec::new();
    for (i, threads) in ["1", "8", "8"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = ruinsim(&["simulate", "--config", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        runs.push((fs::read(out.join("ratios.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
    let csv = String::from_utf8(runs[0].0.clone()).unwrap();
    assert!(csv.starts_with("t,x,empirical,stderr,ci_lo,ci_hi,asymptote,ratio\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn seed_override_changes_the_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let a = ruinsim(&["simulate", "--config", &cfg]);
    let b = ruinsim(&["simulate", "--config", &cfg, "--seed", "12"]);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn json_format_writes_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    let o = ruinsim(&["simulate", "--config", &cfg, "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["summary"]["horizons"].as_array().unwrap().len(), 2);
    assert!(out.join("timing.json").exists());
}

#[test]
fn asymptotic_needs_no_simulation() {
    let o = ruinsim(&["asymptotic", "thm1.3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,x,asymptote,kernel_argument\n"));
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn tail_diag_reports_the_power_tail() {
    let o = ruinsim(&["tail-diag", "--law", r#"{ family = "pareto", alpha = 2.0, scale = 1.0 }"#]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["g_star_2"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert_eq!(code(&ruinsim(&["tail-diag"])), 64);
}

#[test]
fn verify_runs_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ruinsim(&["verify", "prop1.3", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["verdict"], "pass");
}
