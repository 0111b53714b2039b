use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FLAT: &str = r#"
[grid]
n = 2
N = 8
[metric]
kind = "flat"
"#;

fn glab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glab")).args(args).output().expect("glab runs")
}

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, Option<Value>) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = glab(&args);
    let summary = std::fs::read_to_string(out.join("summary.json"))
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (o.status.code().unwrap(), summary)
}

#[test]
fn flat_solve_has_unit_factor() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary) = run("solve", FLAT, dir.path(), &[]);
    assert_eq!(code, 0);
    let s = summary.unwrap();
    assert_eq!(s["results"]["solution"]["sup_rho"], 1.0);
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let rho = glab_core::io::read_scalar(&dir.path().join("out/rho.glf")).unwrap();
    assert!(rho.values().iter().all(|v| v.re == 1.0));
}

#[test]
fn family_table_has_one_row_per_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[grid]
n = 2
N = 8
[family]
samples = [0.5, 0.25, 0.125]
[family.path]
kind = "conformal_scaling"
phi = [{ amp = 1.0, wave = [1, 0, 0, 0] }]
"#;
    let (code, _) = run("family", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("out/family.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let sup: f64 = rows[0][1].parse().unwrap();
    assert!((sup - 1f64.exp()).abs() < 1e-8);
}

#[test]
fn bad_grid_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, FLAT.replace("N = 8", "N = 12")).unwrap();
    let o = glab(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.N"));
}

#[test]
fn non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[grid]
n = 2
N = 8
[solver]
max_iter = 1
[metric]
kind = "conformal"
phi = [{ amp = 0.3, wave = [1, 0, 0, 0] }]
"#;
    let (code, summary) = run("solve", cfg, dir.path(), &[]);
    assert_eq!(code, 3);
    assert_eq!(summary.unwrap()["passed"], false);
}

#[test]
fn failed_invariant_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // The n = 2 energy band is known to exceed a factor of 2.
    let cfg = "[cutoff]\nn = 2\nr0 = 0.5\ncontrol_n = 0\n";
    let (code, summary) = run("cutoff", cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    let s = summary.unwrap();
    let band = s["checks"].as_array().unwrap().iter().find(|c| c["name"] == "energy_span_band").unwrap();
    assert_eq!(band["passed"], false);
}

#[test]
fn single_thread_runs_are_identical() {
    let cfg = r#"
seed = 4
[volume]
n = 2
t = [[0.0, 0.0], [1e-3, 0.0]]
samples = 20000
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, sa) = run("volume", cfg, a.path(), &["--single-thread"]);
    let (_, sb) = run("volume", cfg, b.path(), &["--single-thread"]);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_clock_s");
        v
    };
    assert_eq!(strip(sa.unwrap()), strip(sb.unwrap()));
    let diff = glab(&[
        "report-diff",
        a.path().join("out/summary.json").to_str().unwrap(),
        b.path().join("out/summary.json").to_str().unwrap(),
    ]);
    assert_eq!(diff.status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 1\n[volume]\nn = 2\nt = [[0.0, 0.0]]\nsamples = 10000\n";
    let (code, summary) = run("volume", cfg, dir.path(), &["--seed", "9"]);
    assert_eq!(code, 0);
    let s = summary.unwrap();
    assert_eq!(s["seed"], 9);
    assert_eq!(s["results"]["volumes"][0]["seed"], 9);
}

#[test]
fn report_diff_flags_drift() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, sup: f64| {
        let p = dir.path().join(name);
        let v = serde_json::json!({ "experiment": "solve", "results": { "solution": { "sup_rho": sup } } });
        std::fs::write(&p, v.to_string()).unwrap();
        p
    };
    let a = write("a.json", 1.2214);
    let b = write("b.json", 1.2214 + 1e-3);
    let c = write("c.json", 1.2214 + 1e-12);
    let code = |x: &Path, y: &Path, tol: &str| {
        glab(&["report-diff", x.to_str().unwrap(), y.to_str().unwrap(), "--tol", tol]).status.code()
    };
    assert_eq!(code(&a, &c, "sup_rho=1e-8"), Some(0));
    assert_eq!(code(&a, &b, "sup_rho=1e-6"), Some(2));
}

#[test]
fn direct_chain_inputs_degenerate_at_zero_b() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[constants]\ninputs = { n = 2, b = 0.0, v = 8.0, c_s = 1.0, c_p = 0.1 }\n";
    let (code, summary) = run("constants", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(summary.unwrap()["results"]["chain"]["c_g"], 1.0);
}
