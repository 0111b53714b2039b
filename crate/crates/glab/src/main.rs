mod config;
mod diff;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{ExperimentConfig, ExperimentKind};
use diff::{report_diff, Tolerances};
use report::{Check, Outputs, RunReport};
use run::RunError;

/// Gauduchon factors, Moser-chain constants and degeneration experiments on complex tori.
#[derive(Parser)]
#[command(name = "glab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the Gauduchon factor of one metric.
    Solve(RunArgs),
    /// Measure B, V, C_S, C_P and assemble C_G.
    Constants(RunArgs),
    /// Solve along a metric family and check the uniform bound and convergence rate.
    Family(RunArgs),
    /// Energy, mass and extension-term tables of the log-log cutoffs.
    Cutoff(RunArgs),
    /// Check the integral identity for catalog pairs on a computed factor.
    IdentityCheck(RunArgs),
    /// Monte Carlo volumes of the local smoothing model.
    Volume(RunArgs),
    /// Compare two summary.json files field by field.
    ReportDiff(DiffArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run on one thread for bit-identical output.
    #[arg(long)]
    single_thread: bool,
    /// Output directory; defaults to the config `output` or `glab-out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    a: PathBuf,
    b: PathBuf,
    /// Absolute tolerance `key=value`; `key` is a dotted path or a leaf name.
    #[arg(long = "tol", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Tolerance for numbers without an entry.
    #[arg(long, default_value_t = 0.0)]
    default_tol: f64,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad tolerance `{v}`: {e}"))?;
    Ok((k.to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(a) => execute(ExperimentKind::Solve, a),
        Command::Constants(a) => execute(ExperimentKind::Constants, a),
        Command::Family(a) => execute(ExperimentKind::Family, a),
        Command::Cutoff(a) => execute(ExperimentKind::Cutoff, a),
        Command::IdentityCheck(a) => execute(ExperimentKind::IdentityCheck, a),
        Command::Volume(a) => execute(ExperimentKind::Volume, a),
        Command::ReportDiff(a) => diff_reports(a),
    };
    ExitCode::from(code as u8)
}

fn execute(kind: ExperimentKind, args: RunArgs) -> i32 {
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("glab: {e}");
            return 1;
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate(kind) {
        eprintln!("glab: {e}");
        return 1;
    }
    if args.single_thread {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(1).build_global() {
            eprintln!("glab: cannot configure thread pool: {e}");
            return 1;
        }
    }
    let dir = args
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("glab-out").join(kind.name()));
    let mut out = match Outputs::new(&dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("glab: {}: {e}", dir.display());
            return 1;
        }
    };
    let start = Instant::now();
    let outcome = match kind {
        ExperimentKind::Solve => run::solve(&cfg, &mut out),
        ExperimentKind::Constants => run::constants(&cfg, &mut out),
        ExperimentKind::Family => run::family(&cfg, &mut out),
        ExperimentKind::Cutoff => run::cutoff(&cfg, &mut out),
        ExperimentKind::IdentityCheck => run::identity(&cfg, &mut out),
        ExperimentKind::Volume => run::volume(&cfg, &mut out),
    };
    let (results, checks, code) = match outcome {
        Ok((results, checks)) => {
            let code = if checks.iter().all(|c| c.passed) { 0 } else { 2 };
            (results, checks, code)
        }
        Err(e @ (RunError::Config(_) | RunError::Io(_))) => {
            eprintln!("glab: {e}");
            return 1;
        }
        Err(e) => {
            eprintln!("glab: {e}");
            let check = Check::flag("completed", false, f64::NAN, e.to_string());
            (Value::Null, vec![check], e.exit_code())
        }
    };
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("glab: check `{}` failed: {}", c.name, c.detail);
    }
    let report = RunReport {
        experiment: kind.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        results,
        passed: code == 0,
        checks,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = out.json("summary.json", &report) {
        eprintln!("glab: writing summary: {e}");
        return 1;
    }
    for f in &out.files {
        println!("{}", f.display());
    }
    code
}

fn diff_reports(args: DiffArgs) -> i32 {
    let read = |p: &PathBuf| -> Result<Value, String> {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
    };
    let (a, b) = match (read(&args.a), read(&args.b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("glab: {e}");
            return 1;
        }
    };
    let tol = Tolerances {
        default: args.default_tol,
        by_key: args.tol.into_iter().collect(),
    };
    match report_diff(&a, &b, &tol) {
        Ok(d) => {
            let text = serde_json::to_string_pretty(&serde_json::json!({ "equal": d.is_empty(), "differences": d }))
                .expect("diff serializes");
            println!("{text}");
            if d.is_empty() {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("glab: {e}");
            1
        }
    }
}
