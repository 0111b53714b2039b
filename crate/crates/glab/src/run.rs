use std::path::Path;

use glab_core::constants::{assemble_cg, check_bound, metric_constants, moser_spot_check};
use glab_core::cutoff::{
    build_cutoff, ddc_mass, decade_grid, extension_pairing_experiment, gradient_energy,
    uniqueness_identity_experiment, CutoffFamily,
};
use glab_core::family::{convergence_experiment, family_solve, uniform_bound_experiment, MetricFamily};
use glab_core::io::{sidecar_path, write_scalar};
use glab_core::local_model::{fiber_volume, quasi_isometry_constants};
use glab_core::solver::{
    gauduchon_defect, integral_identity_check, leibniz_expansion_check, scaling_invariance_check,
    solve_gauduchon, GauduchonSolution,
};
use glab_core::{build_metric, CalculusContext, HermitianMetricField, C64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{Check, Outputs};

/// Minimum certified spectral gap of a solve.
const GAP_THRESHOLD: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] glab_core::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("family sample t = {t}: {message}")]
    Sample { t: f64, code: i32, message: String },
}

fn core_code(e: &glab_core::Error) -> i32 {
    use glab_core::Error as E;
    match e {
        E::NoConvergence(_) => 3,
        E::BoundViolated { .. }
        | E::KernelDegenerate { .. }
        | E::NotPositive(_)
        | E::NotInKernel { .. }
        | E::BranchDominates { .. }
        | E::QuadratureFail(_) => 2,
        _ => 1,
    }
}

impl RunError {
    /// 1 for bad input, 2 for a violated invariant, 3 for solver non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) => core_code(e),
            RunError::Sample { code, .. } => *code,
            RunError::Config(_) | RunError::Io(_) => 1,
        }
    }
}

pub type Outcome = Result<(Value, Vec<Check>), RunError>;

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn metric(cfg: &ExperimentConfig) -> Result<(CalculusContext, HermitianMetricField), RunError> {
    let grid = cfg.grid()?;
    let omega = build_metric(grid, cfg.metric()?).map_err(|e| ConfigError::new("metric", e.to_string()))?;
    Ok((CalculusContext::new(grid), omega))
}

fn solution_checks(sol: &GauduchonSolution, tol: f64) -> Vec<Check> {
    let mut checks = vec![
        Check::at_most("residual", sol.residual_l2, tol),
        Check::flag("normalization", sol.inf_rho == 1.0, sol.inf_rho, "min rho = 1"),
        Check::at_least("sup_rho", sol.sup_rho, 1.0),
    ];
    if !sol.spectral_gap.is_nan() {
        checks.push(Check::at_least("spectral_gap", sol.spectral_gap, GAP_THRESHOLD));
    }
    checks
}

pub fn solve(cfg: &ExperimentConfig, out: &mut Outputs) -> Outcome {
    let (ctx, omega) = metric(cfg)?;
    let opts = cfg.solve_options(ctx.grid().dim());
    let sol = solve_gauduchon(&ctx, &omega, &opts)?;
    let mut checks = solution_checks(&sol, opts.tol);
    let defect = gauduchon_defect(&ctx, &sol.rho, &omega)?;
    checks.push(Check::at_most("gauduchon_defect", defect, 10.0 * opts.tol));
    let section = cfg.solve.clone().unwrap_or_default();
    let mut scaling = Vec::new();
    for &c in &section.scaling {
        let diff = scaling_invariance_check(&ctx, &omega, c, &opts)?;
        checks.push(Check::at_most(&format!("scaling_{c}"), diff, 10.0 * opts.tol));
        scaling.push(json!({ "c": c, "max_difference": diff }));
    }
    if cfg.solve.as_ref().is_none_or(|s| s.write_field) {
        write_scalar(&out.path("rho.glf"), &sol.rho)?;
        out.adopt("rho.glf");
        out.adopt(&sidecar_path(Path::new("rho.glf")).to_string_lossy());
    }
    let results = json!({
        "solution": to_value(&sol.summary()),
        "gauduchon_defect": defect,
        "metric_equivalence": to_value(&omega.equivalence()),
        "scaling": scaling,
    });
    Ok((results, checks))
}

pub fn constants(cfg: &ExperimentConfig, _out: &mut Outputs) -> Outcome {
    let section = cfg.constants.clone().unwrap_or_default();
    if let Some(inputs) = section.inputs {
        let chain = assemble_cg(inputs)?;
        let checks = vec![Check::at_least("log_c_g", chain.log_c_g, 0.0)];
        return Ok((json!({ "chain": to_value(&chain) }), checks));
    }
    let (ctx, omega) = metric(cfg)?;
    let mc = metric_constants(&ctx, &omega, cfg.seed)?;
    let mut checks = vec![Check::at_least("log_c_g", mc.report.log_c_g, 0.0)];
    let mut results = json!({
        "chain": to_value(&mc.report),
        "poincare": to_value(&mc.poincare),
        "sobolev": to_value(&mc.sobolev),
    });
    if section.check_bound {
        let opts = cfg.solve_options(ctx.grid().dim());
        let sol = solve_gauduchon(&ctx, &omega, &opts)?;
        checks.extend(solution_checks(&sol, opts.tol));
        let bound = check_bound(sol.sup_rho, &mc.report);
        checks.push(Check::flag(
            "sup_bound",
            bound.passed,
            bound.log_looseness,
            format!("1 <= sup rho = {} <= C_G = exp({})", bound.sup_rho, bound.log_c_g),
        ));
        let mut moser = Vec::new();
        for &p in &section.moser_p {
            let m = moser_spot_check(&ctx, &omega, &sol.rho, mc.report.b, p)?;
            checks.push(Check::flag(&format!("moser_p{p}"), m.passed, m.lhs - m.rhs, "lhs <= rhs"));
            moser.push(to_value(&m));
        }
        results["solution"] = to_value(&sol.summary());
        results["bound"] = to_value(&bound);
        results["moser"] = Value::Array(moser);
    }
    Ok((results, checks))
}

pub fn family(cfg: &ExperimentConfig, out: &mut Outputs) -> Outcome {
    let grid = cfg.grid()?;
    let section = cfg.family.as_ref().expect("validated");
    let fam = MetricFamily::new(grid, section.samples.clone(), section.path.clone())
        .map_err(|e| ConfigError::new("family", e.to_string()))?;
    let samples = family_solve(&fam, &cfg.solve_options(grid.dim()));
    let rows: Vec<_> = samples.iter().map(|s| s.row()).collect();
    out.csv("family.csv", &rows)?;
    if let Some((t, e)) = samples.iter().find_map(|s| s.outcome.as_ref().err().map(|e| (s.t, e))) {
        return Err(RunError::Sample {
            t,
            code: core_code(e),
            message: e.to_string(),
        });
    }
    let uniform = uniform_bound_experiment(&samples)?;
    let conv = convergence_experiment(&samples, &uniform.constants)?;
    let mut checks = vec![Check::flag(
        "uniform_bound",
        uniform.passed,
        uniform.sup_sup_rho,
        format!("sup_t sup rho <= C_G = exp({})", uniform.constants.log_c_g),
    )];
    checks.push(match conv.alpha {
        Some(a) => Check::at_least("rate_alpha", a, 0.9),
        None => Check::flag("rate_alpha", conv.exact, 0.0, "all errors below the exactness floor"),
    });
    checks.push(Check::flag(
        "rho0_within_bound",
        conv.rho0_within_bound,
        conv.rho0_max,
        "1 <= rho_0 <= C_G nodewise",
    ));
    let results = json!({
        "samples": to_value(&rows),
        "uniform": to_value(&uniform),
        "convergence": to_value(&conv),
    });
    Ok((results, checks))
}

#[derive(Serialize)]
struct EnergyRow {
    eps: f64,
    r0: f64,
    energy: f64,
    ddc_mass: f64,
    span: f64,
    energy_times_span: f64,
}

fn energy_table(fam: &CutoffFamily, eps: &[f64]) -> Result<Vec<EnergyRow>, RunError> {
    eps.iter()
        .map(|&e| {
            let chi = build_cutoff(fam, e).map_err(|e| ConfigError::new("cutoff", e.to_string()))?;
            let energy = gradient_energy(fam, &chi)?;
            Ok(EnergyRow {
                eps: e,
                r0: chi.r0,
                energy,
                ddc_mass: ddc_mass(fam, &chi)?,
                span: chi.span(),
                energy_times_span: energy * chi.span(),
            })
        })
        .collect()
}

fn file_stem(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    s.trim_end_matches('_').to_string()
}

pub fn cutoff(cfg: &ExperimentConfig, out: &mut Outputs) -> Outcome {
    let section = cfg.cutoff.as_ref().expect("validated");
    let eps = decade_grid(section.decades);
    let fam = cfg.cutoff_family(section.n, section.outer)?;
    let table = energy_table(&fam, &eps)?;
    out.csv("cutoff.csv", &table)?;
    let decreasing = |f: fn(&EnergyRow) -> f64| table.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let products: Vec<f64> = table.iter().map(|r| r.energy_times_span).collect();
    let band = products.iter().copied().fold(0.0, f64::max) / products.iter().copied().fold(f64::INFINITY, f64::min);
    let mut checks = vec![
        Check::flag("energy_decreasing", decreasing(|r| r.energy), table[table.len() - 1].energy, "strict"),
        Check::flag("mass_decreasing", decreasing(|r| r.ddc_mass), table[table.len() - 1].ddc_mass, "strict"),
        Check::at_most("energy_span_band", band, 2.0),
    ];
    let mut results = json!({ "energy": to_value(&table), "energy_span_band": band });

    if section.control_n > 0 {
        let control = cfg.cutoff_family(section.control_n, section.outer)?;
        let ctable = energy_table(&control, &eps)?;
        out.csv("cutoff_control.csv", &ctable)?;
        let ratio = ctable[ctable.len() - 1].energy / ctable[0].energy;
        checks.push(Check::at_least("control_no_decay", ratio, 0.5));
        results["control"] = to_value(&ctable);
    }

    let terms_fam = cfg.cutoff_family(section.n, section.terms_outer.unwrap_or(section.outer))?;
    let mut terms = serde_json::Map::new();
    for f in &section.test_functions {
        let rows = extension_pairing_experiment(&terms_fam, f, &eps)?;
        let stem = file_stem(&f.name());
        out.csv(&format!("terms_{stem}.csv"), &rows)?;
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        for (label, x0, x1) in [("ii", a.ii, b.ii), ("iii", a.iii, b.iii), ("v", a.v, b.v), ("vi", a.vi, b.vi)] {
            let ratio = if x0 == 0.0 { 0.0 } else { x1.abs() / x0.abs() };
            let mut c = Check::at_most(&format!("{stem}_{label}_decay"), ratio, 1e-4);
            c.passed = x1.abs() <= 1e-4 * x0.abs();
            checks.push(c);
        }
        let gap = rows
            .iter()
            .map(|r| {
                let d = (r.pairing - r.unpunctured).abs();
                if d == 0.0 { 0.0 } else { d / r.unpunctured.abs() }
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(&format!("{stem}_pairing"), gap, 1e-6));
        terms.insert(f.name(), to_value(&rows));
    }
    results["terms"] = Value::Object(terms);

    let mut uniq = Vec::new();
    for (i, rho) in section.factors.iter().enumerate() {
        let rows = uniqueness_identity_experiment(&fam, rho, &eps)?;
        out.csv(&format!("uniqueness_{i}.csv"), &rows)?;
        uniq.push(json!({ "factor": to_value(rho), "rows": to_value(&rows) }));
    }
    results["uniqueness"] = Value::Array(uniq);
    Ok((results, checks))
}

pub fn identity(cfg: &ExperimentConfig, _out: &mut Outputs) -> Outcome {
    let (ctx, omega) = metric(cfg)?;
    let section = cfg.identity.as_ref().expect("validated");
    let opts = cfg.solve_options(ctx.grid().dim());
    let sol = solve_gauduchon(&ctx, &omega, &opts)?;
    let mut checks = solution_checks(&sol, opts.tol);
    let leibniz = leibniz_expansion_check(&ctx, &sol.rho, &omega)?;
    checks.push(Check::at_most("leibniz_expansion", leibniz, 1e-10));
    let mut pairs = Vec::new();
    for pair in &section.pairs {
        let r = integral_identity_check(&ctx, &sol.rho, &omega, *pair, 10.0 * opts.tol)?;
        let name = match pair {
            glab_core::solver::IdentityPair::NegativePower { p } => format!("negative_power_p{p}"),
            glab_core::solver::IdentityPair::Log { p } => format!("log_p{p}"),
        };
        checks.push(Check::at_most(&name, r.relative_gap, section.tol));
        pairs.push(json!({ "pair": to_value(pair), "check": to_value(&r) }));
    }
    let results = json!({
        "solution": to_value(&sol.summary()),
        "leibniz_expansion": leibniz,
        "pairs": pairs,
    });
    Ok((results, checks))
}

pub fn volume(cfg: &ExperimentConfig, out: &mut Outputs) -> Outcome {
    let section = cfg.volume.as_ref().expect("validated");
    let model = cfg.local_model()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut quasi = Vec::new();
    for &[re, im] in &section.t {
        let t = C64::new(re, im);
        let v = fiber_volume(&model, t, section.samples, cfg.seed)?;
        for &s in &section.extra_seeds {
            let w = fiber_volume(&model, t, section.samples, s)?;
            let z = (v.estimate - w.estimate).abs() / (v.std_error.powi(2) + w.std_error.powi(2)).sqrt();
            checks.push(Check::at_most(&format!("seed_agreement_{re}_{im}_{s}"), z, 4.0));
            rows.push(w);
        }
        if let Some([r_in, r_out]) = section.annulus {
            let q = quasi_isometry_constants(&model, t, r_in, r_out, section.points, cfg.seed)?;
            quasi.push(json!({ "t": [re, im], "constant": q.constant, "equivalence": to_value(&q.equivalence) }));
        }
        rows.push(v);
    }
    let base = rows.iter().find(|r| r.t_re == 0.0 && r.t_im == 0.0 && r.seed == cfg.seed).copied();
    if let Some(b) = base {
        for r in rows.iter().filter(|r| r.seed == cfg.seed && (r.t_re != 0.0 || r.t_im != 0.0)) {
            let rel = (r.estimate - b.estimate).abs() / b.estimate;
            checks.push(Check::at_most(&format!("continuity_{}_{}", r.t_re, r.t_im), rel, 0.05));
        }
    }
    out.csv("volume.csv", &rows)?;
    let results = json!({
        "volumes": to_value(&rows),
        "exact_volume_t0": model.exact_volume(C64::new(0.0, 0.0)),
        "quasi_isometry": quasi,
    });
    Ok((results, checks))
}
