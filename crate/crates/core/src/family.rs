//! One-parameter metric families on a fixed torus: uniform bounds and convergence as `t → 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{assemble_cg, check_bound, metric_constants, BoundCheck, ChainInputs, ConstantsReport};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::metric::{build_metric, MetricSpec, PerturbationEntry, TrigTerm};
use crate::solver::{solve_gauduchon, GauduchonSolution, SolveOptions};
use crate::spectral::CalculusContext;

/// How `ω_t` depends on `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `ω_t = ω` for every `t`.
    Constant { spec: MetricSpec },
    /// `ω_t = e^{tφ} ω_flat`.
    ConformalScaling { phi: Vec<TrigTerm> },
    /// `ω_t = I + t·h`.
    PerturbationPath { entries: Vec<PerturbationEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFamily {
    pub grid: PeriodicGrid,
    /// Parameters in `(0, 1/2]`; `t = 0` is always added.
    pub samples: Vec<f64>,
    pub kind: FamilyKind,
}

fn scale_terms(terms: &[TrigTerm], t: f64) -> Vec<TrigTerm> {
    terms
        .iter()
        .map(|term| TrigTerm {
            amp: term.amp * t,
            amp_im: term.amp_im * t,
            ..term.clone()
        })
        .collect()
}

impl MetricFamily {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>, kind: FamilyKind) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|t| !(**t > 0.0 && **t <= 0.5)) {
            return Err(Error::InvalidInputs(format!("family parameter {bad} outside (0, 1/2]")));
        }
        Ok(Self { grid, samples, kind })
    }

    /// Sample parameters in decreasing order, ending with `0`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut ts = self.samples.clone();
        ts.sort_by(|a, b| b.total_cmp(a));
        ts.dedup();
        ts.push(0.0);
        ts
    }

    pub fn spec_at(&self, t: f64) -> MetricSpec {
        match &self.kind {
            FamilyKind::Constant { spec } => spec.clone(),
            FamilyKind::ConformalScaling { phi } => MetricSpec::Conformal {
                phi: scale_terms(phi, t),
                scale: 1.0,
            },
            FamilyKind::PerturbationPath { entries } => MetricSpec::Perturbation {
                entries: entries
                    .iter()
                    .map(|e| PerturbationEntry {
                        row: e.row,
                        col: e.col,
                        terms: scale_terms(&e.terms, t),
                    })
                    .collect(),
                scale: 1.0,
            },
        }
    }
}

/// Solution and constants at one parameter.
#[derive(Debug, Clone)]
pub struct SampleData {
    pub solution: GauduchonSolution,
    pub b: f64,
    pub v: f64,
    pub c_s: f64,
    pub c_p: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug)]
pub struct FamilySample {
    pub t: f64,
    pub outcome: Result<SampleData>,
}

/// Serializable row of the family table.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub t: f64,
    pub sup_rho: f64,
    pub residual: f64,
    pub b_t: f64,
    pub v_t: f64,
    pub error: Option<String>,
}

impl FamilySample {
    pub fn row(&self) -> SampleRow {
        match &self.outcome {
            Ok(d) => SampleRow {
                t: self.t,
                sup_rho: d.solution.sup_rho,
                residual: d.solution.residual_l2,
                b_t: d.b,
                v_t: d.v,
                error: None,
            },
            Err(e) => SampleRow {
                t: self.t,
                sup_rho: f64::NAN,
                residual: f64::NAN,
                b_t: f64::NAN,
                v_t: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }
}

fn solve_sample(family: &MetricFamily, ctx: &CalculusContext, t: f64, opts: &SolveOptions) -> Result<SampleData> {
    let omega = build_metric(family.grid, &family.spec_at(t))?;
    let solution = solve_gauduchon(ctx, &omega, opts)?;
    let mc = metric_constants(ctx, &omega, opts.seed)?;
    let eq = omega.equivalence();
    Ok(SampleData {
        solution,
        b: mc.report.b,
        v: mc.report.v,
        c_s: mc.report.c_s,
        c_p: mc.report.c_p,
        lambda_min: eq.lambda_min,
        lambda_max: eq.lambda_max,
    })
}

/// Solves at every parameter; failures stay attached to their sample.
pub fn family_solve(family: &MetricFamily, opts: &SolveOptions) -> Vec<FamilySample> {
    let ctx = CalculusContext::new(family.grid);
    family
        .parameters()
        .into_par_iter()
        .map(|t| FamilySample {
            t,
            outcome: solve_sample(family, &ctx, t, opts),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundReport {
    pub b_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub c_v: f64,
    pub c_s_max: f64,
    pub c_p_max: f64,
    pub constants: ConstantsReport,
    pub sup_sup_rho: f64,
    pub checks: Vec<(f64, BoundCheck)>,
    pub passed: bool,
}

fn successful(samples: &[FamilySample]) -> Result<Vec<(f64, &SampleData)>> {
    samples
        .iter()
        .map(|s| match &s.outcome {
            Ok(d) => Ok((s.t, d)),
            Err(e) => Err(Error::InvalidInputs(format!("sample t = {} failed: {e}", s.t))),
        })
        .collect()
}

/// One `C_G` from the worst constants over the family, checked against every `sup ρ_t`.
pub fn uniform_bound_experiment(samples: &[FamilySample]) -> Result<UniformBoundReport> {
    let ok = successful(samples)?;
    let Some(first) = ok.first() else {
        return Err(Error::InvalidInputs("empty family".into()));
    };
    let n = first.1.solution.rho.grid().dim();
    let fold = |f: fn(&SampleData) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        ok.iter().map(|(_, d)| f(d)).fold(init, pick)
    };
    let b_max = fold(|d| d.b, 0.0, f64::max);
    let v_min = fold(|d| d.v, f64::INFINITY, f64::min);
    let v_max = fold(|d| d.v, 0.0, f64::max);
    let c_s_max = fold(|d| d.c_s, 0.0, f64::max);
    let c_p_max = fold(|d| d.c_p, 0.0, f64::max);
    let constants = assemble_cg(ChainInputs {
        n,
        b: b_max,
        v: v_max,
        c_s: c_s_max,
        c_p: c_p_max,
    })?;
    let checks: Vec<(f64, BoundCheck)> = ok
        .iter()
        .map(|(t, d)| (*t, check_bound(d.solution.sup_rho, &constants)))
        .collect();
    let sup_sup_rho = fold(|d| d.solution.sup_rho, 0.0, f64::max);
    let passed = checks.iter().all(|(_, c)| c.passed);
    if !passed {
        return Err(Error::BoundViolated {
            sup_rho: sup_sup_rho,
            log_c_g: constants.log_c_g,
        });
    }
    Ok(UniformBoundReport {
        b_max,
        v_min,
        v_max,
        c_v: v_max.max(1.0 / v_min),
        c_s_max,
        c_p_max,
        constants,
        sup_sup_rho,
        checks,
        passed,
    })
}

/// Errors below this count as zero in the rate fit.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// `(t, ‖ρ_t − ρ_0‖_∞)` for `t > 0`.
    pub errors: Vec<(f64, f64)>,
    /// `None` when every error is below [`EXACT_TOL`].
    pub alpha: Option<f64>,
    pub prefactor: Option<f64>,
    pub exact: bool,
    pub rho0_min: f64,
    pub rho0_max: f64,
    pub rho0_within_bound: bool,
    pub passed: bool,
}

/// Least-squares slope and intercept of `log e` against `log t`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t > 0.0 && *e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

/// Fits `‖ρ_t − ρ_0‖_∞ ≈ K t^α` and checks `1 ≤ ρ_0 ≤ C_G` nodewise.
pub fn convergence_experiment(samples: &[FamilySample], bound: &ConstantsReport) -> Result<ConvergenceReport> {
    let ok = successful(samples)?;
    let Some((_, base)) = ok.iter().find(|(t, _)| *t == 0.0) else {
        return Err(Error::InvalidInputs("family has no t = 0 sample".into()));
    };
    let rho0 = base.solution.rho.real_parts();
    let errors: Vec<(f64, f64)> = ok
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(t, d)| {
            let e = d
                .solution
                .rho
                .real_parts()
                .iter()
                .zip(&rho0)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            (*t, e)
        })
        .collect();
    let exact = errors.iter().all(|(_, e)| *e <= EXACT_TOL);
    let fit = if exact { None } else { loglog_fit(&errors) };
    let rho0_min = rho0.iter().copied().fold(f64::INFINITY, f64::min);
    let rho0_max = rho0.iter().copied().fold(0.0, f64::max);
    let rho0_within_bound = rho0_min >= 1.0 - 1e-12 && rho0_max.ln() <= bound.log_c_g;
    let rate_ok = exact || fit.is_some_and(|(a, _)| a >= 0.9);
    Ok(ConvergenceReport {
        errors,
        alpha: fit.map(|f| f.0),
        prefactor: fit.map(|f| f.1),
        exact,
        rho0_min,
        rho0_max,
        rho0_within_bound,
        passed: rate_ok && rho0_within_bound,
    })
}
