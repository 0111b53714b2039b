//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but do not change the exit status unless
//! `GLAB_ACCEPTANCE_STRICT=1` is set.

use std::f64::consts::PI;
use std::time::Instant;

use glab_core::calculus::{d, dc, ddc, integrate_complex, top_piece};
use glab_core::constants::{assemble_cg, compute_b, compute_volume, estimate_poincare, metric_constants, verify_theorem_bound, ChainInputs};
use glab_core::cutoff::{
    build_cutoff, ddc_mass, decade_grid, extension_pairing_experiment, gradient_energy, CutoffFamily, OuterRadius,
    TestFunction,
};
use glab_core::family::{convergence_experiment, family_solve, uniform_bound_experiment, FamilyKind, MetricFamily};
use glab_core::field::random_form;
use glab_core::local_model::{fiber_volume, LocalModel};
use glab_core::metric::{build_metric, MetricSpec};
use glab_core::solver::{integral_identity_check, solve_gauduchon, IdentityPair, SolveOptions};
use glab_core::{CalculusContext, Form, PeriodicGrid, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn rel_max(a: &Form, scale: f64) -> f64 {
    a.max_abs() / scale
}

fn conformal_oracle() -> Outcome {
    let t = Instant::now();
    let grid = PeriodicGrid::new(2, 32).map_err(|e| e.to_string())?;
    let ctx = CalculusContext::new(grid);
    let omega = build_metric(grid, &MetricSpec::conformal_cos(2, 0.1)).map_err(|e| e.to_string())?;
    let sol = solve_gauduchon(&ctx, &omega, &SolveOptions::new(2)).map_err(|e| e.to_string())?;
    let err = grid
        .points()
        .zip(sol.rho.values())
        .map(|(x, r)| (r.re - (0.1 * (1.0 - (2.0 * PI * x[0]).cos())).exp()).abs())
        .fold(0.0, f64::max);
    let sup_err = (sol.sup_rho - 0.2f64.exp()).abs();
    let secs = t.elapsed().as_secs_f64();
    Ok((
        err <= 1e-6 && sup_err <= 1e-6 && secs <= 60.0,
        format!("max error {err:.2e}, |sup rho - e^0.2| {sup_err:.2e}, {secs:.1} s"),
    ))
}

fn flat_exactness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (n, size) in [(2, 16), (3, 8)] {
        let grid = PeriodicGrid::new(n, size).map_err(|e| e.to_string())?;
        let ctx = CalculusContext::new(grid);
        let omega = build_metric(grid, &MetricSpec::flat()).map_err(|e| e.to_string())?;
        let sol = solve_gauduchon(&ctx, &omega, &SolveOptions::new(n)).map_err(|e| e.to_string())?;
        let dev = sol.rho.values().iter().map(|r| (r.re - 1.0).abs()).fold(0.0, f64::max);
        let mc = metric_constants(&ctx, &omega, 7).map_err(|e| e.to_string())?;
        ok &= sol.residual_l2 <= 1e-12 && dev <= 1e-12 && mc.report.c_g == 1.0 && mc.report.b == 0.0;
        notes.push(format!(
            "n={n}: residual {:.1e}, max|rho-1| {dev:.1e}, B = {}, C_G = {}",
            sol.residual_l2, mc.report.b, mc.report.c_g
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn calculus_identities() -> Outcome {
    let t = Instant::now();
    let grid = PeriodicGrid::new(2, 8).map_err(|e| e.to_string())?;
    let ctx = CalculusContext::new(grid);
    let n = grid.dim();
    let max_wave = grid.band_limit() as i32;
    // Each derivative multiplies by at most π|k|, |k| ≤ √(2n)·max_wave.
    let lam = PI * ((2 * n) as f64).sqrt() * max_wave as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bidegrees = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2), (0, 0)];
    let (mut worst_dd, mut worst_ddc, mut worst_stokes) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let (p, q) = bidegrees[i % bidegrees.len()];
        let a: Form = random_form(grid, p, q, max_wave, 3, &mut rng).into();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let da = d(&ctx, &a).map_err(|e| e.to_string())?;
        worst_dd = worst_dd.max(rel_max(&d(&ctx, &da).map_err(|e| e.to_string())?, scale * lam * lam));
        let lhs = d(&ctx, &dc(&ctx, &a).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rhs = ddc(&ctx, &a).map_err(|e| e.to_string())?;
        worst_ddc = worst_ddc.max(rel_max(&lhs.sub(&rhs).map_err(|e| e.to_string())?, scale * lam * lam));
        // Stokes on a (2n−1)-form built from this sample.
        let (sp, sq) = if i % 2 == 0 { (n, n - 1) } else { (n - 1, n) };
        let b: Form = random_form(grid, sp, sq, max_wave, 3, &mut rng).into();
        let db = top_piece(&d(&ctx, &b).map_err(|e| e.to_string())?);
        let total = integrate_complex(&db).map_err(|e| e.to_string())?;
        worst_stokes = worst_stokes.max(total.norm() / (b.max_abs() * lam));
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        worst_dd <= 1e-12 && worst_ddc <= 1e-12 && worst_stokes <= 1e-12 && secs <= 10.0,
        format!("50 forms: d² {worst_dd:.1e}, dd^c − i∂∂̄ {worst_ddc:.1e}, Stokes {worst_stokes:.1e}, {secs:.1} s"),
    ))
}

fn integral_identity() -> Outcome {
    let grid = PeriodicGrid::new(2, 32).map_err(|e| e.to_string())?;
    let ctx = CalculusContext::new(grid);
    let omega = build_metric(grid, &MetricSpec::conformal_cos(2, 0.1)).map_err(|e| e.to_string())?;
    let sol = solve_gauduchon(&ctx, &omega, &SolveOptions::new(2)).map_err(|e| e.to_string())?;
    let pairs = [
        IdentityPair::NegativePower { p: 1.0 },
        IdentityPair::NegativePower { p: 2.0 },
        IdentityPair::Log { p: 1.0 },
        IdentityPair::Log { p: 2.0 },
    ];
    let mut worst = 0.0f64;
    for pair in pairs {
        let c = integral_identity_check(&ctx, &sol.rho, &omega, pair, 1e-9).map_err(|e| e.to_string())?;
        worst = worst.max(c.relative_gap);
    }
    Ok((worst <= 1e-6, format!("4 pairs, worst relative gap {worst:.2e}")))
}

fn a_priori_bound() -> Outcome {
    let grid = PeriodicGrid::new(2, 16).map_err(|e| e.to_string())?;
    let ctx = CalculusContext::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut loose: Vec<f64> = Vec::new();
    for k in 0..20 {
        let spec = MetricSpec::random_perturbation(2, 0.5, 2, &mut rng);
        let omega = build_metric(grid, &spec).map_err(|e| e.to_string())?;
        let sol = solve_gauduchon(&ctx, &omega, &SolveOptions::new(2)).map_err(|e| e.to_string())?;
        let mc = metric_constants(&ctx, &omega, k).map_err(|e| e.to_string())?;
        match verify_theorem_bound(&sol, &mc.report) {
            Ok(c) => loose.push(c.log_looseness),
            Err(_) => violations += 1,
        }
    }
    let lo = loose.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = loose.iter().copied().fold(0.0, f64::max);
    Ok((
        violations == 0,
        format!("20 metrics, {violations} violations, log(C_G / sup rho) in [{lo:.3e}, {hi:.3e}]"),
    ))
}

fn scaling_covariance() -> Outcome {
    let grid = PeriodicGrid::new(2, 16).map_err(|e| e.to_string())?;
    let ctx = CalculusContext::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = MetricSpec::random_perturbation(2, 0.5, 2, &mut rng);
    let omega = build_metric(grid, &spec).map_err(|e| e.to_string())?;
    let opts = SolveOptions::new(2);
    let base = solve_gauduchon(&ctx, &omega, &opts).map_err(|e| e.to_string())?;
    let b = compute_b(&ctx, &omega).map_err(|e| e.to_string())?;
    let v = compute_volume(&omega).map_err(|e| e.to_string())?;
    let cp = estimate_poincare(&ctx, &omega, 3).map_err(|e| e.to_string())?.c_p;
    let mut worst = 0.0f64;
    for c in [0.5, 2.0] {
        let scaled = omega.scaled(c).map_err(|e| e.to_string())?;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        let sol = solve_gauduchon(&ctx, &scaled, &opts).map_err(|e| e.to_string())?;
        let drho = sol
            .rho
            .values()
            .iter()
            .zip(base.rho.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        worst = worst
            .max(rel(compute_b(&ctx, &scaled).map_err(|e| e.to_string())?, b / c))
            .max(rel(compute_volume(&scaled).map_err(|e| e.to_string())?, c * c * v))
            .max(rel(estimate_poincare(&ctx, &scaled, 3).map_err(|e| e.to_string())?.c_p, c * cp))
            .max(drho);
    }
    Ok((worst <= 1e-8, format!("c in {{0.5, 2}}: worst deviation {worst:.2e}")))
}

fn family_convergence() -> Outcome {
    let grid = PeriodicGrid::new(2, 16).map_err(|e| e.to_string())?;
    let MetricSpec::Conformal { phi, .. } = MetricSpec::conformal_cos(2, 1.0) else {
        return Err("unexpected spec".into());
    };
    let family = MetricFamily::new(grid, vec![0.5, 0.25, 0.125], FamilyKind::ConformalScaling { phi })
        .map_err(|e| e.to_string())?;
    let samples = family_solve(&family, &SolveOptions::new(2));
    let uniform = uniform_bound_experiment(&samples).map_err(|e| e.to_string())?;
    let conv = convergence_experiment(&samples, &uniform.constants).map_err(|e| e.to_string())?;
    let alpha = conv.alpha.unwrap_or(f64::NAN);
    Ok((
        uniform.passed && conv.passed && conv.alpha.is_some_and(|a| a >= 0.9),
        format!(
            "sup_t sup rho {:.6}, log C_G {:.3e}, alpha {alpha:.3}, rho_0 in [{}, {}]",
            uniform.sup_sup_rho, uniform.constants.log_c_g, conv.rho0_min, conv.rho0_max
        ),
    ))
}

fn cutoff_decay() -> Outcome {
    let eps = decade_grid(5);
    let fam = CutoffFamily::flat(2, 0.5);
    let mut energy = Vec::new();
    let mut mass = Vec::new();
    let mut product = Vec::new();
    for &e in &eps {
        let chi = build_cutoff(&fam, e).map_err(|e| e.to_string())?;
        let en = gradient_energy(&fam, &chi).map_err(|e| e.to_string())?;
        energy.push(en);
        mass.push(ddc_mass(&fam, &chi).map_err(|e| e.to_string())?);
        product.push(en * chi.span());
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let band = product.iter().copied().fold(0.0, f64::max) / product.iter().copied().fold(f64::INFINITY, f64::min);
    let control = CutoffFamily::flat(1, 0.5);
    let first = gradient_energy(&control, &build_cutoff(&control, eps[0]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let last = gradient_energy(&control, &build_cutoff(&control, eps[4]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let ratio = last / first;
    Ok((
        decreasing(&energy) && decreasing(&mass) && band <= 2.0 && ratio >= 0.5,
        format!(
            "E decreasing {}, mass decreasing {}, E·D max/min {band:.2}, n=1 control E(1e-10)/E(1e-2) {ratio:.3}",
            decreasing(&energy),
            decreasing(&mass)
        ),
    ))
}

fn pairing_terms() -> Outcome {
    let fam = CutoffFamily {
        outer: OuterRadius::Shrinking { exponent: 0.5 },
        ..CutoffFamily::flat(2, 0.5)
    };
    let eps = decade_grid(5);
    let tests = [
        TestFunction::NormSquared,
        TestFunction::Gaussian { sigma: 0.3 },
        TestFunction::HarmonicBump { a: 0.8 },
    ];
    let mut ok = true;
    let mut worst_decay = 0.0f64;
    let mut worst_pair = 0.0f64;
    for f in tests {
        let rows = extension_pairing_experiment(&fam, &f, &eps).map_err(|e| e.to_string())?;
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        for (x0, x1) in [(a.ii, b.ii), (a.iii, b.iii), (a.v, b.v), (a.vi, b.vi)] {
            let decayed = x1.abs() <= 1e-4 * x0.abs();
            ok &= decayed;
            if x0 != 0.0 {
                worst_decay = worst_decay.max(x1.abs() / x0.abs());
            }
        }
        for r in &rows {
            let gap = (r.pairing - r.unpunctured).abs();
            let rel = if gap == 0.0 { 0.0 } else { gap / r.unpunctured.abs() };
            ok &= rel <= 1e-6;
            worst_pair = worst_pair.max(rel);
        }
    }
    Ok((
        ok,
        format!("3 test functions: worst final/initial term ratio {worst_decay:.2e}, worst pairing gap {worst_pair:.2e}"),
    ))
}

fn volume_continuity() -> Outcome {
    let t = Instant::now();
    let model = LocalModel::a1(2);
    let zero = C64::new(0.0, 0.0);
    let t1 = C64::new(1e-3, 0.0);
    let v0 = fiber_volume(&model, zero, 1_000_000, 1).map_err(|e| e.to_string())?;
    let v1 = fiber_volume(&model, t1, 1_000_000, 1).map_err(|e| e.to_string())?;
    let v1b = fiber_volume(&model, t1, 1_000_000, 2).map_err(|e| e.to_string())?;
    let rel = (v1.estimate - v0.estimate).abs() / v0.estimate;
    let z = (v1.estimate - v1b.estimate).abs() / (v1.std_error.powi(2) + v1b.std_error.powi(2)).sqrt();
    let secs = t.elapsed().as_secs_f64();
    Ok((
        rel <= 0.05 && z <= 4.0 && secs <= 300.0,
        format!(
            "Vol(X_0) {:.4} ± {:.4}, Vol(X_1e-3) {:.4} ± {:.4}, relative change {rel:.2e}, seed gap {z:.2} SE, {secs:.1} s",
            v0.estimate, v0.std_error, v1.estimate, v1.std_error
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("conformal oracle", conformal_oracle),
        ("flat exactness", flat_exactness),
        ("calculus identities", calculus_identities),
        ("integral identity", integral_identity),
        ("a priori bound", a_priori_bound),
        ("scaling covariance", scaling_covariance),
        ("family convergence", family_convergence),
        ("cutoff decay", cutoff_decay),
        ("extension pairing", pairing_terms),
        ("volume continuity", volume_continuity),
    ];
    // The chain must also degenerate exactly without any solve.
    let flat_chain = assemble_cg(ChainInputs { n: 2, b: 0.0, v: 8.0, c_s: 1.0, c_p: 0.1 }).map(|r| r.c_g);
    assert_eq!(flat_chain.ok(), Some(1.0));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("GLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
