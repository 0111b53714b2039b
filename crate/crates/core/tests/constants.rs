use std::f64::consts::PI;

use glab_core::constants::{
    assemble_cg, check_bound, compute_b, compute_volume, estimate_poincare, metric_constants, moser_spot_check,
    ChainInputs,
};
use glab_core::metric::{build_metric, MetricSpec};
use glab_core::solver::{solve_gauduchon, SolveOptions};
use glab_core::{CalculusContext, PeriodicGrid};
use proptest::prelude::*;

#[test]
fn flat_constants() {
    let grid = PeriodicGrid::new(2, 8).unwrap();
    let ctx = CalculusContext::new(grid);
    let omega = build_metric(grid, &MetricSpec::flat()).unwrap();
    assert_eq!(compute_b(&ctx, &omega).unwrap(), 0.0);
    assert!((compute_volume(&omega).unwrap() - 8.0).abs() < 1e-12);
    // λ₁ of |df|²_ω against ω^n on the unit torus is π² (|∂f|² = ¼|∇f|², k = 2π).
    let p = estimate_poincare(&ctx, &omega, 0).unwrap();
    assert!((p.lambda1 - PI * PI).abs() < 1e-7);
}

#[test]
fn chain_regression() {
    // By hand: β = 2, C_1 = 1.25, δ = ½·2^{-2}·1.25^{-2} = 0.08, A = 100,
    // C_2 = 16, Moser prefactor 2·2·16 = 64, C_3 = 64², C_4 = 0.1.
    let r = assemble_cg(ChainInputs { n: 2, b: 0.5, v: 8.0, c_s: 1.0, c_p: 0.1 }).unwrap();
    assert!((r.c1 - 1.25).abs() < 1e-15);
    assert!((r.delta - 0.08).abs() < 1e-15);
    assert!((r.a_vol - 100.0).abs() < 1e-12);
    assert!((r.c2 - 16.0).abs() < 1e-15);
    assert!((r.c3 - 4096.0).abs() < 1e-9);
    let a = 8f64.powf(1.5) / 0.08 * 0.1f64.sqrt();
    let b = 64.0 / 0.08 * 100f64.ln();
    let c5 = (a / 2.0 + (b + a * a / 4.0).sqrt()).powi(2);
    assert!((r.c5 / c5 - 1.0).abs() < 1e-12);
    assert!((r.log_c_g / (4096.0 * c5) - 1.0).abs() < 1e-12);
    assert!(r.c_g_overflow);
}

#[test]
fn conformal_metric_satisfies_the_bound() {
    let grid = PeriodicGrid::new(2, 16).unwrap();
    let ctx = CalculusContext::new(grid);
    let omega = build_metric(grid, &MetricSpec::conformal_cos(2, 0.2)).unwrap();
    let sol = solve_gauduchon(&ctx, &omega, &SolveOptions::new(2)).unwrap();
    let mc = metric_constants(&ctx, &omega, 1).unwrap();
    assert!(check_bound(sol.sup_rho, &mc.report).passed);
    for p in [1.0, 2.0, 4.0] {
        assert!(moser_spot_check(&ctx, &omega, &sol.rho, mc.report.b, p).unwrap().passed);
    }
}

#[test]
fn scaling_covariance_of_constants() {
    let grid = PeriodicGrid::new(2, 8).unwrap();
    let ctx = CalculusContext::new(grid);
    let omega = build_metric(grid, &MetricSpec::conformal_cos(2, 0.3)).unwrap();
    let b = compute_b(&ctx, &omega).unwrap();
    let v = compute_volume(&omega).unwrap();
    let cp = estimate_poincare(&ctx, &omega, 0).unwrap().c_p;
    for c in [0.5, 2.0] {
        let s = omega.scaled(c).unwrap();
        assert!((compute_b(&ctx, &s).unwrap() * c / b - 1.0).abs() < 1e-10);
        assert!((compute_volume(&s).unwrap() / (c * c * v) - 1.0).abs() < 1e-12);
        assert!((estimate_poincare(&ctx, &s, 0).unwrap().c_p / (c * cp) - 1.0).abs() < 1e-8);
    }
}

proptest! {
    #[test]
    fn chain_is_monotone_in_b(b in 0.01f64..2.0, db in 0.0f64..1.0, v in 1.0f64..20.0) {
        let at = |b: f64| assemble_cg(ChainInputs { n: 2, b, v, c_s: 1.0, c_p: 0.2 }).unwrap().log_c_g;
        prop_assert!(at(b + db) >= at(b));
    }
}
