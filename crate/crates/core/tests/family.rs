use glab_core::family::{convergence_experiment, family_solve, uniform_bound_experiment, FamilyKind, MetricFamily};
use glab_core::solver::SolveOptions;
use glab_core::{MetricSpec, PeriodicGrid, TrigTerm};

fn cosine_family(size: usize, samples: Vec<f64>) -> MetricFamily {
    let phi = vec![TrigTerm::real(1.0, vec![1, 0, 0, 0], 0.0)];
    MetricFamily::new(PeriodicGrid::new(2, size).unwrap(), samples, FamilyKind::ConformalScaling { phi }).unwrap()
}

#[test]
fn conformal_family_has_closed_form_sup() {
    let fam = cosine_family(8, vec![0.5, 0.25, 0.125]);
    let samples = family_solve(&fam, &SolveOptions::new(2));
    assert_eq!(samples.len(), 4);
    for s in &samples {
        let sup = s.outcome.as_ref().unwrap().solution.sup_rho;
        // ρ_t = e^{t(1 − cos 2πx₁)}
        assert!((sup - (2.0 * s.t).exp()).abs() < 1e-8, "t = {}: {sup}", s.t);
    }
    let uniform = uniform_bound_experiment(&samples).unwrap();
    assert!(uniform.passed);
    assert!(uniform.constants.log_c_g >= uniform.sup_sup_rho.ln());
    let conv = convergence_experiment(&samples, &uniform.constants).unwrap();
    assert!(conv.passed && conv.rho0_within_bound);
    assert_eq!((conv.rho0_min, conv.rho0_max), (1.0, 1.0));
}

#[test]
fn rate_tends_to_one_for_small_parameters() {
    let ts: Vec<f64> = (4..=8).map(|k| 2f64.powi(-k)).collect();
    let fam = cosine_family(8, ts);
    let samples = family_solve(&fam, &SolveOptions::new(2));
    let uniform = uniform_bound_experiment(&samples).unwrap();
    let alpha = convergence_experiment(&samples, &uniform.constants).unwrap().alpha.unwrap();
    assert!((alpha - 1.0).abs() < 0.1, "alpha = {alpha}");
}

#[test]
fn constant_family_is_exact() {
    let fam = MetricFamily::new(
        PeriodicGrid::new(2, 8).unwrap(),
        vec![0.5, 0.1],
        FamilyKind::Constant { spec: MetricSpec::flat() },
    )
    .unwrap();
    let samples = family_solve(&fam, &SolveOptions::new(2));
    let uniform = uniform_bound_experiment(&samples).unwrap();
    let conv = convergence_experiment(&samples, &uniform.constants).unwrap();
    assert!(conv.exact && conv.alpha.is_none() && conv.passed);
    assert_eq!(uniform.constants.c_g, 1.0);
}

#[test]
fn parameters_run_from_large_to_zero() {
    let fam = cosine_family(8, vec![0.125, 0.5, 0.25, 0.5]);
    assert_eq!(fam.parameters(), vec![0.5, 0.25, 0.125, 0.0]);
    assert!(MetricFamily::new(fam.grid, vec![0.0], fam.kind.clone()).is_err());
}
