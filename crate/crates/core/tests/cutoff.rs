use std::f64::consts::PI;

use glab_core::cutoff::{
    build_cutoff, ddc_mass, decade_grid, extension_pairing_experiment, gradient_energy,
    uniqueness_identity_experiment, CutoffFamily, OuterRadius, RadialFactor, RadialModel, TestFunction,
};
use glab_core::Error;
use proptest::prelude::*;

fn shrinking() -> CutoffFamily {
    CutoffFamily {
        outer: OuterRadius::Shrinking { exponent: 0.5 },
        ..CutoffFamily::flat(2, 0.5)
    }
}

#[test]
fn energy_and_mass_regression() {
    // Computed once with the adaptive quadrature at QUAD_TOL and frozen.
    let fam = CutoffFamily::flat(2, 0.5);
    let expect = [(1e-2, 0.4133338, 2.148082), (1e-6, 0.06410698, 0.6825743), (1e-10, 0.03096914, 0.4505414)];
    for (eps, e, m) in expect {
        let chi = build_cutoff(&fam, eps).unwrap();
        assert!((gradient_energy(&fam, &chi).unwrap() / e - 1.0).abs() < 1e-6);
        assert!((ddc_mass(&fam, &chi).unwrap() / m - 1.0).abs() < 1e-6);
    }
}

#[test]
fn energy_and_mass_decrease_on_the_decade_grid() {
    for n in [1, 2, 3] {
        let fam = CutoffFamily::flat(n, 0.5);
        let rows: Vec<(f64, f64)> = decade_grid(5)
            .iter()
            .map(|&e| {
                let chi = build_cutoff(&fam, e).unwrap();
                (gradient_energy(&fam, &chi).unwrap(), ddc_mass(&fam, &chi).unwrap())
            })
            .collect();
        assert!(rows.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1), "n = {n}: {rows:?}");
    }
}

#[test]
fn cone_doubles_the_flat_energy() {
    let flat = CutoffFamily::flat(2, 0.5);
    let cone = CutoffFamily { model: RadialModel::A1Cone, ..flat };
    let chi = build_cutoff(&flat, 1e-4).unwrap();
    let ratio = gradient_energy(&cone, &chi).unwrap() / gradient_energy(&flat, &chi).unwrap();
    assert!((ratio - 2.0).abs() < 1e-12);
}

#[test]
fn pairing_matches_unpunctured_integral() {
    let eps = decade_grid(5);
    let norm = extension_pairing_experiment(&shrinking(), &TestFunction::NormSquared, &eps).unwrap();
    for r in &norm {
        assert!((r.unpunctured - 4.0 * PI * PI).abs() < 1e-8);
        assert!((r.pairing - r.unpunctured).abs() < 1e-8);
        assert!(r.stokes_defect < 1e-8);
    }
    let gauss = extension_pairing_experiment(&shrinking(), &TestFunction::Gaussian { sigma: 0.3 }, &eps).unwrap();
    for r in &gauss {
        assert!((r.unpunctured / -6.5557590613e-3 - 1.0).abs() < 1e-8);
        assert!((r.pairing - r.unpunctured).abs() < 1e-6 * r.unpunctured.abs());
    }
}

#[test]
fn vanishing_terms_decay() {
    let eps = decade_grid(5);
    for f in [TestFunction::NormSquared, TestFunction::Gaussian { sigma: 0.3 }] {
        let rows = extension_pairing_experiment(&shrinking(), &f, &eps).unwrap();
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        for (x0, x1) in [(a.ii, b.ii), (a.iii, b.iii), (a.v, b.v), (a.vi, b.vi)] {
            assert!(x1.abs() <= 1e-4 * x0.abs(), "{f:?}: {x0:e} -> {x1:e}");
        }
    }
}

#[test]
fn harmonic_bump_has_no_mean_terms() {
    let rows = extension_pairing_experiment(&shrinking(), &TestFunction::HarmonicBump { a: 0.8 }, &decade_grid(3)).unwrap();
    for r in rows {
        assert_eq!((r.ii, r.iii, r.iv, r.unpunctured), (0.0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn uniqueness_identity_separates_factors() {
    let fam = CutoffFamily::flat(2, 0.5);
    let eps = decade_grid(5);
    let constant = uniqueness_identity_experiment(&fam, &RadialFactor::Constant { c: 2.0 }, &eps).unwrap();
    assert!(constant.iter().all(|r| r.gap < 1e-12));
    let control = uniqueness_identity_experiment(&fam, &RadialFactor::OnePlusNormSquared, &eps).unwrap();
    assert!(control.iter().all(|r| r.gap > 1.0));
}

#[test]
fn bad_radii_are_rejected() {
    let fam = CutoffFamily::flat(2, 0.5);
    for eps in [0.0, 0.5, 0.7, -1e-3] {
        assert!(matches!(build_cutoff(&fam, eps), Err(Error::BadRadii(_))));
    }
    let wide = CutoffFamily { radius: 0.4, ..fam };
    assert!(matches!(build_cutoff(&wide, 1e-3), Err(Error::BadRadii(_))));
    let steep = CutoffFamily { outer: OuterRadius::Shrinking { exponent: 1.0 }, ..fam };
    assert!(matches!(build_cutoff(&steep, 1e-3), Err(Error::BadRadii(_))));
}

proptest! {
    #[test]
    fn cutoff_is_monotone_between_zero_and_one(log_eps in -12.0f64..-1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let chi = build_cutoff(&CutoffFamily::flat(2, 0.5), 10f64.powf(log_eps)).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (u, v) = (chi.value(lo), chi.value(hi));
        prop_assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
        prop_assert!(u <= v);
        prop_assert_eq!(chi.value(chi.eps * 0.999), 0.0);
        prop_assert_eq!(chi.value(0.5 * 1.001), 1.0);
    }
}
