use glab_core::local_model::{exclusion_bound, fiber_volume, quasi_isometry_constants, LocalModel, Polynomial};
use glab_core::{Error, C64};

fn z(se: f64, a: &glab_core::local_model::FiberVolume, b: &glab_core::local_model::FiberVolume) -> f64 {
    (a.estimate - b.estimate).abs() / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt().max(se)
}

#[test]
fn linear_fiber_matches_closed_form() {
    let model = LocalModel {
        polynomial: Polynomial::Linear,
        ..LocalModel::a1(2)
    };
    let t = C64::new(0.3, 0.0);
    let v = fiber_volume(&model, t, 100_000, 3).unwrap();
    let exact = model.exact_volume(t);
    assert!((v.estimate - exact).abs() <= 3.0 * v.std_error, "{} ± {} vs {exact}", v.estimate, v.std_error);
}

#[test]
fn singular_fiber_matches_cone_volume() {
    let model = LocalModel::a1(2);
    let v = fiber_volume(&model, C64::new(0.0, 0.0), 200_000, 5).unwrap();
    let exact = 8.0 * std::f64::consts::PI.powi(2);
    assert!((model.exact_volume(C64::new(0.0, 0.0)) - exact).abs() < 1e-12);
    assert!((v.estimate - exact).abs() <= 3.0 * v.std_error);
}

#[test]
fn volume_depends_only_on_the_modulus() {
    let model = LocalModel::a1(2);
    let real = fiber_volume(&model, C64::new(1e-3, 0.0), 200_000, 8).unwrap();
    let rotated = fiber_volume(&model, C64::new(0.0, 1e-3), 200_000, 9).unwrap();
    assert!(z(0.0, &real, &rotated) <= 3.0);
}

#[test]
fn same_seed_same_estimate() {
    let model = LocalModel::a1(2);
    let t = C64::new(1e-3, 0.0);
    let a = fiber_volume(&model, t, 50_000, 4).unwrap();
    let b = fiber_volume(&model, t, 50_000, 4).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
}

#[test]
fn odp_reduces_to_a1_in_dimension_three() {
    let odp = LocalModel {
        polynomial: Polynomial::Odp,
        ..LocalModel::a1(3)
    };
    let a1 = LocalModel::a1(3);
    let t = C64::new(5e-4, 0.0);
    let x = fiber_volume(&odp, t, 100_000, 1).unwrap();
    let y = fiber_volume(&a1, 2.0 * t, 100_000, 1).unwrap();
    assert_eq!(x.estimate.to_bits(), y.estimate.to_bits());
    assert!(LocalModel { n: 2, ..odp }.validate().is_err());
}

#[test]
fn excluded_tube_is_negligible() {
    let model = LocalModel::a1(2);
    let bound = exclusion_bound(&model, C64::new(1e-3, 0.0)).unwrap();
    let estimate = model.exact_volume(C64::new(0.0, 0.0));
    assert!(bound < 0.01 * estimate, "{bound}");
}

#[test]
fn quasi_isometry_improves_as_t_shrinks() {
    let model = LocalModel::a1(2);
    let c = |t: f64, r_in: f64| {
        quasi_isometry_constants(&model, C64::new(t, 0.0), r_in, 0.8, 400, 2)
            .unwrap()
            .constant
    };
    let (big, small) = (c(1e-3, 0.3), c(1e-4, 0.3));
    assert!(small <= big && small >= 1.0, "{small} vs {big}");
    // The distortion is concentrated near the vertex.
    assert!(c(1e-3, 0.5) <= big);
    assert_eq!(c(0.0, 0.3), 1.0);
}

#[test]
fn annulus_must_avoid_the_vertex() {
    let model = LocalModel::a1(2);
    let t = C64::new(1e-3, 0.0);
    for (r_in, r_out) in [(0.0, 0.8), (0.8, 0.3), (0.3, 1.5)] {
        let e = quasi_isometry_constants(&model, t, r_in, r_out, 100, 1);
        assert!(matches!(e, Err(Error::RegionInvalid(_))), "({r_in}, {r_out})");
    }
}
