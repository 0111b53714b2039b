use glab_core::field::random_form;
use glab_core::io::{decode, encode, read_form, read_scalar, sidecar_path, write_form, write_scalar, Sidecar};
use glab_core::{FormField, PeriodicGrid, ScalarField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn same(a: &FormField, b: &FormField) -> bool {
    a.grid() == b.grid()
        && a.bidegree() == b.bidegree()
        && a.claims_real() == b.claims_real()
        && a.iter().zip(b.iter()).all(|(x, y)| x.0 == y.0 && x.1 == y.1 && x.2 == y.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn encode_decode_round_trip(n in 2usize..=3, p in 0usize..=3, q in 0usize..=3, seed in any::<u64>()) {
        prop_assume!(p <= n && q <= n);
        let grid = PeriodicGrid::new(n, 4).unwrap();
        let form = random_form(grid, p, q, 1, 2, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = decode(&encode(&form).unwrap()).unwrap();
        prop_assert!(same(&form, &back));
    }
}

#[test]
fn files_and_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(2, 4).unwrap();
    let form = random_form(grid, 1, 1, 1, 2, &mut ChaCha8Rng::seed_from_u64(7));
    let path = dir.path().join("w.glf");
    write_form(&path, &form).unwrap();
    assert!(same(&form, &read_form(&path).unwrap()));

    let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!((meta.n, meta.size, meta.p, meta.q), (2, 4, 1, 1));
    assert_eq!(meta.components.len(), 4);
    // 32-byte header, then per component 8 bytes of masks and 16 bytes per node.
    assert_eq!(meta.bytes, 32 + 4 * (8 + 16 * 256));
    assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, meta.bytes);
}

#[test]
fn scalar_round_trip_keeps_realness() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(3, 4).unwrap();
    let f = ScalarField::from_fn(grid, |x| 1.0 + x[0] * x[5]);
    let path = dir.path().join("rho.glf");
    write_scalar(&path, &f).unwrap();
    let g = read_scalar(&path).unwrap();
    assert!(g.is_real());
    assert_eq!(f.values(), g.values());
}

#[test]
fn mismatched_sidecar_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(2, 4).unwrap();
    let path = dir.path().join("f.glf");
    write_scalar(&path, &ScalarField::constant(grid, 2.0)).unwrap();
    let side = sidecar_path(&path);
    let text = std::fs::read_to_string(&side).unwrap().replace("\"N\": 4", "\"N\": 8");
    std::fs::write(&side, text).unwrap();
    assert!(read_scalar(&path).is_err());
}

#[test]
fn forms_are_not_scalars() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(2, 4).unwrap();
    let path = dir.path().join("g.glf");
    write_form(&path, &FormField::zero(grid, 1, 0)).unwrap();
    assert!(read_scalar(&path).is_err());
}
