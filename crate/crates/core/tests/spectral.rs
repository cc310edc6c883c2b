use oam_core::field::field_norm;
use oam_core::spectral::{spectral_transform, Direction};
use oam_core::{Complex64, Grid2D, LadderState, TransverseField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_field(seed: u64, n_y: usize, n_z: usize) -> TransverseField {
    let g = Grid2D::new(n_y, n_z, 50.0, 30.0).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let values = (0..n_y * n_z)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    TransverseField::from_values(g, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn transform_is_unitary_and_invertible(seed in any::<u64>(), ly in 1u32..7, lz in 1u32..7) {
        let f = random_field(seed, 1 << ly, 1 << lz);
        let k = spectral_transform(&f, Direction::Forward).unwrap();
        let n0: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        let n1: f64 = k.values().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((n1 / n0 - 1.0).abs() < 1e-12);
        let back = spectral_transform(&k, Direction::Inverse).unwrap();
        prop_assert!(back.relative_distance(&f) < 1e-12);
    }
}

#[test]
fn fixed_seed_round_trip() {
    let f = random_field(20240611, 128, 64);
    let k = spectral_transform(&f, Direction::Forward).unwrap();
    let back = spectral_transform(&k, Direction::Inverse).unwrap();
    assert!(back.relative_distance(&f) < 1e-12);
}

#[test]
fn populations_sum_to_total() {
    let g = Grid2D::new(16, 16, 10.0, 10.0).unwrap();
    let a = TransverseField::from_fn(g.clone(), |y, z| Complex64::new((-(y * y + z * z) / 4.0).exp(), 0.0));
    let mut b = a.clone();
    b.scale(0.5);
    let mut s = LadderState::new(g, -1..=1).unwrap();
    s.set_component(-1, a).unwrap();
    s.set_component(1, b).unwrap();
    let p = field_norm(&s);
    assert!(p.entries.iter().all(|e| e.1 >= 0.0));
    assert_eq!(p.get(0), 0.0);
    assert!((p.total - p.get(-1) - p.get(1)).abs() < 1e-15);
    assert!((p.get(1) / p.get(-1) - 0.25).abs() < 1e-12);
}
