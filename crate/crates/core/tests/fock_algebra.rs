use std::sync::Arc;

use meanfield_core::fock::testing::{random_mode, random_state_below};
use meanfield_core::fock::*;
use meanfield_core::linalg::{eigvalsh, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(m: usize, n: usize) -> Arc<FockBasis> {
    Arc::new(FockBasis::new(m, n).unwrap())
}

fn scaled_mode(modes: usize, norm: f64, rng: &mut ChaCha8Rng) -> ModeFunction {
    random_mode(modes, rng).normalized().scaled(C64::new(norm, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ccr_on_random_low_states(seed in any::<u64>()) {
        let b = basis(3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_mode(3, &mut rng);
        let g = random_mode(3, &mut rng);
        let psi = random_state_below(&b, 4, &mut rng);
        let ag = apply_annihilate(&f, &apply_create(&g, &psi).unwrap()).unwrap();
        let ga = apply_create(&g, &apply_annihilate(&f, &psi).unwrap()).unwrap();
        let res = ag.sub(&ga).unwrap().sub(&psi.scaled(f.inner(&g))).unwrap();
        prop_assert!(res.norm() < 1e-12, "residual {}", res.norm());
    }

    #[test]
    fn creation_is_adjoint_of_annihilation(seed in any::<u64>()) {
        let b = basis(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_mode(3, &mut rng);
        let s1 = random_state_below(&b, 5, &mut rng);
        let s2 = random_state_below(&b, 5, &mut rng);
        let lhs = s2.inner(&apply_create(&f, &s1).unwrap()).unwrap();
        let rhs = apply_annihilate(&f, &s2).unwrap().inner(&s1).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn field_is_hermitian_below_top(seed in any::<u64>()) {
        let b = basis(2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_mode(2, &mut rng);
        let s1 = random_state_below(&b, 5, &mut rng);
        let s2 = random_state_below(&b, 5, &mut rng);
        let lhs = s2.inner(&field_phi(&f, &s1).unwrap()).unwrap();
        let rhs = s1.inner(&field_phi(&f, &s2).unwrap()).unwrap().conj();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn standard_field_bounds(seed in any::<u64>()) {
        let b = basis(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_mode(3, &mut rng);
        let psi = random_state_below(&b, 5, &mut rng);
        let n_half = psi.weighted_by_sector(|n| (n as f64).sqrt()).norm();
        let n1_half = psi.number_power(0.5).norm();
        let slack = 1e-12;
        prop_assert!(apply_annihilate(&f, &psi).unwrap().norm() <= f.norm() * n_half + slack);
        prop_assert!(apply_create(&f, &psi).unwrap().norm() <= f.norm() * n1_half + slack);
        prop_assert!(field_phi(&f, &psi).unwrap().norm() <= 2.0 * f.norm() * n1_half + slack);
    }

    #[test]
    fn second_quantization_bound(seed in any::<u64>()) {
        let b = basis(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(3, 3, |_, _| C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0)));
        let j = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
        let op_norm = eigvalsh(&j).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let psi = random_state_below(&b, 4, &mut rng);
        let n_psi = psi.weighted_by_sector(|n| n as f64).norm();
        let out = second_quantize(&j).unwrap().apply(&psi).unwrap();
        prop_assert!(out.norm() <= op_norm * n_psi + 1e-12);
    }

    #[test]
    fn sector_masses_partition_norm(seed in any::<u64>()) {
        let b = basis(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state_below(&b, 5, &mut rng);
        let total: f64 = (0..=5).map(|n| project_sector(n, &psi).unwrap().norm_sqr()).sum();
        prop_assert!((total - psi.norm_sqr()).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weyl_composition(seed in any::<u64>()) {
        let b = basis(2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, 0.5, &mut rng);
        let g = scaled_mode(2, 0.5, &mut rng);
        let psi = random_state_below(&b, 2, &mut rng);
        let lhs = weyl_apply(&f, &weyl_apply(&g, &psi).unwrap()).unwrap();
        let phase = C64::new(0.0, -f.inner(&g).im).exp();
        let rhs = weyl_apply(&f.add(&g), &psi).unwrap().scaled(phase);
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn weyl_unitarity(seed in any::<u64>()) {
        let b = basis(2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, 0.7, &mut rng);
        let psi = random_state_below(&b, 2, &mut rng);
        let out = weyl_apply(&f, &psi).unwrap();
        prop_assert!((out.norm_sqr() + out.leaked - 1.0).abs() < 1e-12);
        prop_assert!(out.leaked < 1e-10);
        let back = weyl_apply(&f.scaled(C64::new(-1.0, 0.0)), &out).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-10);
    }

    #[test]
    fn weyl_shift(seed in any::<u64>()) {
        let b = basis(2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, 0.6, &mut rng);
        let g = random_mode(2, &mut rng);
        let psi = random_state_below(&b, 2, &mut rng);
        let minus_f = f.scaled(C64::new(-1.0, 0.0));
        let lhs = weyl_apply(&minus_f, &apply_annihilate(&g, &weyl_apply(&f, &psi).unwrap()).unwrap()).unwrap();
        let rhs = apply_annihilate(&g, &psi).unwrap().add(&psi.scaled(g.inner(&f))).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn coherent_states_are_eigenvectors(seed in any::<u64>()) {
        let b = basis(2, 22);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, 1.0, &mut rng);
        let g = random_mode(2, &mut rng);
        let coh = coherent_state(&b, &f).unwrap();
        let lhs = apply_annihilate(&g, &coh).unwrap();
        let rhs = coh.scaled(g.inner(&f));
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn coherent_number_moments(seed in any::<u64>(), r in 0.1f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, r, &mut rng);
        let b = basis(2, weyl_headroom(&f) + 4);
        let (mean, var) = coherent_state(&b, &f).unwrap().number_moments();
        prop_assert!((mean - r * r).abs() < 1e-8);
        prop_assert!((var - r * r).abs() < 1e-8);
    }

    #[test]
    fn coherent_overlap(seed in any::<u64>()) {
        let b = basis(2, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scaled_mode(2, 1.0, &mut rng);
        let g = scaled_mode(2, 0.8, &mut rng);
        let ov = coherent_state(&b, &f).unwrap().inner(&coherent_state(&b, &g).unwrap()).unwrap();
        let expect = (-0.5 * f.sub(&g).norm_sqr()).exp();
        prop_assert!((ov.norm() - expect).abs() < 1e-10);
    }
}

#[test]
fn field_on_vacuum_is_creation() {
    let b = basis(3, 3);
    let f = ModeFunction::from_real(&[0.3, -0.2, 1.0]);
    let vac = FockState::vacuum(&b);
    let lhs = field_phi(&f, &vac).unwrap();
    let rhs = apply_create(&f, &vac).unwrap();
    assert!(lhs.distance(&rhs).unwrap() == 0.0);
}

#[test]
fn vacuum_projection() {
    let b = basis(2, 3);
    let vac = FockState::vacuum(&b);
    assert_eq!(project_sector(0, &vac).unwrap().distance(&vac).unwrap(), 0.0);
}

#[test]
fn broken_truncation_is_reported() {
    let b = basis(2, 8);
    let f = ModeFunction::from_real(&[1.0, 1.0]);
    let err = weyl_apply(&f, &FockState::vacuum(&b)).unwrap_err();
    assert!(err.to_string().contains("headroom"));
}
