use std::sync::Arc;

use meanfield_core::fock::testing::random_mode;
use meanfield_core::hartree::{self, energy, solve, steps_for};
use meanfield_core::linalg::{eigvalsh, C64};
use meanfield_core::manybody::{assemble, product_projector, propagate, reduce, trace_distance, SectorBasis, SectorState};
use meanfield_core::{LatticeGrid, ModeFunction, PotentialFamily, PotentialSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binomial(n: usize, k: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

fn soft(grid: &LatticeGrid, v0: f64) -> PotentialSpec {
    PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0, a: 0.5 }, grid).unwrap()
}

fn random_phi(m: usize, seed: u64) -> ModeFunction {
    random_mode(m, &mut ChaCha8Rng::seed_from_u64(seed)).normalized()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sector_dimension_is_binomial(m in 1usize..7, n in 0usize..7) {
        prop_assert_eq!(SectorBasis::new(m, n).unwrap().dim(), binomial(n + m - 1, n));
    }

    #[test]
    fn propagation_is_unitary_and_reversible(seed in any::<u64>(), n in 1usize..5, t in -2.0f64..2.0) {
        let grid = LatticeGrid::new(4, 1.0).unwrap();
        let h = assemble(n, &grid, &soft(&grid, 1.0)).unwrap();
        prop_assert!(h.hermiticity_residual() < 1e-13);
        let b = h.basis().clone();
        let psi = SectorState::product(&b, &random_phi(4, seed)).unwrap();
        let out = propagate(&h, &psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let back = propagate(&h, &out, -t).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-10);
    }

    #[test]
    fn reduced_densities_are_states(seed in any::<u64>(), n in 2usize..5) {
        let grid = LatticeGrid::new(4, 1.0).unwrap();
        let h = assemble(n, &grid, &soft(&grid, 1.0)).unwrap();
        let psi = propagate(&h, &SectorState::product(h.basis(), &random_phi(4, seed)).unwrap(), 0.7).unwrap();
        for k in 1..=2 {
            let g = reduce(&psi, k).unwrap();
            prop_assert!((g.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
            prop_assert!((&g.matrix - g.matrix.adjoint()).iter().all(|z| z.norm() < 1e-13));
            prop_assert!(eigvalsh(&g.matrix).unwrap().iter().all(|e| *e > -1e-10));
        }
    }

    #[test]
    fn product_state_marginal_is_rank_one(seed in any::<u64>(), n in 1usize..6) {
        let phi = random_phi(5, seed);
        let b = Arc::new(SectorBasis::new(5, n).unwrap());
        let g = reduce(&SectorState::product(&b, &phi).unwrap(), 1).unwrap();
        prop_assert!(trace_distance(&g.matrix, &product_projector(&phi, 1)).unwrap() < 1e-12);
    }

    #[test]
    fn hartree_conserves_mass_and_energy(seed in any::<u64>(), v0 in -2.0f64..2.0) {
        let grid = LatticeGrid::new(6, 1.0).unwrap();
        let v = soft(&grid, v0);
        let traj = solve(&random_phi(6, seed), &grid, &v, 1e-3, 1000).unwrap();
        prop_assert!(traj.mass_drift() < 1e-10);
        prop_assert!(traj.energy_drift_rate() < 1e-6);
        let back = solve(traj.last(), &grid, &v, -1e-3, 1000).unwrap();
        prop_assert!(back.last().sub(&traj.snapshots()[0]).norm() < 1e-8);
    }
}

#[test]
fn noninteracting_marginal_follows_free_orbital() {
    let grid = LatticeGrid::new(5, 1.0).unwrap();
    let zero = PotentialSpec::zero(&grid);
    let phi0 = random_phi(5, 3);
    let traj = solve(&phi0, &grid, &zero, 1e-3, steps_for(1.5, 1e-3)).unwrap();
    for n in 1..=5 {
        let h = assemble(n, &grid, &zero).unwrap();
        let psi = propagate(&h, &SectorState::product(h.basis(), &phi0).unwrap(), 1.5).unwrap();
        let g = reduce(&psi, 1).unwrap();
        assert!(trace_distance(&g.matrix, &product_projector(traj.last(), 1)).unwrap() < 1e-10);
    }
}

#[test]
fn uniform_state_is_stationary_up_to_phase() {
    let grid = LatticeGrid::new(6, 1.0).unwrap();
    let v = soft(&grid, 1.3);
    let phi0 = ModeFunction::uniform(6);
    let traj = solve(&phi0, &grid, &v, 1e-3, 2000).unwrap();
    let overlap = phi0.inner(traj.last()).norm();
    assert!((overlap - 1.0).abs() < 1e-10, "overlap {overlap}");
    assert!(traj.last().density().iter().all(|r| (r - 1.0 / 6.0).abs() < 1e-10));
}

#[test]
fn product_state_energy_matches_hand_formula() {
    // <phi^N, H_N phi^N> / N = <phi, h0 phi> + (N - 1) / (2N) sum V |phi_i|^2 |phi_j|^2
    let grid = LatticeGrid::new(5, 1.0).unwrap();
    let v = soft(&grid, 0.8);
    let phi = random_phi(5, 9);
    let interaction = 2.0 * (energy(&grid, &v, &phi) - energy(&grid, &PotentialSpec::zero(&grid), &phi));
    let kinetic = energy(&grid, &PotentialSpec::zero(&grid), &phi);
    for n in 1..=6 {
        let h = assemble(n, &grid, &v).unwrap();
        let psi = SectorState::product(h.basis(), &phi).unwrap();
        let per_particle = h.energy(&psi) / n as f64;
        let hand = kinetic + 0.5 * (n as f64 - 1.0) / n as f64 * interaction;
        assert!((per_particle - hand).abs() < 1e-12, "N = {n}: {per_particle} vs {hand}");
    }
}

#[test]
fn gaussian_packet_is_normalized() {
    let grid = LatticeGrid::new(8, 1.0).unwrap();
    let phi = hartree::gaussian_packet(&grid, 3.5, 1.2, 0.4).unwrap();
    assert!((phi.norm() - 1.0).abs() < 1e-14);
}
