//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use meanfield_core::fluctuation::{build_generators, GeneratorSeries};
use meanfield_core::hartree::{gaussian_packet, solve};
use meanfield_core::{FockBasis, LatticeGrid, ModeFunction, PotentialFamily, PotentialSpec};

pub struct Fixture {
    pub grid: LatticeGrid,
    pub potential: PotentialSpec,
    pub phi0: ModeFunction,
}

/// Ring with a soft-Coulomb pair potential and a moving Gaussian packet.
pub fn ring(sites: usize) -> Fixture {
    let grid = LatticeGrid::new(sites, 1.0).expect("valid grid");
    let potential =
        PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0: 1.0, a: 0.5 }, &grid).expect("valid potential");
    let phi0 = gaussian_packet(&grid, sites as f64 / 2.0 - 0.5, 1.0, 0.5).expect("valid packet");
    Fixture { grid, potential, phi0 }
}

/// Generators along a short weak-coupling trajectory on three sites.
pub fn generators(particles: usize, t_end: f64) -> GeneratorSeries {
    let grid = LatticeGrid::new(3, 1.0).expect("valid grid");
    let v = PotentialSpec::on_grid(PotentialFamily::Gaussian { v0: 0.1, sigma: 1.0 }, &grid).expect("valid potential");
    let phi0 = gaussian_packet(&grid, 1.0, 0.8, 0.4).expect("valid packet");
    let dt = 1e-3;
    let traj = solve(&phi0, &grid, &v, dt, (t_end / dt).round() as usize).expect("stable step");
    build_generators(&traj, particles).expect("generators")
}

pub fn fock_basis(modes: usize, n_max: usize) -> Arc<FockBasis> {
    Arc::new(FockBasis::new(modes, n_max).expect("basis fits"))
}
