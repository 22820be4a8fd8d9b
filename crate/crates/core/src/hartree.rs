//! Discrete Hartree equation `i d/dt phi = h0 phi + (V * |phi|^2) phi` on the
//! ring, integrated with Strang splitting around the exact kinetic propagator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::ModeFunction;
use crate::lattice::{regularize, LatticeGrid, PotentialSpec};
use crate::linalg::{self, C64};
use crate::manybody::{product_projector, trace_distance};
use crate::xlab::report::{num, CsvTable};

/// Largest admissible `|dt| * ||h0||`.
pub const STABILITY_BUDGET: f64 = 0.5;

/// Conserved and monitored quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    /// `<phi, (I + h0) phi>`, the lattice stand-in for the squared H^1 norm.
    pub h1: f64,
}

#[derive(Debug, Clone)]
pub struct HartreeTrajectory {
    grid: LatticeGrid,
    potential: PotentialSpec,
    dt: f64,
    snapshots: Vec<ModeFunction>,
    diagnostics: Vec<Diagnostics>,
}

/// `E[phi] = <phi, h0 phi> + 1/2 sum_ij V(dist(i,j)) |phi_i|^2 |phi_j|^2`.
pub fn energy(grid: &LatticeGrid, potential: &PotentialSpec, phi: &ModeFunction) -> f64 {
    let rho = phi.density();
    let kin = kinetic(grid, phi);
    let pot: f64 = potential.convolve(grid, &rho).iter().zip(&rho).map(|(u, r)| u * r).sum();
    kin + 0.5 * pot
}

fn kinetic(grid: &LatticeGrid, phi: &ModeFunction) -> f64 {
    let h = linalg::to_complex(grid.h0());
    phi.0.dotc(&(&h * &phi.0)).re
}

fn diagnostics(grid: &LatticeGrid, potential: &PotentialSpec, phi: &ModeFunction, t: f64) -> Diagnostics {
    let norm = phi.norm();
    Diagnostics { t, norm, energy: energy(grid, potential, phi), h1: norm * norm + kinetic(grid, phi) }
}

/// Integrates `steps` Strang steps of size `dt` (negative `dt` runs backwards).
pub fn solve(
    phi0: &ModeFunction,
    grid: &LatticeGrid,
    potential: &PotentialSpec,
    dt: f64,
    steps: usize,
) -> Result<HartreeTrajectory> {
    if phi0.len() != grid.sites() {
        return Err(Error::ModeMismatch { expected: grid.sites(), found: phi0.len() });
    }
    if (phi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state must be normalized, ||phi0|| = {}", phi0.norm())));
    }
    if !dt.is_finite() || dt == 0.0 {
        return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
    }
    let product = dt.abs() * grid.kinetic_norm();
    if product > STABILITY_BUDGET {
        return Err(Error::Stability { product, suggested: STABILITY_BUDGET / grid.kinetic_norm() });
    }
    let kin = linalg::unitary_from_real_symmetric(grid.h0(), dt)?;
    let half_phase = |phi: &mut ModeFunction| {
        let u = potential.convolve(grid, &phi.density());
        for (z, ui) in phi.0.iter_mut().zip(u) {
            *z *= C64::from_polar(1.0, -0.5 * dt * ui);
        }
    };

    let mut snapshots = Vec::with_capacity(steps + 1);
    let mut diags = Vec::with_capacity(steps + 1);
    let mut phi = phi0.clone();
    snapshots.push(phi.clone());
    diags.push(diagnostics(grid, potential, &phi, 0.0));
    for k in 1..=steps {
        half_phase(&mut phi);
        phi = ModeFunction(&kin * &phi.0);
        half_phase(&mut phi);
        snapshots.push(phi.clone());
        diags.push(diagnostics(grid, potential, &phi, k as f64 * dt));
    }
    Ok(HartreeTrajectory { grid: grid.clone(), potential: potential.clone(), dt, snapshots, diagnostics: diags })
}

/// Number of steps of size `|dt|` that reach `t` (rounded to the nearest step).
pub fn steps_for(t: f64, dt: f64) -> usize {
    (t.abs() / dt.abs()).round() as usize
}

impl HartreeTrajectory {
    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn end_time(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn snapshots(&self) -> &[ModeFunction] {
        &self.snapshots
    }

    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn last(&self) -> &ModeFunction {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// State at grid time `t`, linearly interpolated between snapshots.
    pub fn phi_at(&self, t: f64) -> Result<ModeFunction> {
        let end = self.end_time();
        let (lo, hi) = if end >= 0.0 { (0.0, end) } else { (end, 0.0) };
        let tol = 1e-12 * self.dt.abs();
        if t < lo - tol || t > hi + tol {
            return Err(Error::TimeOutOfRange { t, start: lo, end: hi });
        }
        let x = (t / self.dt).clamp(0.0, self.steps() as f64);
        let k = x.floor() as usize;
        let frac = x - k as f64;
        if k >= self.steps() || frac < 1e-12 {
            return Ok(self.snapshots[k.min(self.steps())].clone());
        }
        if frac > 1.0 - 1e-12 {
            return Ok(self.snapshots[k + 1].clone());
        }
        let a = &self.snapshots[k].0 * C64::new(1.0 - frac, 0.0);
        let b = &self.snapshots[k + 1].0 * C64::new(frac, 0.0);
        Ok(ModeFunction(a + b))
    }

    /// Largest `|E(t) - E(0)|` over the run divided by the elapsed time.
    pub fn energy_drift_rate(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        let span = self.end_time().abs().max(f64::MIN_POSITIVE);
        self.diagnostics.iter().map(|d| (d.energy - e0).abs()).fold(0.0, f64::max) / span
    }

    pub fn mass_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| (d.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_h1(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.h1).fold(0.0, f64::max)
    }

    /// Rows `t, site, re, im`, one per site per retained snapshot (every `stride` steps).
    pub fn trajectory_csv(&self, stride: usize) -> CsvTable {
        let mut table = CsvTable::new(&["t", "site", "re", "im"]);
        for (k, phi) in self.snapshots.iter().enumerate().step_by(stride.max(1)) {
            let t = k as f64 * self.dt;
            for (i, z) in phi.as_slice().iter().enumerate() {
                table.push(vec![num(t), i.to_string(), num(z.re), num(z.im)]);
            }
        }
        table
    }

    /// Rows `t, norm, energy, h1`.
    pub fn conserved_csv(&self, stride: usize) -> CsvTable {
        let mut table = CsvTable::new(&["t", "norm", "energy", "h1"]);
        for d in self.diagnostics.iter().step_by(stride.max(1)) {
            table.push(vec![num(d.t), num(d.norm), num(d.energy), num(d.h1)]);
        }
        table
    }
}

/// Projector comparison `Tr| |phi><phi|^k - |phi~><phi~|^k |` against `2k ||phi - phi~||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorBound {
    pub order: usize,
    pub trace_distance: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedComparison {
    pub alpha: f64,
    pub times: Vec<f64>,
    /// `||phi_t - phi~_t||` on the time grid.
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub projectors: Vec<ProjectorBound>,
}

/// Solves with `V` and with the cutoff potential from the same `phi0` and
/// compares the two solutions up to `steps * dt`.
pub fn compare_regularized(
    phi0: &ModeFunction,
    grid: &LatticeGrid,
    potential: &PotentialSpec,
    alpha: f64,
    dt: f64,
    steps: usize,
) -> Result<RegularizedComparison> {
    let reg = regularize(potential, alpha)?;
    let full = solve(phi0, grid, potential, dt, steps)?;
    let cut = if reg.values() == potential.values() { full.clone() } else { solve(phi0, grid, &reg, dt, steps)? };
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let distances: Vec<f64> =
        full.snapshots.iter().zip(&cut.snapshots).map(|(a, b)| a.sub(b).norm()).collect();
    let max_distance = distances.iter().cloned().fold(0.0, f64::max);
    let (a, b) = (full.last(), cut.last());
    let diff = a.sub(b).norm();
    let projectors = [1usize, 2]
        .into_iter()
        .map(|k| {
            let d = trace_distance(&product_projector(a, k), &product_projector(b, k))?;
            let bound = 2.0 * k as f64 * diff;
            Ok(ProjectorBound { order: k, trace_distance: d, bound, holds: d <= bound + 1e-12 })
        })
        .collect::<Result<_>>()?;
    Ok(RegularizedComparison { alpha, times, distances, max_distance, projectors })
}

/// Gaussian packet `exp(-(x - c)^2 / (2 w^2) + i p x)` on the ring, normalized.
pub fn gaussian_packet(grid: &LatticeGrid, center: f64, width: f64, momentum: f64) -> Result<ModeFunction> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("packet width must be positive, got {width}")));
    }
    let vals = (0..grid.sites())
        .map(|i| {
            let x = grid.signed_offset(i, center);
            C64::from_polar((-x * x / (2.0 * width * width)).exp(), momentum * x)
        })
        .collect();
    Ok(ModeFunction::new(vals).normalized())
}

/// Mean-field Hamiltonian density matrix `h0 + diag(V * |phi|^2)`.
pub fn mean_field_operator(grid: &LatticeGrid, potential: &PotentialSpec, phi: &ModeFunction) -> DMatrix<C64> {
    let u = potential.convolve(grid, &phi.density());
    let mut h = linalg::to_complex(grid.h0());
    for (i, ui) in u.into_iter().enumerate() {
        h[(i, i)] += C64::new(ui, 0.0);
    }
    h
}
