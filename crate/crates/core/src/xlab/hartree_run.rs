//! Standalone Hartree run with conservation and reversibility checks.

use serde_json::json;

use crate::error::{Error, Result};
use crate::hartree::{solve, steps_for};
use crate::lattice::regularize;
use crate::xlab::config::LoadedConfig;
use crate::xlab::report::Bundle;

pub const MASS_TOL: f64 = 1e-10;
/// Energy drift per unit time.
pub const ENERGY_RATE_TOL: f64 = 1e-8;
pub const REVERSAL_TOL: f64 = 1e-8;

pub fn run_hartree(cfg: &LoadedConfig) -> Result<Bundle> {
    let c = &cfg.config;
    let h = c.hartree.as_ref().ok_or_else(|| Error::Config("missing [hartree] table".into()))?;
    let grid = c.grid()?;
    let v = match h.alpha {
        Some(a) => regularize(&c.potential(&grid)?, a)?,
        None => c.potential(&grid)?,
    };
    let phi0 = c.initial_state(&grid)?;
    let steps = steps_for(h.t_end, c.solver.dt);
    let fwd = solve(&phi0, &grid, &v, c.solver.dt, steps)?;
    let back = solve(fwd.last(), &grid, &v, -c.solver.dt, steps)?;
    let reversal = back.last().sub(&phi0).norm();

    let mut b = Bundle::new(&cfg.hash, "hartree_checks.json");
    b.add_table("hartree_trajectory.csv", b.tagged(&fwd.trajectory_csv(c.output.stride)));
    b.add_table("hartree_conserved.csv", b.tagged(&fwd.conserved_csv(c.output.stride)));
    let params = json!({"dt": c.solver.dt, "t_end": fwd.end_time(), "steps": steps, "potential": v.tag()});
    let mass = fwd.mass_drift();
    b.check("mass-conservation", params.clone(), json!({"max_drift": mass}), json!(MASS_TOL), mass <= MASS_TOL, true);
    let rate = fwd.energy_drift_rate();
    b.check("energy-conservation", params.clone(), json!({"drift_per_time": rate}), json!(ENERGY_RATE_TOL), rate <= ENERGY_RATE_TOL, true);
    b.check("time-reversal", params, json!({"distance": reversal}), json!(REVERSAL_TOL), reversal <= REVERSAL_TOL, true);
    Ok(b)
}
