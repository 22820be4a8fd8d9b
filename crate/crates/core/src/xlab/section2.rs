//! Cutoff comparison suite: exact and regularized dynamics over an alpha grid.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::hartree::{compare_regularized, steps_for, RegularizedComparison};
use crate::manybody::{regularization_gap, RegularizationGap};
use crate::xlab::config::LoadedConfig;
use crate::xlab::report::{num, Bundle};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRun {
    pub alpha: f64,
    /// Many-body gaps per time.
    #[serde(skip)]
    pub manybody: Vec<RegularizationGap>,
    /// `||phi_t - phi~_t||` per time.
    pub hartree: Vec<f64>,
    #[serde(skip)]
    pub comparison: RegularizedComparison,
}

impl AlphaRun {
    /// `||psi_t - psi~_t||^2` at the last time.
    pub fn manybody_gap(&self) -> f64 {
        self.manybody.last().map_or(0.0, |g| g.sq_distance)
    }

    pub fn hartree_gap(&self) -> f64 {
        *self.hartree.last().unwrap_or(&0.0)
    }

    pub fn bounds_hold(&self) -> bool {
        self.manybody.iter().all(|g| g.marginals.iter().all(|m| m.holds)) && self.comparison.projectors.iter().all(|p| p.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section2Report {
    pub particles: usize,
    pub times: Vec<f64>,
    pub runs: Vec<AlphaRun>,
    /// Run at a cutoff above `max |V|`, where `V~ = V`.
    pub inactive: AlphaRun,
    /// Largest `|r / mean(r) - 1|` of `gap / alpha` across the grid.
    pub manybody_spread: f64,
    pub hartree_spread: f64,
}

fn spread(ratios: &[f64]) -> f64 {
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean == 0.0 {
        return if ratios.iter().all(|r| *r == 0.0) { 0.0 } else { f64::INFINITY };
    }
    ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max)
}

fn run_alpha(cfg: &LoadedConfig, alpha: f64, times: &[f64]) -> Result<AlphaRun> {
    let c = &cfg.config;
    let s2 = c.section2.as_ref().expect("checked by caller");
    let grid = c.grid()?;
    let v = c.potential(&grid)?;
    let phi0 = c.initial_state(&grid)?;
    let manybody = regularization_gap(s2.particles, &grid, &v, alpha, &phi0, times)?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = steps_for(t_max, c.solver.dt);
    let comparison = compare_regularized(&phi0, &grid, &v, alpha, c.solver.dt, steps)?;
    let hartree = times
        .iter()
        .map(|&t| comparison.distances[steps_for(t, c.solver.dt).min(steps)])
        .collect();
    Ok(AlphaRun { alpha, manybody, hartree, comparison })
}

pub fn run_section2_suite(cfg: &LoadedConfig) -> Result<Section2Report> {
    let c = &cfg.config;
    let s2 = c.section2.as_ref().ok_or_else(|| Error::Config("missing [section2] table".into()))?;
    let mut times = s2.times.clone();
    if !times.contains(&0.0) {
        times.insert(0, 0.0);
    }
    let grid = c.grid()?;
    let vmax = c.potential(&grid)?.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let inactive_alpha = if vmax > 0.0 { 0.5 / vmax } else { 1.0 };
    let pool = c.thread_pool()?;
    let mut all: Vec<AlphaRun> = pool.install(|| {
        s2.alphas
            .iter()
            .chain(std::iter::once(&inactive_alpha))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&&a| run_alpha(cfg, a, &times))
            .collect::<Result<Vec<_>>>()
    })?;
    let inactive = all.pop().expect("inactive run present");
    let mb: Vec<f64> = all.iter().map(|r| r.manybody_gap() / r.alpha).collect();
    let hf: Vec<f64> = all.iter().map(|r| r.hartree_gap() / r.alpha).collect();
    Ok(Section2Report {
        particles: s2.particles,
        times,
        manybody_spread: spread(&mb),
        hartree_spread: spread(&hf),
        runs: all,
        inactive,
    })
}

pub fn section2_bundle(cfg: &LoadedConfig, report: &Section2Report) -> Bundle {
    let s2 = cfg.config.section2.as_ref().expect("section2 config");
    let mut b = Bundle::new(&cfg.hash, "section2_checks.json");
    let mut mbt = b.table(&[
        "alpha",
        "t",
        "sq_distance",
        "constant",
        "gamma1_distance",
        "gamma1_bound",
        "gamma2_distance",
        "gamma2_bound",
    ]);
    let mut ht = b.table(&["alpha", "t", "distance", "distance_over_alpha"]);
    for run in report.runs.iter().chain(std::iter::once(&report.inactive)) {
        for (g, h) in run.manybody.iter().zip(&run.hartree) {
            let m = |k: usize| g.marginals.iter().find(|m| m.order == k);
            let cell = |k: usize, f: fn(&crate::manybody::MarginalGap) -> f64| m(k).map(|x| num(f(x))).unwrap_or_default();
            mbt.push(b.row(vec![
                num(run.alpha),
                num(g.t),
                num(g.sq_distance),
                num(g.constant),
                cell(1, |x| x.trace_distance),
                cell(1, |x| x.bound),
                cell(2, |x| x.trace_distance),
                cell(2, |x| x.bound),
            ]));
            ht.push(b.row(vec![num(run.alpha), num(g.t), num(*h), num(h / run.alpha)]));
        }
    }
    b.add_table("section2_manybody.csv", mbt);
    b.add_table("section2_hartree.csv", ht);

    let alphas: Vec<f64> = report.runs.iter().map(|r| r.alpha).collect();
    let params = json!({"alphas": alphas, "particles": report.particles, "t": report.times.last()});
    let mb: Vec<f64> = report.runs.iter().map(|r| r.manybody_gap() / r.alpha).collect();
    let hf: Vec<f64> = report.runs.iter().map(|r| r.hartree_gap() / r.alpha).collect();
    b.check(
        "manybody-gap-linear-in-alpha",
        params.clone(),
        json!({"gap_over_alpha": mb, "spread": report.manybody_spread}),
        json!(s2.spread),
        report.manybody_spread <= s2.spread,
        true,
    );
    b.check(
        "hartree-gap-linear-in-alpha",
        params.clone(),
        json!({"gap_over_alpha": hf, "spread": report.hartree_spread}),
        json!(s2.spread),
        report.hartree_spread <= s2.spread,
        true,
    );
    let zero_at_start = report.runs.iter().chain(std::iter::once(&report.inactive)).all(|r| {
        r.manybody.iter().zip(&r.hartree).filter(|(g, _)| g.t == 0.0).all(|(g, h)| g.sq_distance == 0.0 && *h == 0.0)
    });
    b.check("zero-at-initial-time", params.clone(), json!({"all_zero": zero_at_start}), json!(0.0), zero_at_start, true);
    let inactive_max = report
        .inactive
        .manybody
        .iter()
        .map(|g| g.sq_distance)
        .chain(report.inactive.hartree.iter().cloned())
        .fold(0.0, f64::max);
    b.check(
        "zero-without-cutoff-effect",
        json!({"alpha": report.inactive.alpha}),
        json!({"max_gap": inactive_max}),
        json!(0.0),
        inactive_max == 0.0,
        true,
    );
    let bounds = report.runs.iter().all(AlphaRun::bounds_hold);
    b.check("marginal-and-projector-bounds", params, json!({"hold": bounds}), json!("Tr|g-g~| <= 2||psi-psi~||, Tr|P-P~| <= 2k||phi-phi~||"), bounds, true);
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_measures_relative_deviation() {
        assert_eq!(spread(&[1.0, 1.0, 1.0]), 0.0);
        assert!((spread(&[1.0, 2.0, 3.0]) - 0.5).abs() < 1e-15);
        assert_eq!(spread(&[0.0, 0.0]), 0.0);
    }
}
