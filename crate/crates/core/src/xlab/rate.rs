//! Many-body versus Hartree distance sweep over particle number and time.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::hartree::{solve, steps_for};
use crate::manybody::{assemble_capped, product_projector, reduce, trace_distance, SectorState};
use crate::xlab::config::LoadedConfig;
use crate::xlab::fit::{fit_rate, FitVerdict};
use crate::xlab::report::{num, Bundle};

/// Distances for one `(N, t)` snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub particles: usize,
    pub t: f64,
    pub alpha: Option<f64>,
    pub dim: usize,
    /// `Tr|gamma~(1) - |phi~><phi~||`
    pub trace_distance: f64,
    /// `Tr|gamma~(2) - |phi~><phi~|^{(x)2}|`, absent for `N = 1`.
    pub pair_distance: Option<f64>,
    /// `2 sqrt(4 trace_distance)`
    pub pair_bound: f64,
}

impl RateRow {
    pub fn pair_bound_holds(&self) -> bool {
        self.pair_distance.is_none_or(|d| d <= self.pair_bound)
    }
}

/// Per-time summary across the particle sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub fit: FitVerdict,
    /// `c` in `c / sqrt(N)` matched at the smallest swept `N`.
    pub envelope_c: f64,
    /// `N >= envelope_from` distances strictly below the envelope.
    pub envelope_holds: bool,
    pub monotone: bool,
}

/// `log(N d(N, t)) = log C + K t` pooled over all snapshots with `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub c: f64,
    pub k: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub summaries: Vec<TimeSummary>,
    pub growth: Option<GrowthFit>,
    pub noninteracting: bool,
}

impl RateReport {
    pub fn rows_at(&self, t: f64) -> impl Iterator<Item = &RateRow> {
        self.rows.iter().filter(move |r| r.t == t)
    }

    pub fn summary_at(&self, t: f64) -> Option<&TimeSummary> {
        self.summaries.iter().find(|s| s.t == t)
    }
}

fn run_one(cfg: &LoadedConfig, n: usize) -> Result<Vec<RateRow>> {
    let c = &cfg.config;
    let grid = c.grid()?;
    let (v, alpha) = c.regularized(&grid, n)?;
    let phi0 = c.initial_state(&grid)?;
    let t_max = c.sweep.times.iter().cloned().fold(0.0, f64::max);
    let traj = solve(&phi0, &grid, &v, c.solver.dt, steps_for(t_max, c.solver.dt))?;
    let h = assemble_capped(n, &grid, &v, c.dimension_cap)?;
    let u = h.propagator()?;
    let psi0 = SectorState::product(h.basis(), &phi0)?;
    c.sweep
        .times
        .iter()
        .map(|&t| {
            let psi = u.propagate(&psi0, t)?;
            let phi = traj.phi_at(t)?;
            let d1 = trace_distance(&reduce(&psi, 1)?.matrix, &product_projector(&phi, 1))?;
            let d2 = if n >= 2 {
                Some(trace_distance(&reduce(&psi, 2)?.matrix, &product_projector(&phi, 2))?)
            } else {
                None
            };
            Ok(RateRow {
                particles: n,
                t,
                alpha,
                dim: h.basis().dim(),
                trace_distance: d1,
                pair_distance: d2,
                pair_bound: 2.0 * (4.0 * d1).sqrt(),
            })
        })
        .collect()
}

pub fn run_rate_sweep(cfg: &LoadedConfig) -> Result<RateReport> {
    let c = &cfg.config;
    let pool = c.thread_pool()?;
    let per_n: Vec<Vec<RateRow>> =
        pool.install(|| c.sweep.particles.par_iter().map(|&n| run_one(cfg, n)).collect::<Result<Vec<_>>>())?;
    let rows: Vec<RateRow> = per_n.into_iter().flatten().collect();
    let noninteracting = c.potential(&c.grid()?)?.is_zero();
    let mut summaries = Vec::new();
    for &t in &c.sweep.times {
        let mut pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.t == t).map(|r| (r.particles as f64, r.trace_distance)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fit = if noninteracting {
            FitVerdict::Degenerate { reason: "interaction is identically zero".into() }
        } else if pts.len() < 3 {
            FitVerdict::Degenerate { reason: format!("{} particle numbers swept", pts.len()) }
        } else {
            fit_rate(&pts, c.sweep.floor)?
        };
        let (n0, d0) = pts[0];
        let envelope_c = d0 * n0.sqrt();
        let envelope_holds = pts
            .iter()
            .filter(|(n, _)| *n >= c.sweep.envelope_from as f64)
            .all(|(n, d)| *d < envelope_c / n.sqrt());
        let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
        summaries.push(TimeSummary { t, fit, envelope_c, envelope_holds, monotone });
    }
    let growth = {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.t > 0.0 && r.trace_distance > c.sweep.floor)
            .map(|r| (r.t, (r.trace_distance * r.particles as f64).ln()))
            .collect();
        let distinct_t = pts.iter().any(|p| p.0 != pts[0].0);
        if pts.len() >= 2 && distinct_t && !noninteracting {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let (k, lc, r2) = crate::linalg::linear_fit(&x, &y);
            Some(GrowthFit { c: lc.exp(), k, r2 })
        } else {
            None
        }
    };
    Ok(RateReport { rows, summaries, growth, noninteracting })
}

/// Noninteracting sweeps must reproduce the Hartree product to this accuracy.
pub const NONINTERACTING_TOL: f64 = 1e-9;

pub fn rate_bundle(cfg: &LoadedConfig, report: &RateReport) -> Bundle {
    let c = &cfg.config;
    let mut b = Bundle::new(&cfg.hash, "rate_checks.json");
    let mut dist = b.table(&["N", "t", "alpha", "dim", "trace_distance", "pair_distance", "pair_bound", "pair_bound_holds"]);
    for r in &report.rows {
        dist.push(b.row(vec![
            r.particles.to_string(),
            num(r.t),
            r.alpha.map(num).unwrap_or_default(),
            r.dim.to_string(),
            num(r.trace_distance),
            r.pair_distance.map(num).unwrap_or_default(),
            num(r.pair_bound),
            r.pair_bound_holds().to_string(),
        ]));
    }
    let mut fits = b.table(&["t", "verdict", "slope", "intercept", "r2", "envelope_c", "envelope_holds", "monotone"]);
    for s in &report.summaries {
        let (verdict, slope, icpt, r2) = match &s.fit {
            FitVerdict::Fit(f) => ("fit", num(f.slope), num(f.intercept), num(f.r2)),
            FitVerdict::Degenerate { .. } => ("degenerate", String::new(), String::new(), String::new()),
        };
        fits.push(b.row(vec![
            num(s.t),
            verdict.into(),
            slope,
            icpt,
            r2,
            num(s.envelope_c),
            s.envelope_holds.to_string(),
            s.monotone.to_string(),
        ]));
    }
    b.add_table("rate_distances.csv", dist);
    b.add_table("rate_fits.csv", fits);

    let band = c.sweep.slope_band;
    for s in &report.summaries {
        let params = json!({"t": s.t, "particles": c.sweep.particles});
        let pts: Vec<f64> = report.rows_at(s.t).map(|r| r.trace_distance).collect();
        if report.noninteracting {
            let worst = pts.iter().cloned().fold(0.0, f64::max);
            b.check("noninteracting-exactness", params.clone(), json!({"max_distance": worst}), json!(NONINTERACTING_TOL), worst < NONINTERACTING_TOL, true);
            continue;
        }
        if s.t == 0.0 {
            continue;
        }
        match &s.fit {
            FitVerdict::Fit(f) => b.check(
                "rate-slope",
                params.clone(),
                json!({"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "distances": pts}),
                json!({"band": band}),
                f.slope.is_finite() && f.slope >= band[0] && f.slope <= band[1],
                true,
            ),
            FitVerdict::Degenerate { reason } => {
                b.check("rate-slope", params.clone(), json!({"degenerate": reason}), json!({"band": band}), false, true)
            }
        }
        b.check(
            "root-envelope-dominance",
            params.clone(),
            json!({"envelope_c": s.envelope_c, "distances": pts}),
            json!({"from_particles": c.sweep.envelope_from}),
            s.envelope_holds,
            true,
        );
        b.check("monotone-in-N", params, json!({"distances": pts}), json!(null), s.monotone, false);
    }
    let violations: Vec<_> = report
        .rows
        .iter()
        .filter(|r| !r.pair_bound_holds())
        .map(|r| json!({"N": r.particles, "t": r.t}))
        .collect();
    let worst_ratio = report
        .rows
        .iter()
        .filter_map(|r| r.pair_distance.map(|d| if r.pair_bound > 0.0 { d / r.pair_bound } else if d > 0.0 { f64::INFINITY } else { 0.0 }))
        .fold(0.0, f64::max);
    b.check(
        "pair-marginal-bound",
        json!({"snapshots": report.rows.len()}),
        json!({"max_ratio": worst_ratio, "violations": violations}),
        json!("pair_distance <= 2 sqrt(4 trace_distance)"),
        violations.is_empty(),
        true,
    );
    if let Some(g) = report.growth {
        b.check("growth-constants", json!({}), json!({"C": g.c, "K": g.k, "r2": g.r2}), json!(null), g.c.is_finite() && g.k.is_finite(), false);
    }
    b
}
