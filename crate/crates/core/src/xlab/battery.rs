//! Lemma battery: Fock algebra identities, the product/coherent constant,
//! and the fluctuation-dynamics checks, collected into one verdict file.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fluctuation::{
    build_generators, check_kinetic_sandwich, check_l2_expectation, check_l3_bound, check_number_growth,
    check_sector_locality, evolve_fock, odd_sector_mass, oracle_field_map, propagate_quadratic, reconstruction_residual,
    DEFAULT_LEAK_THRESHOLD,
};
use crate::fock::io::state_to_string;
use crate::fock::testing::{random_mode, random_state_below};
use crate::fock::{
    apply_annihilate, apply_create, coherent_minus_product_norm, coherent_state, d_n, weyl_apply, weyl_headroom, FockBasis,
    FockState, ModeFunction,
};
use crate::hartree::{solve, steps_for};
use crate::linalg::{linear_fit, C64};
use crate::xlab::config::LoadedConfig;
use crate::xlab::report::{num, Bundle};

pub const CCR_TOL: f64 = 1e-12;
pub const WEYL_TOL: f64 = 1e-10;
pub const MOMENT_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-12;
pub const STIRLING_TOL: f64 = 0.01;
pub const TREND_TOL: f64 = 0.1;
pub const ORACLE_TOL: f64 = 1e-6;
pub const FLOW_CCR_TOL: f64 = 1e-8;
pub const PARITY_TOL: f64 = 1e-10;
pub const LOCALITY_TOL: f64 = 1e-6;
pub const SANDWICH_RATIO: f64 = 10.0;
pub const COLLAPSE_TOL: f64 = 1e-10;
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

fn basis(m: usize, n: usize) -> Result<Arc<FockBasis>> {
    Ok(Arc::new(FockBasis::new(m, n)?))
}

fn scaled(f: ModeFunction, r: f64) -> ModeFunction {
    f.normalized().scaled(C64::new(r, 0.0))
}

fn fock_algebra(b: &mut Bundle, modes: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let low = basis(modes, 6)?;
    let mut ccr: f64 = 0.0;
    for _ in 0..samples {
        let f = random_mode(modes, rng);
        let g = random_mode(modes, rng);
        let psi = random_state_below(&low, 4, rng);
        let ag = apply_annihilate(&f, &apply_create(&g, &psi)?)?;
        let ga = apply_create(&g, &apply_annihilate(&f, &psi)?)?;
        ccr = ccr.max(ag.sub(&ga)?.sub(&psi.scaled(f.inner(&g)))?.norm());
    }
    b.check("ccr", json!({"modes": modes, "n_max": 6, "samples": samples}), json!({"max_residual": ccr}), json!(CCR_TOL), ccr < CCR_TOL, true);

    let weyl_samples = (samples / 4).max(1);
    let wb = basis(modes, 18)?;
    let (mut comp, mut unit, mut shift): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..weyl_samples {
        let f = scaled(random_mode(modes, rng), 0.5);
        let g = scaled(random_mode(modes, rng), 0.5);
        let h = random_mode(modes, rng);
        let psi = random_state_below(&wb, 2, rng);
        let lhs = weyl_apply(&f, &weyl_apply(&g, &psi)?)?;
        let phase = C64::new(0.0, -f.inner(&g).im).exp();
        comp = comp.max(lhs.distance(&weyl_apply(&f.add(&g), &psi)?.scaled(phase))?);
        let w = weyl_apply(&f, &psi)?;
        unit = unit.max((w.norm_sqr() - 1.0).abs()).max(weyl_apply(&f.scaled(C64::new(-1.0, 0.0)), &w)?.distance(&psi)?);
        let lhs = weyl_apply(&f.scaled(C64::new(-1.0, 0.0)), &apply_annihilate(&h, &w)?)?;
        let rhs = apply_annihilate(&h, &psi)?.add(&psi.scaled(h.inner(&f)))?;
        shift = shift.max(lhs.distance(&rhs)?);
    }
    let p = json!({"modes": modes, "n_max": 18, "samples": weyl_samples, "norm": 0.5});
    b.check("weyl-composition", p.clone(), json!({"max_residual": comp}), json!(WEYL_TOL), comp < WEYL_TOL, true);
    b.check("weyl-unitarity", p.clone(), json!({"max_residual": unit}), json!(WEYL_TOL), unit < WEYL_TOL, true);
    b.check("weyl-shift", p, json!({"max_residual": shift}), json!(WEYL_TOL), shift < WEYL_TOL, true);

    let (mut mom, mut ovl): (f64, f64) = (0.0, 0.0);
    for k in 0..weyl_samples {
        let r = 0.2 + 1.2 * (k as f64 + 0.5) / weyl_samples as f64;
        let f = scaled(random_mode(modes, rng), r);
        let cb = basis(modes, weyl_headroom(&f) + 2)?;
        let (mean, var) = coherent_state(&cb, &f)?.number_moments();
        mom = mom.max((mean - r * r).abs()).max((var - r * r).abs());
        let g = scaled(random_mode(modes, rng), 0.8);
        let ob = basis(modes, weyl_headroom(&f).max(weyl_headroom(&g)))?;
        let ov = coherent_state(&ob, &f)?.inner(&coherent_state(&ob, &g)?)?;
        ovl = ovl.max((ov.norm() - (-0.5 * f.sub(&g).norm_sqr()).exp()).abs());
    }
    b.check("coherent-number-moments", json!({"samples": weyl_samples}), json!({"max_residual": mom}), json!(MOMENT_TOL), mom < MOMENT_TOL, true);
    b.check("coherent-overlap", json!({"samples": weyl_samples}), json!({"max_residual": ovl}), json!(WEYL_TOL), ovl < WEYL_TOL, true);

    let guard = weyl_apply(&ModeFunction::from_real(&vec![1.0; modes]), &FockState::vacuum(&basis(modes, 4)?));
    let caught = matches!(guard, Err(Error::Headroom { .. }));
    b.check("truncation-guard", json!({"n_max": 4}), json!({"headroom_error": caught}), json!(null), caught, true);
    Ok(())
}

fn product_constant(b: &mut Bundle) -> Result<()> {
    let d1 = d_n(1)?;
    let d2 = d_n(2)?;
    let err = (d1 - 0.5f64.exp()).abs().max((d2 - std::f64::consts::E / 2f64.sqrt()).abs());
    b.check("d_N-closed-forms", json!({"N": [1, 2]}), json!({"d_1": d1, "d_2": d2, "max_error": err}), json!(CLOSED_FORM_TOL), err < CLOSED_FORM_TOL, true);
    let st = d_n(100)? / (2.0 * std::f64::consts::PI * 100.0).powf(0.25);
    b.check("d_N-stirling", json!({"N": 100}), json!({"ratio": st}), json!(STIRLING_TOL), (st - 1.0).abs() < STIRLING_TOL, true);

    let e = ModeFunction::basis(1, 0);
    let mut t = b.table(&["N", "value", "d_N", "scaled", "vacuum_overlap_scaled", "one_particle_mass"]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut side: f64 = 0.0;
    for n in 1..=12 {
        let r = coherent_minus_product_norm(&e, n)?;
        t.push(b.row(vec![
            n.to_string(),
            num(r.value),
            num(r.d_n),
            num(r.scaled),
            num(r.vacuum_overlap_scaled),
            num(r.one_particle_mass),
        ]));
        xs.push((n as f64).ln());
        ys.push(r.scaled.ln());
        side = side.max((r.vacuum_overlap_scaled - 1.0).abs()).max(r.one_particle_mass);
    }
    let (slope, _, _) = linear_fit(&xs, &ys);
    let scaled: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
    b.add_table("lemma_product_constant.csv", t);
    b.check(
        "product-coherent-ratio-bounded",
        json!({"N": [1, 12]}),
        json!({"loglog_slope": slope, "scaled": scaled, "side_conditions": side}),
        json!(TREND_TOL),
        slope.abs() <= TREND_TOL && side < 1e-10,
        true,
    );
    Ok(())
}

fn fluctuations(b: &mut Bundle, cfg: &LoadedConfig, rng: &mut ChaCha8Rng) -> Result<()> {
    let c = &cfg.config;
    let l = c.lemmas.as_ref().expect("checked by caller");
    let grid = c.grid()?;
    let modes = grid.sites();
    let (v, alpha) = c.regularized(&grid, l.particles)?;
    let phi0 = c.initial_state(&grid)?;
    let horizon = l.t_max.max(l.sandwich_t_max);
    let traj = solve(&phi0, &grid, &v, c.solver.dt, steps_for(horizon, c.solver.dt))?;
    let gens = build_generators(&traj, l.particles)?;
    let fb = basis(modes, l.n_max)?;
    let base = json!({"modes": modes, "n_max": l.n_max, "N": l.particles, "alpha": alpha, "t_max": l.t_max});

    let oracle = oracle_field_map(&gens, &fb, l.t_max, 2)?;
    b.check(
        "bogoliubov-oracle",
        base.clone(),
        json!({"max_deviation": oracle.max_deviation, "max_leak": oracle.max_leak}),
        json!(ORACLE_TOL),
        oracle.max_deviation < ORACLE_TOL,
        true,
    );
    let bog = propagate_quadratic(&gens, l.t_max)?;
    let ccr = bog.max_ccr_residual();
    b.check("bogoliubov-ccr", base.clone(), json!({"max_residual": ccr}), json!(FLOW_CCR_TOL), ccr < FLOW_CCR_TOL, true);

    let vac = FockState::vacuum(&fb);
    let flowed = evolve_fock(&gens, &vac, 0.0, l.t_max, DEFAULT_LEAK_THRESHOLD, |_, _| {})?;
    let odd = odd_sector_mass(&flowed);
    b.check("pair-parity", base.clone(), json!({"odd_mass": odd, "norm": flowed.norm()}), json!(PARITY_TOL), odd < PARITY_TOL, true);
    b.add_text("vacuum_flow_state.txt", state_to_string(&flowed));

    let f = random_mode(modes, rng);
    let mut worst: f64 = 0.0;
    let mut per_t = Vec::new();
    for t in [0.0, 0.5 * l.t_max, l.t_max] {
        let r = check_sector_locality(&gens, &fb, &f, t)?;
        worst = worst.max(r.off_sector);
        per_t.push(json!({"t": t, "off_sector": r.off_sector}));
    }
    b.check("one-particle-locality", base.clone(), json!({"samples": per_t, "max": worst}), json!(LOCALITY_TOL), worst < LOCALITY_TOL, true);

    let growth = check_number_growth(&gens, &vac, &[1, 2, 3], l.t_max, l.stride, l.noise_floor)?;
    let mut gt = b.table(&["j", "t", "ratio"]);
    for g in &growth {
        for (t, r) in g.times.iter().zip(&g.ratios) {
            gt.push(b.row(vec![g.power.to_string(), num(*t), num(*r)]));
        }
        let finite = g.ratios.iter().all(|r| r.is_finite());
        b.check(
            &format!("number-growth-j{}", g.power),
            base.clone(),
            json!({"C": g.fit.c, "K": g.fit.k, "r2": g.fit.r2, "growth": g.fit.growth, "resolved": g.fit.resolved}),
            json!({"r2_min": 0.9, "flat": 1e-8, "floor": l.noise_floor}),
            finite && g.fit.pass,
            true,
        );
    }
    b.add_table("lemma_number_growth.csv", gt);

    let psi = random_state_below(&fb, 2, rng);
    let l2 = check_l2_expectation(&gens, &psi, l.t_max, l.stride, l.noise_floor)?;
    let mut lt = b.table(&["t", "expectation"]);
    for (t, e) in l2.times.iter().zip(&l2.expectations) {
        lt.push(b.row(vec![num(*t), num(*e)]));
    }
    b.add_table("lemma_l2_expectation.csv", lt);
    let bounded = l2
        .times
        .iter()
        .zip(&l2.expectations)
        .all(|(t, e)| e.abs() <= l2.fit.c * (l2.fit.k * t).exp() * l2.reference * (1.0 + 1e-12) + 1e-12);
    b.check(
        "quadratic-generator-envelope",
        base.clone(),
        json!({"C": l2.fit.c, "K": l2.fit.k, "r2": l2.fit.r2, "reference": l2.reference, "growth": l2.fit.growth, "resolved": l2.fit.resolved}),
        json!({"r2_min": 0.9, "flat": 1e-8, "floor": l.noise_floor}),
        l2.fit.pass && bounded,
        true,
    );

    let mut st = b.table(&["t", "c_minus", "c_plus", "c"]);
    let mut cs = Vec::new();
    for k in 0..l.sandwich_samples {
        let t = l.sandwich_t_max * k as f64 / (l.sandwich_samples - 1) as f64;
        let r = check_kinetic_sandwich(&gens, &fb, t)?;
        st.push(b.row(vec![num(t), num(r.c_minus), num(r.c_plus), num(r.c)]));
        cs.push(r.c);
    }
    b.add_table("lemma_sandwich.csv", st);
    let cmax = cs.iter().cloned().fold(0.0, f64::max);
    let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let (ratio, ok) = if cmax == 0.0 {
        (1.0, true)
    } else {
        let r = cmax / cmin;
        (r, cs.iter().all(|c| c.is_finite()) && r < SANDWICH_RATIO)
    };
    b.check(
        "kinetic-sandwich",
        json!({"modes": modes, "n_max": l.n_max, "t_max": l.sandwich_t_max, "samples": l.sandwich_samples}),
        json!({"c_max": cmax, "c_min": cmin, "ratio": ratio}),
        json!(SANDWICH_RATIO),
        ok,
        true,
    );

    let psi3 = random_state_below(&fb, l.n_max - 2, rng);
    let l3 = check_l3_bound(&gens, &psi3, l.t_max, &l.l3_particles)?;
    let rows: Vec<_> = l3.rows.iter().map(|r| json!({"N": r.particles, "j": r.power, "scaled": r.scaled})).collect();
    b.check("cubic-term-collapse", base.clone(), json!({"rows": rows, "collapse": l3.collapse}), json!(COLLAPSE_TOL), l3.collapse < COLLAPSE_TOL, true);

    let small = basis(modes, l.n_max.min(8))?;
    let rec = reconstruction_residual(&gens.at(l.t_max)?, &small);
    b.check("generator-reconstruction", json!({"modes": modes, "n_max": small.n_max()}), json!({"max_entry": rec}), json!(RECONSTRUCTION_TOL), rec < RECONSTRUCTION_TOL, true);
    Ok(())
}

pub fn run_lemma_battery(cfg: &LoadedConfig) -> Result<Bundle> {
    let c = &cfg.config;
    let l = c.lemmas.as_ref().ok_or_else(|| Error::Config("missing [lemmas] table".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(l.seed);
    let mut b = Bundle::new(&cfg.hash, "lemmas.json");
    fock_algebra(&mut b, c.grid.sites, l.random_samples, &mut rng)?;
    product_constant(&mut b)?;
    fluctuations(&mut b, cfg, &mut rng)?;
    Ok(b)
}
