//! Product states versus coherent states: the constant `d_N` and the
//! low-particle content of `W*(sqrt(N) phi)` applied to `phi^{(x)N}`.

use std::sync::Arc;

use super::basis::FockBasis;
use super::ops::{product_state, project_sector, weyl_apply};
use super::state::{FockState, ModeFunction};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// `d_N = sqrt(N!) / (e^{-N/2} N^{N/2})`, evaluated in log space.
pub fn d_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("d_N needs N >= 1".into()));
    }
    let nf = n as f64;
    Ok((0.5 * ln_factorial(n) + 0.5 * nf - 0.5 * nf * nf.ln()).exp())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Result of the coherent/product comparison for one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentProductReport {
    pub particles: usize,
    /// `||(N+1)^{-1/2} W*(sqrt(N) phi) phi^{(x)N}||`
    pub value: f64,
    pub d_n: f64,
    /// `value * d_N`, bounded uniformly in `N`.
    pub scaled: f64,
    /// `|<Omega, W* phi^{(x)N}>| * d_N`, equal to 1.
    pub vacuum_overlap_scaled: f64,
    /// `||P_1 W* phi^{(x)N}||`, equal to 0.
    pub one_particle_mass: f64,
    pub leak: f64,
}

/// Single-mode evaluation: `a*(phi)` and `W(c phi)` leave the span of the
/// `phi` mode invariant, so the whole computation lives in one mode with
/// `n_max = 4N + 20`.
pub fn coherent_minus_product_norm(phi: &ModeFunction, n: usize) -> Result<CoherentProductReport> {
    if (phi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("phi must be normalized, ||phi|| = {}", phi.norm())));
    }
    let basis = Arc::new(FockBasis::new(1, 4 * n + 20)?);
    single_mode_report(&basis, n)
}

fn single_mode_report(basis: &Arc<FockBasis>, n: usize) -> Result<CoherentProductReport> {
    let e = ModeFunction::basis(1, 0);
    let prod = product_state(basis, &e, n)?;
    report_from(&e, &prod, n)
}

/// Same quantity on the full `modes`-mode space, for cross-checking the
/// single-mode reduction. Needs `n_max >= N + 6 sqrt(N) + 10`.
pub fn coherent_minus_product_norm_direct(
    basis: &Arc<FockBasis>,
    phi: &ModeFunction,
    n: usize,
) -> Result<CoherentProductReport> {
    let prod = product_state(basis, phi, n)?;
    report_from(phi, &prod, n)
}

fn report_from(phi: &ModeFunction, prod: &FockState, n: usize) -> Result<CoherentProductReport> {
    let shift = phi.scaled(C64::new(-(n as f64).sqrt(), 0.0));
    let out = weyl_apply(&shift, prod)?;
    let value = out.number_power(-0.5).norm();
    let d = d_n(n)?;
    let vac = out.amplitudes()[0].norm();
    let one = project_sector(1, &out)?.norm();
    Ok(CoherentProductReport {
        particles: n,
        value,
        d_n: d,
        scaled: value * d,
        vacuum_overlap_scaled: vac * d,
        one_particle_mass: one,
        leak: out.leaked,
    })
}

/// `d_N P_N W(sqrt(N) phi) Omega`, which reproduces the normalized product state.
pub fn projected_coherent(basis: &Arc<FockBasis>, phi: &ModeFunction, n: usize) -> Result<FockState> {
    let f = phi.scaled(C64::new((n as f64).sqrt(), 0.0));
    let coh = weyl_apply(&f, &FockState::vacuum(basis))?;
    Ok(project_sector(n, &coh)?.scaled(C64::new(d_n(n)?, 0.0)))
}
