//! Fluctuation generators along a Hartree trajectory, the quadratic
//! (Bogoliubov) dynamics they generate, and measured operator bounds.
//!
//! Conventions, for `phi = phi~_t` and `V = V~`:
//!
//! ```text
//! h      = h0 + diag(V * |phi|^2) + K1,   K1_ij = V_ij phi_i conj(phi_j)
//! K2_ij  = V_ij phi_i phi_j
//! L2     = dGamma(h) + sum_ij (K2_ij a*_i a*_j + conj(K2_ij) a_i a_j)
//! L3     = N^{-1/2} sum_xy V_xy a*_x (a*_y phi_y + a_y conj(phi_y)) a_x
//! L4     = N^{-1}   sum_xy V_xy a*_x a*_y a_y a_x
//! ```
//!
//! The pairing term carries no factor 1/2. The Heisenberg fields
//! `A_j(t) = U2(t;0)* a_j U2(t;0) = sum_k U_jk a_k + V_jk a*_k` then obey
//! `U' = -i (h U + 2 K2 conj(V))`, `V' = -i (h V + 2 K2 conj(U))`, `(U, V)(0) = (I, 0)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState, ModeFunction};
use crate::hartree::HartreeTrajectory;
use crate::linalg::{self, cdot, C64, ONE, ZERO};

/// Default ceiling on the mass in the two highest sectors during a Fock-space flow.
pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-8;
/// The Bogoliubov integrator aborts when the CCR residual exceeds this.
pub const CCR_ABORT: f64 = 1e-6;
/// Dense eigensolves in the kinetic sandwich are limited to this dimension.
pub const SANDWICH_DIM_CAP: usize = 4000;

/// Generator data at one time.
#[derive(Debug, Clone)]
pub struct FluctuationGenerator {
    pub t: f64,
    pub particles: usize,
    pub phi: ModeFunction,
    pub potential: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    /// `V * |phi|^2`
    pub mean_field: Vec<f64>,
    pub exchange: DMatrix<C64>,
    /// One-body block `h`.
    pub one_body: DMatrix<C64>,
    /// Pairing block `K2`, symmetric.
    pub pairing: DMatrix<C64>,
}

impl FluctuationGenerator {
    pub fn from_state(t: f64, particles: usize, phi: ModeFunction, kinetic: &DMatrix<f64>, potential: &DMatrix<f64>) -> Self {
        let m = phi.len();
        let p = phi.as_slice();
        let rho = phi.density();
        let mean_field: Vec<f64> = (0..m).map(|i| (0..m).map(|j| potential[(i, j)] * rho[j]).sum()).collect();
        let exchange = DMatrix::from_fn(m, m, |i, j| p[i] * p[j].conj() * potential[(i, j)]);
        let mut one_body = linalg::to_complex(kinetic) + &exchange;
        for (i, u) in mean_field.iter().enumerate() {
            one_body[(i, i)] += C64::new(*u, 0.0);
        }
        let pairing = DMatrix::from_fn(m, m, |i, j| p[i] * p[j] * potential[(i, j)]);
        Self {
            t,
            particles,
            phi,
            potential: potential.clone(),
            kinetic: kinetic.clone(),
            mean_field,
            exchange,
            one_body,
            pairing,
        }
    }

    pub fn modes(&self) -> usize {
        self.phi.len()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.one_body)
    }

    pub fn pairing_asymmetry(&self) -> f64 {
        (&self.pairing - self.pairing.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l2(&self) -> FockPolynomial {
        let mut p = FockPolynomial::one_body(&self.one_body);
        p.extend(pairing_terms(&self.pairing));
        p
    }

    /// `L2 - K` with `K = dGamma(h0)`.
    pub fn l2_minus_kinetic(&self) -> FockPolynomial {
        let mut p = FockPolynomial::one_body(&(&self.one_body - linalg::to_complex(&self.kinetic)));
        p.extend(pairing_terms(&self.pairing));
        p
    }

    pub fn l3(&self) -> FockPolynomial {
        let m = self.modes();
        let s = 1.0 / (self.particles as f64).sqrt();
        let p = self.phi.as_slice();
        let mut out = FockPolynomial::default();
        for x in 0..m {
            for y in 0..m {
                let v = self.potential[(x, y)] * s;
                if v == 0.0 {
                    continue;
                }
                out.push(Monomial::new(p[y] * v, &[x, y], &[x]));
                out.push(Monomial::new(p[y].conj() * v, &[x], &[y, x]));
            }
        }
        out
    }

    pub fn l4(&self) -> FockPolynomial {
        quartic(&self.potential, 1.0 / self.particles as f64)
    }

    pub fn kinetic_operator(&self) -> FockPolynomial {
        FockPolynomial::one_body(&linalg::to_complex(&self.kinetic))
    }

    /// The full generator written term by term from its defining expression,
    /// independently of the `L2 / L3 / L4` split.
    pub fn full(&self) -> FockPolynomial {
        let m = self.modes();
        let p = self.phi.as_slice();
        let v = &self.potential;
        let n = self.particles as f64;
        let mut out = FockPolynomial::default();
        for x in 0..m {
            for y in 0..m {
                let h0 = self.kinetic[(x, y)];
                if h0 != 0.0 {
                    out.push(Monomial::new(C64::new(h0, 0.0), &[x], &[y]));
                }
                let w = v[(x, y)];
                if w == 0.0 {
                    continue;
                }
                // (V * |phi|^2)(x) a*_x a_x, spread over y
                out.push(Monomial::new(C64::new(w * p[y].norm_sqr(), 0.0), &[x], &[x]));
                out.push(Monomial::new(p[x] * p[y].conj() * w, &[x], &[y]));
                out.push(Monomial::new(p[x] * p[y] * w, &[x, y], &[]));
                out.push(Monomial::new((p[x] * p[y]).conj() * w, &[], &[x, y]));
                out.push(Monomial::new(p[y] * (w / n.sqrt()), &[x, y], &[x]));
                out.push(Monomial::new(p[y].conj() * (w / n.sqrt()), &[x], &[y, x]));
                out.push(Monomial::new(C64::new(w / n, 0.0), &[x, y], &[y, x]));
            }
        }
        out
    }
}

fn pairing_terms(k: &DMatrix<C64>) -> Vec<Monomial> {
    let m = k.nrows();
    let mut out = Vec::with_capacity(2 * m * m);
    for i in 0..m {
        for j in 0..m {
            let c = k[(i, j)];
            if c != ZERO {
                out.push(Monomial::new(c, &[i, j], &[]));
                out.push(Monomial::new(c.conj(), &[], &[i, j]));
            }
        }
    }
    out
}

fn quartic(v: &DMatrix<f64>, scale: f64) -> FockPolynomial {
    let m = v.nrows();
    let mut out = FockPolynomial::default();
    for x in 0..m {
        for y in 0..m {
            let w = v[(x, y)] * scale;
            if w != 0.0 {
                out.push(Monomial::new(C64::new(w, 0.0), &[x, y], &[y, x]));
            }
        }
    }
    out
}

/// Normal-ordered product `coef * a*_{c1} a*_{c2} .. a_{d1} a_{d2} ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: C64,
    pub create: Vec<usize>,
    pub annihilate: Vec<usize>,
}

impl Monomial {
    pub fn new(coef: C64, create: &[usize], annihilate: &[usize]) -> Self {
        Self { coef, create: create.to_vec(), annihilate: annihilate.to_vec() }
    }

    /// Image of basis vector `k`: target index and matrix element, or `None`
    /// when the result vanishes or leaves the truncation.
    fn act(&self, basis: &FockBasis, k: usize, occ: &mut [u16]) -> Option<(usize, f64)> {
        occ.copy_from_slice(basis.occupation(k));
        let mut idx = k;
        let mut amp = 1.0;
        for &i in self.annihilate.iter().rev() {
            if occ[i] == 0 {
                return None;
            }
            amp *= (occ[i] as f64).sqrt();
            occ[i] -= 1;
            idx = basis.lowered(idx, i)?;
        }
        for &i in self.create.iter().rev() {
            idx = basis.raised(idx, i)?;
            occ[i] += 1;
            amp *= (occ[i] as f64).sqrt();
        }
        Some((idx, amp))
    }
}

/// Sum of normal-ordered monomials acting on a truncated Fock space.
/// Components pushed above `n_max` are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockPolynomial {
    pub terms: Vec<Monomial>,
}

impl FockPolynomial {
    pub fn one_body(j: &DMatrix<C64>) -> Self {
        let mut out = Self::default();
        for x in 0..j.nrows() {
            for y in 0..j.ncols() {
                if j[(x, y)] != ZERO {
                    out.push(Monomial::new(j[(x, y)], &[x], &[y]));
                }
            }
        }
        out
    }

    pub fn push(&mut self, m: Monomial) {
        self.terms.push(m);
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = Monomial>) {
        self.terms.extend(it);
    }

    pub fn plus(mut self, other: &FockPolynomial) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn apply(&self, s: &FockState) -> FockState {
        let b = s.basis();
        let mut out = vec![ZERO; b.dim()];
        self.apply_into(b, s.amplitudes(), &mut out);
        s.with_amplitudes(out)
    }

    fn apply_into(&self, b: &FockBasis, amps: &[C64], out: &mut [C64]) {
        let mut occ = vec![0u16; b.modes()];
        for (k, &a) in amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for term in &self.terms {
                if let Some((dst, m)) = term.act(b, k, &mut occ) {
                    out[dst] += term.coef * a * m;
                }
            }
        }
    }

    /// Sparse matrix as sorted, merged `(row, col, value)` triplets.
    pub fn triplets(&self, b: &FockBasis) -> Vec<(usize, usize, C64)> {
        let mut occ = vec![0u16; b.modes()];
        let mut raw = Vec::new();
        for k in 0..b.dim() {
            for term in &self.terms {
                if let Some((dst, m)) = term.act(b, k, &mut occ) {
                    raw.push((dst, k, term.coef * m));
                }
            }
        }
        raw.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged
    }

    pub fn dense(&self, b: &FockBasis) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(b.dim(), b.dim(), ZERO);
        for (r, c, v) in self.triplets(b) {
            m[(r, c)] += v;
        }
        m
    }
}

/// Applies sorted triplets to a state.
pub fn apply_triplets(t: &[(usize, usize, C64)], s: &FockState) -> FockState {
    let mut out = vec![ZERO; s.basis().dim()];
    for &(r, c, v) in t {
        out[r] += v * s.amplitudes()[c];
    }
    s.with_amplitudes(out)
}

/// Generators sampled along a (regularized) Hartree trajectory.
#[derive(Debug, Clone)]
pub struct GeneratorSeries {
    trajectory: Arc<HartreeTrajectory>,
    particles: usize,
    potential: DMatrix<f64>,
}

pub fn build_generators(traj: &HartreeTrajectory, particles: usize) -> Result<GeneratorSeries> {
    GeneratorSeries::new(Arc::new(traj.clone()), particles)
}

impl GeneratorSeries {
    pub fn new(trajectory: Arc<HartreeTrajectory>, particles: usize) -> Result<Self> {
        if particles == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let potential = trajectory.potential().pair_matrix(trajectory.grid())?;
        Ok(Self { trajectory, particles, potential })
    }

    pub fn with_particles(&self, particles: usize) -> Result<Self> {
        Self::new(Arc::clone(&self.trajectory), particles)
    }

    pub fn trajectory(&self) -> &HartreeTrajectory {
        &self.trajectory
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.trajectory.grid().sites()
    }

    pub fn dt(&self) -> f64 {
        self.trajectory.dt()
    }

    pub fn at(&self, t: f64) -> Result<FluctuationGenerator> {
        let phi = self.trajectory.phi_at(t)?;
        Ok(FluctuationGenerator::from_state(t, self.particles, phi, self.trajectory.grid().h0(), &self.potential))
    }

    /// Uniform step grid from `t0` to `t1` with spacing close to the trajectory step.
    fn grid(&self, t0: f64, t1: f64) -> (usize, f64) {
        let n = ((t1 - t0).abs() / self.dt().abs()).round().max(if t1 == t0 { 0.0 } else { 1.0 }) as usize;
        let h = if n == 0 { 0.0 } else { (t1 - t0) / n as f64 };
        (n, h)
    }
}

/// Heisenberg representation `a_j -> sum_k U_jk a_k + V_jk a*_k` of `U2(t;0)`.
#[derive(Debug, Clone)]
pub struct QuadraticPropagator {
    pub times: Vec<f64>,
    pub u: Vec<DMatrix<C64>>,
    pub v: Vec<DMatrix<C64>>,
}

impl QuadraticPropagator {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }

    /// `(||U U* - V V* - I||, ||U V^T - V U^T||)` maxima at sample `k`.
    pub fn ccr_residual(&self, k: usize) -> f64 {
        ccr_residual(&self.u[k], &self.v[k])
    }

    pub fn max_ccr_residual(&self) -> f64 {
        (0..self.len()).map(|k| self.ccr_residual(k)).fold(0.0, f64::max)
    }

    /// `U2* a(f) U2 = a(g) + a*(h)` with `g = U^dagger f`, `h = V^T conj(f)`.
    pub fn field_map(&self, k: usize, f: &ModeFunction) -> (ModeFunction, ModeFunction) {
        let g = self.u[k].adjoint() * &f.0;
        let h = self.v[k].transpose() * f.0.map(|z| z.conj());
        (ModeFunction(g), ModeFunction(h))
    }
}

fn ccr_residual(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let m = u.nrows();
    let a = u * u.adjoint() - v * v.adjoint() - DMatrix::<C64>::identity(m, m);
    let b = u * v.transpose() - v * u.transpose();
    a.iter().chain(b.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

/// RK4 integration of the Bogoliubov equations from 0 to `t`.
pub fn propagate_quadratic(gens: &GeneratorSeries, t: f64) -> Result<QuadraticPropagator> {
    let m = gens.modes();
    let (steps, h) = gens.grid(0.0, t);
    let mut u = DMatrix::<C64>::identity(m, m);
    let mut v = DMatrix::<C64>::zeros(m, m);
    let mut out = QuadraticPropagator { times: vec![0.0], u: vec![u.clone()], v: vec![v.clone()] };
    let rhs = |g: &FluctuationGenerator, u: &DMatrix<C64>, v: &DMatrix<C64>| {
        let two_k = &g.pairing * C64::new(2.0, 0.0);
        let mi = C64::new(0.0, -1.0);
        let du = (&g.one_body * u + &two_k * v.map(|z| z.conj())) * mi;
        let dv = (&g.one_body * v + &two_k * u.map(|z| z.conj())) * mi;
        (du, dv)
    };
    for s in 0..steps {
        let t0 = s as f64 * h;
        let g0 = gens.at(t0)?;
        let gm = gens.at(t0 + 0.5 * h)?;
        let g1 = gens.at(t0 + h)?;
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        let (k1u, k1v) = rhs(&g0, &u, &v);
        let (k2u, k2v) = rhs(&gm, &(&u + &k1u * half), &(&v + &k1v * half));
        let (k3u, k3v) = rhs(&gm, &(&u + &k2u * half), &(&v + &k2v * half));
        let (k4u, k4v) = rhs(&g1, &(&u + &k3u * hc), &(&v + &k3v * hc));
        let sixth = C64::new(h / 6.0, 0.0);
        u += (k1u + k2u * C64::new(2.0, 0.0) + k3u * C64::new(2.0, 0.0) + k4u) * sixth;
        v += (k1v + k2v * C64::new(2.0, 0.0) + k3v * C64::new(2.0, 0.0) + k4v) * sixth;
        let res = ccr_residual(&u, &v);
        if res > CCR_ABORT {
            return Err(Error::CcrDrift { residual: res, threshold: CCR_ABORT, t: t0 + h });
        }
        out.times.push(t0 + h);
        out.u.push(u.clone());
        out.v.push(v.clone());
    }
    Ok(out)
}

/// RK4 integration of `i d/dt psi = L2(t) psi` on the truncated space from
/// `t0` to `t1` (either direction). `observe` sees every grid state.
pub fn evolve_fock(
    gens: &GeneratorSeries,
    psi0: &FockState,
    t0: f64,
    t1: f64,
    leak_threshold: f64,
    mut observe: impl FnMut(f64, &FockState),
) -> Result<FockState> {
    if psi0.basis().modes() != gens.modes() {
        return Err(Error::ModeMismatch { expected: gens.modes(), found: psi0.basis().modes() });
    }
    let (steps, h) = gens.grid(t0, t1);
    let basis = Arc::clone(psi0.basis());
    let mut y: Vec<C64> = psi0.amplitudes().to_vec();
    let dim = y.len();
    let mut scratch = vec![ZERO; dim];
    observe(t0, psi0);
    let deriv = |l2: &FockPolynomial, y: &[C64], out: &mut Vec<C64>| {
        out.iter_mut().for_each(|z| *z = ZERO);
        l2.apply_into(&basis, y, out);
        out.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
    };
    let mut leak_max: f64 = 0.0;
    for s in 0..steps {
        let ta = t0 + s as f64 * h;
        let l0 = gens.at(ta)?.l2();
        let lm = gens.at(ta + 0.5 * h)?.l2();
        let l1 = gens.at(ta + h)?.l2();
        let mut k1 = vec![ZERO; dim];
        let mut k2 = vec![ZERO; dim];
        let mut k3 = vec![ZERO; dim];
        let mut k4 = vec![ZERO; dim];
        deriv(&l0, &y, &mut k1);
        for i in 0..dim {
            scratch[i] = y[i] + k1[i] * (0.5 * h);
        }
        deriv(&lm, &scratch, &mut k2);
        for i in 0..dim {
            scratch[i] = y[i] + k2[i] * (0.5 * h);
        }
        deriv(&lm, &scratch, &mut k3);
        for i in 0..dim {
            scratch[i] = y[i] + k3[i] * h;
        }
        deriv(&l1, &scratch, &mut k4);
        for i in 0..dim {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        let state = psi0.with_amplitudes(y.clone());
        let leak = state.truncation_leak();
        leak_max = leak_max.max(leak);
        if leak > leak_threshold {
            return Err(Error::Leak { leak, threshold: leak_threshold });
        }
        observe(ta + h, &state);
    }
    let mut out = psi0.with_amplitudes(y);
    out.leaked += leak_max;
    Ok(out)
}

/// `U2(t;0) psi0` on the truncated space.
pub fn propagate_quadratic_fock(gens: &GeneratorSeries, t: f64, psi0: &FockState) -> Result<FockState> {
    evolve_fock(gens, psi0, 0.0, t, DEFAULT_LEAK_THRESHOLD, |_, _| {})
}

/// Bogoliubov matrices against the direct Fock-space flow.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub t: f64,
    /// Largest `|<chi_t, a_j psi_t> - <chi, A_j psi>|` over low-sector basis pairs.
    pub max_deviation: f64,
    pub max_ccr_residual: f64,
    pub max_leak: f64,
}

/// Compares `<U2 chi, a_j U2 psi>` with `<chi, (U a + V a*)_j psi>` for every
/// pair of basis vectors in sectors `0..=low`.
pub fn oracle_field_map(gens: &GeneratorSeries, basis: &Arc<FockBasis>, t: f64, low: usize) -> Result<OracleReport> {
    let bog = propagate_quadratic(gens, t)?;
    let k = bog.last_index();
    let m = gens.modes();
    let low_dim = basis.sector_range(low).end;
    let evolved: Vec<FockState> = (0..low_dim)
        .map(|i| {
            let mut amps = vec![ZERO; basis.dim()];
            amps[i] = ONE;
            let s = FockState::from_amplitudes(basis, amps)?;
            propagate_quadratic_fock(gens, t, &s)
        })
        .collect::<Result<_>>()?;
    let max_leak = evolved.iter().map(|s| s.leaked).fold(0.0, f64::max);
    let mut dev: f64 = 0.0;
    for j in 0..m {
        let ej = ModeFunction::basis(m, j);
        let (g, h) = bog.field_map(k, &ej);
        // a_j = a(e_j) maps to a(g) + a*(h)
        for p in 0..low_dim {
            let lhs_state = crate::fock::apply_annihilate(&ej, &evolved[p])?;
            let mut amps = vec![ZERO; basis.dim()];
            amps[p] = ONE;
            let psi = FockState::from_amplitudes(basis, amps)?;
            let rhs_state = crate::fock::apply_annihilate(&g, &psi)?.add(&crate::fock::apply_create(&h, &psi)?)?;
            for c in 0..low_dim {
                let lhs = cdot(evolved[c].amplitudes(), lhs_state.amplitudes());
                let rhs = rhs_state.amplitudes()[c];
                dev = dev.max((lhs - rhs).norm());
            }
        }
    }
    Ok(OracleReport { t, max_deviation: dev, max_ccr_residual: bog.max_ccr_residual(), max_leak })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    pub t: f64,
    /// Relative mass of `U2* phi(f) U2 Omega` outside the one-particle sector.
    pub off_sector: f64,
    pub one_particle_norm: f64,
    pub leak: f64,
}

/// `U2(t;0)* phi(f) U2(t;0) Omega`: forward flow, field, backward flow.
pub fn check_sector_locality(gens: &GeneratorSeries, basis: &Arc<FockBasis>, f: &ModeFunction, t: f64) -> Result<LocalityReport> {
    let vac = FockState::vacuum(basis);
    let fwd = evolve_fock(gens, &vac, 0.0, t, DEFAULT_LEAK_THRESHOLD, |_, _| {})?;
    let kicked = crate::fock::field_phi(f, &fwd)?;
    let back = evolve_fock(gens, &kicked, t, 0.0, DEFAULT_LEAK_THRESHOLD, |_, _| {})?;
    let masses = back.sector_masses();
    let total: f64 = masses.iter().sum();
    let off = total - masses[1];
    Ok(LocalityReport {
        t,
        off_sector: off / total,
        one_particle_norm: masses[1].sqrt(),
        leak: fwd.leaked + kicked.leaked + back.leaked,
    })
}

/// Exponential envelope `C e^{K t}` fitted to the running maximum of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub c: f64,
    pub k: f64,
    pub r2: f64,
    /// Relative rise of the envelope, `(max |y| - |y0|) / |y0|`.
    pub growth: f64,
    /// `true` when the excursion is above ten times the numerical floor.
    pub resolved: bool,
    pub pass: bool,
}

pub fn fit_envelope(times: &[f64], values: &[f64], floor: f64) -> EnvelopeFit {
    let y0 = values[0].abs().max(f64::MIN_POSITIVE);
    let mut run = Vec::with_capacity(values.len());
    let mut best = f64::MIN_POSITIVE;
    for v in values {
        best = best.max(v.abs());
        run.push(best.ln());
    }
    let growth = (best - y0) / y0;
    let (k, intercept, r2) = if times.len() >= 2 { linalg::linear_fit(times, &run) } else { (0.0, run[0], 1.0) };
    let resolved = growth > 10.0 * floor;
    let pass = if resolved { r2 > 0.9 && k.is_finite() } else { growth <= 1e-8 };
    EnvelopeFit { c: intercept.exp(), k, r2, growth, resolved, pass }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub power: u32,
    pub times: Vec<f64>,
    /// `||(N+1)^j U2 psi|| / ||(N+1)^j psi||`
    pub ratios: Vec<f64>,
    pub fit: EnvelopeFit,
}

/// Growth of `(N+1)^j` moments along `U2(t;0) psi` for each `j` in `powers`,
/// sampled every `stride` steps.
pub fn check_number_growth(
    gens: &GeneratorSeries,
    psi: &FockState,
    powers: &[u32],
    t_max: f64,
    stride: usize,
    floor: f64,
) -> Result<Vec<GrowthReport>> {
    let base: Vec<f64> = powers.iter().map(|&j| psi.number_power(j as f64).norm()).collect();
    let mut times = Vec::new();
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); powers.len()];
    let mut step = 0usize;
    evolve_fock(gens, psi, 0.0, t_max, DEFAULT_LEAK_THRESHOLD, |t, s| {
        if step.is_multiple_of(stride.max(1)) {
            times.push(t);
            for (r, (&j, b)) in ratios.iter_mut().zip(powers.iter().zip(&base)) {
                r.push(s.number_power(j as f64).norm() / b);
            }
        }
        step += 1;
    })?;
    Ok(powers
        .iter()
        .zip(ratios)
        .map(|(&j, r)| {
            let fit = fit_envelope(&times, &r, floor);
            GrowthReport { power: j, times: times.clone(), ratios: r, fit }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub t: f64,
    /// Smallest `c` with `L2 - K >= -c (N+1)`.
    pub c_minus: f64,
    /// Smallest `c` with `L2 - K <= c (N+1)`.
    pub c_plus: f64,
    pub c: f64,
}

/// Generalized eigenvalues of `(L2(t) - K, N + 1)` on the truncated space.
pub fn check_kinetic_sandwich(gens: &GeneratorSeries, basis: &Arc<FockBasis>, t: f64) -> Result<SandwichReport> {
    sandwich_for(&gens.at(t)?, basis)
}

pub fn sandwich_for(g: &FluctuationGenerator, basis: &Arc<FockBasis>) -> Result<SandwichReport> {
    if basis.dim() > SANDWICH_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: basis.dim(),
            cap: SANDWICH_DIM_CAP,
            modes: basis.modes(),
            particles: basis.n_max(),
            suggestion: "a smaller n_max".into(),
        });
    }
    let x = g.l2_minus_kinetic().dense(basis);
    let w = DVector::from_fn(basis.dim(), |k, _| 1.0 / (basis.sector_of(k) as f64 + 1.0).sqrt());
    let scaled = DMatrix::from_fn(basis.dim(), basis.dim(), |i, j| x[(i, j)] * (w[i] * w[j]));
    let ev = linalg::eigvalsh(&scaled)?;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_minus = (-lo).max(0.0);
    let c_plus = hi.max(0.0);
    Ok(SandwichReport { t: g.t, c_minus, c_plus, c: c_minus.max(c_plus) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2ExpectationReport {
    pub times: Vec<f64>,
    /// `<psi_t, L2(t) psi_t>`
    pub expectations: Vec<f64>,
    /// `<psi, (L2(0) + N + 1) psi>`
    pub reference: f64,
    pub fit: EnvelopeFit,
}

pub fn check_l2_expectation(gens: &GeneratorSeries, psi: &FockState, t_max: f64, stride: usize, floor: f64) -> Result<L2ExpectationReport> {
    let g0 = gens.at(0.0)?;
    let l2_0 = g0.l2().apply(psi);
    let number = psi.weighted_by_sector(|n| n as f64 + 1.0);
    let reference = psi.inner(&l2_0.add(&number)?)?.re;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut err = None;
    let mut step = 0usize;
    evolve_fock(gens, psi, 0.0, t_max, DEFAULT_LEAK_THRESHOLD, |t, s| {
        if step.is_multiple_of(stride.max(1)) {
            match gens.at(t) {
                Ok(g) => {
                    let e = cdot(s.amplitudes(), g.l2().apply(s).amplitudes()).re;
                    times.push(t);
                    values.push(e);
                }
                Err(e) => err = Some(e),
            }
        }
        step += 1;
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let ratios: Vec<f64> = values.iter().map(|v| v.abs() / reference).collect();
    let fit = fit_envelope(&times, &ratios, floor);
    Ok(L2ExpectationReport { times, expectations: values, reference, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct L3Row {
    pub particles: usize,
    pub power: u32,
    /// `||(N+1)^j L3 psi||`
    pub lhs: f64,
    /// `||(N+1)^{j+3/2} psi||`
    pub rhs: f64,
    /// `sqrt(N) lhs / rhs`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L3Report {
    pub t: f64,
    pub rows: Vec<L3Row>,
    /// Largest relative spread of `scaled` across particle numbers at fixed `j`.
    pub collapse: f64,
}

pub fn check_l3_bound(gens: &GeneratorSeries, psi: &FockState, t: f64, particles: &[usize]) -> Result<L3Report> {
    let mut rows = Vec::new();
    for &n in particles {
        let g = gens.with_particles(n)?.at(t)?;
        let l3psi = g.l3().apply(psi);
        for j in [0u32, 1] {
            let lhs = l3psi.number_power(j as f64).norm();
            let rhs = psi.number_power(j as f64 + 1.5).norm();
            rows.push(L3Row { particles: n, power: j, lhs, rhs, scaled: (n as f64).sqrt() * lhs / rhs });
        }
    }
    let mut collapse: f64 = 0.0;
    for j in [0u32, 1] {
        let s: Vec<f64> = rows.iter().filter(|r| r.power == j).map(|r| r.scaled).collect();
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            collapse = collapse.max((hi - lo) / hi);
        }
    }
    Ok(L3Report { t, rows, collapse })
}

/// Largest entry of `L - (L2 + L3 + L4)` as sparse matrices on `basis`.
pub fn reconstruction_residual(g: &FluctuationGenerator, basis: &FockBasis) -> f64 {
    let full = g.full().dense(basis);
    let split = g.l2().plus(&g.l3()).plus(&g.l4()).dense(basis);
    linalg::max_abs_diff(&full, &split)
}

/// Mass of `psi` in odd sectors.
pub fn odd_sector_mass(psi: &FockState) -> f64 {
    psi.sector_masses().iter().skip(1).step_by(2).sum()
}
