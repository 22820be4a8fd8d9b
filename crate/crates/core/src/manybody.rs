//! Fixed particle-number dynamics: assembly of the mean-field Hamiltonian,
//! exact propagation by diagonalization, reduced densities and trace norms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{sector_dim, ModeFunction, SectorIndex};
use crate::lattice::{LatticeGrid, PotentialSpec};
use crate::linalg::{self, cdot, cnorm_sq, RealEigen, C64, ZERO};

pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Occupation vectors over `modes` modes with exactly `particles` particles.
#[derive(Debug)]
pub struct SectorBasis {
    index: SectorIndex,
    occ: Vec<u16>,
}

impl SectorBasis {
    pub fn new(modes: usize, particles: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("sector basis needs at least one mode".into()));
        }
        let index = SectorIndex::new(modes, particles);
        let occ = index.enumerate().concat();
        Ok(Self { index, occ })
    }

    /// Like [`new`](Self::new) but refuses dimensions above `cap`.
    pub fn with_cap(modes: usize, particles: usize, cap: usize) -> Result<Self> {
        let dim = sector_dim(modes, particles);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap, modes, particles, suggestion: suggest(modes, particles, cap) });
        }
        Self::new(modes, particles)
    }

    pub fn modes(&self) -> usize {
        self.index.modes
    }

    pub fn particles(&self) -> usize {
        self.index.total
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.modes()
    }

    pub fn occupation(&self, k: usize) -> &[u16] {
        let m = self.modes();
        &self.occ[k * m..(k + 1) * m]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        let n: usize = occ.iter().map(|&x| x as usize).sum();
        (occ.len() == self.modes() && n == self.particles()).then(|| self.index.rank(occ))
    }
}

fn suggest(modes: usize, particles: usize, cap: usize) -> String {
    let n = (0..particles).rev().find(|&n| sector_dim(modes, n) <= cap).unwrap_or(0);
    let m = (1..modes).rev().find(|&m| sector_dim(m, particles) <= cap).unwrap_or(1);
    format!("N <= {n} at M = {modes}, or M <= {m} at N = {particles}")
}

/// Normalized state in a fixed-`N` sector.
#[derive(Debug, Clone)]
pub struct SectorState {
    basis: Arc<SectorBasis>,
    amps: Vec<C64>,
}

impl SectorState {
    pub fn from_amplitudes(basis: &Arc<SectorBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for a sector of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis: Arc::clone(basis), amps })
    }

    /// `phi^{(x)N}`: amplitude `sqrt(N!/prod n_i!) prod phi_i^{n_i}` on `|n>`.
    pub fn product(basis: &Arc<SectorBasis>, phi: &ModeFunction) -> Result<Self> {
        if phi.len() != basis.modes() {
            return Err(Error::ModeMismatch { expected: basis.modes(), found: phi.len() });
        }
        let ln_fact = |n: usize| (2..=n).map(|k| (k as f64).ln()).sum::<f64>();
        let ln_n = ln_fact(basis.particles());
        let amps = (0..basis.dim())
            .map(|k| {
                let occ = basis.occupation(k);
                let ln_multi = ln_n - occ.iter().map(|&n| ln_fact(n as usize)).sum::<f64>();
                let mut amp = C64::new((0.5 * ln_multi).exp(), 0.0);
                for (i, &n) in occ.iter().enumerate() {
                    amp *= phi.as_slice()[i].powu(n as u32);
                }
                amp
            })
            .collect();
        Ok(Self { basis: Arc::clone(basis), amps })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        cnorm_sq(&self.amps).sqrt()
    }

    pub fn inner(&self, other: &SectorState) -> Result<C64> {
        self.check_same(other)?;
        Ok(cdot(&self.amps, &other.amps))
    }

    pub fn distance(&self, other: &SectorState) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt())
    }

    fn check_same(&self, other: &SectorState) -> Result<()> {
        if !Arc::ptr_eq(&self.basis, &other.basis)
            && (self.basis.modes() != other.basis.modes() || self.basis.particles() != other.basis.particles())
        {
            return Err(Error::BasisMismatch {
                left: format!("sector(M={}, N={})", self.basis.modes(), self.basis.particles()),
                right: format!("sector(M={}, N={})", other.basis.modes(), other.basis.particles()),
            });
        }
        Ok(())
    }
}

/// `H_N = dGamma(h0) + 1/(2N) [sum_{i!=j} V_ij n_i n_j + sum_i V(0) n_i (n_i - 1)]`
/// as a dense real symmetric matrix over one sector.
#[derive(Debug, Clone)]
pub struct ManyBodyHamiltonian {
    basis: Arc<SectorBasis>,
    matrix: DMatrix<f64>,
    coupling: f64,
}

pub fn assemble(particles: usize, grid: &LatticeGrid, potential: &PotentialSpec) -> Result<ManyBodyHamiltonian> {
    assemble_capped(particles, grid, potential, DEFAULT_DIMENSION_CAP)
}

pub fn assemble_capped(
    particles: usize,
    grid: &LatticeGrid,
    potential: &PotentialSpec,
    cap: usize,
) -> Result<ManyBodyHamiltonian> {
    if particles == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let basis = Arc::new(SectorBasis::with_cap(grid.sites(), particles, cap)?);
    assemble_on(&basis, grid, potential)
}

pub fn assemble_on(basis: &Arc<SectorBasis>, grid: &LatticeGrid, potential: &PotentialSpec) -> Result<ManyBodyHamiltonian> {
    let m = grid.sites();
    if basis.modes() != m {
        return Err(Error::ModeMismatch { expected: m, found: basis.modes() });
    }
    let v = potential.pair_matrix(grid)?;
    let h0 = grid.h0();
    let lambda = 1.0 / basis.particles() as f64;
    let dim = basis.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut scratch = vec![0u16; m];
    for k in 0..dim {
        let occ = basis.occupation(k);
        let mut diag = 0.0;
        let mut inter = 0.0;
        for i in 0..m {
            let ni = occ[i] as f64;
            diag += h0[(i, i)] * ni;
            inter += v[(i, i)] * ni * (ni - 1.0);
            for j in 0..m {
                if j != i {
                    inter += v[(i, j)] * ni * occ[j] as f64;
                }
            }
        }
        h[(k, k)] = diag + 0.5 * lambda * inter;

        // hopping a*_i a_j
        for j in 0..m {
            if occ[j] == 0 {
                continue;
            }
            for i in 0..m {
                let hij = h0[(i, j)];
                if i == j || hij == 0.0 {
                    continue;
                }
                scratch.copy_from_slice(occ);
                scratch[j] -= 1;
                scratch[i] += 1;
                let l = basis.index.rank(&scratch);
                h[(l, k)] += hij * ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt();
            }
        }
    }
    Ok(ManyBodyHamiltonian { basis: Arc::clone(basis), matrix: h, coupling: lambda })
}

impl ManyBodyHamiltonian {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Mean-field coupling `1/N`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn apply(&self, psi: &SectorState) -> SectorState {
        let (re, im) = split(&psi.amps);
        let out = join(&(&self.matrix * re), &(&self.matrix * im));
        SectorState { basis: Arc::clone(&self.basis), amps: out }
    }

    pub fn energy(&self, psi: &SectorState) -> f64 {
        cdot(&psi.amps, &self.apply(psi).amps).re
    }

    pub fn propagator(&self) -> Result<SectorPropagator> {
        Ok(SectorPropagator { basis: Arc::clone(&self.basis), eigen: linalg::eigh_real(&self.matrix)? })
    }
}

fn split(v: &[C64]) -> (DVector<f64>, DVector<f64>) {
    (DVector::from_iterator(v.len(), v.iter().map(|z| z.re)), DVector::from_iterator(v.len(), v.iter().map(|z| z.im)))
}

fn join(re: &DVector<f64>, im: &DVector<f64>) -> Vec<C64> {
    re.iter().zip(im.iter()).map(|(&a, &b)| C64::new(a, b)).collect()
}

/// `e^{-iHt}` through a one-time eigendecomposition.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    basis: Arc<SectorBasis>,
    eigen: RealEigen,
}

impl SectorPropagator {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.values
    }

    pub fn propagate(&self, psi: &SectorState, t: f64) -> Result<SectorState> {
        if psi.basis.dim() != self.basis.dim() {
            return Err(Error::BasisMismatch {
                left: format!("sector of dimension {}", self.basis.dim()),
                right: format!("sector of dimension {}", psi.basis.dim()),
            });
        }
        if t == 0.0 {
            return Ok(SectorState { basis: Arc::clone(&self.basis), amps: psi.amps.clone() });
        }
        let v = &self.eigen.vectors;
        let (re, im) = split(&psi.amps);
        let cr = v.tr_mul(&re);
        let ci = v.tr_mul(&im);
        let mut pr = DVector::zeros(cr.len());
        let mut pi = DVector::zeros(cr.len());
        for (k, e) in self.eigen.values.iter().enumerate() {
            let (s, c) = (e * t).sin_cos();
            // (cr + i ci) * (c - i s)
            pr[k] = cr[k] * c + ci[k] * s;
            pi[k] = ci[k] * c - cr[k] * s;
        }
        Ok(SectorState { basis: Arc::clone(&self.basis), amps: join(&(v * pr), &(v * pi)) })
    }
}

/// `e^{-iHt} psi`; diagonalizes on every call. Reuse a [`SectorPropagator`] for many times.
pub fn propagate(h: &ManyBodyHamiltonian, psi: &SectorState, t: f64) -> Result<SectorState> {
    h.propagator()?.propagate(psi, t)
}

/// Hermitian, trace-one `k`-particle density on `M^k` indices.
///
/// Order 1: `gamma(i, j) = <a*_j a_i> / N`.
/// Order 2: row `i*M + j`, column `k*M + l`, `gamma = <a*_k a*_l a_j a_i> / (N(N-1))`,
/// symmetric under `i <-> j` and `k <-> l`.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    pub order: usize,
    pub matrix: DMatrix<C64>,
    pub source_norm: f64,
}

impl ReducedDensity {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

pub fn reduce(psi: &SectorState, k: usize) -> Result<ReducedDensity> {
    let b = &psi.basis;
    let n = b.particles();
    if k == 0 || k > 2 || k > n {
        return Err(Error::Order { k, particles: n });
    }
    let m = b.modes();
    let amps = &psi.amps;
    let mut scratch = vec![0u16; m];
    let matrix = if k == 1 {
        let mut g = DMatrix::from_element(m, m, ZERO);
        for (src, &a) in amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let occ = b.occupation(src);
            for i in 0..m {
                if occ[i] == 0 {
                    continue;
                }
                for j in 0..m {
                    scratch.copy_from_slice(occ);
                    scratch[i] -= 1;
                    let ci = (occ[i] as f64).sqrt();
                    let cj = (scratch[j] as f64 + 1.0).sqrt();
                    scratch[j] += 1;
                    let dst = b.index.rank(&scratch);
                    g[(i, j)] += amps[dst].conj() * a * (ci * cj);
                }
            }
        }
        g / C64::new(n as f64, 0.0)
    } else {
        let mut g = DMatrix::from_element(m * m, m * m, ZERO);
        let mut low = vec![0u16; m];
        for (src, &a) in amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let occ = b.occupation(src);
            for i in 0..m {
                for j in 0..m {
                    // a_j a_i
                    low.copy_from_slice(occ);
                    if low[i] == 0 {
                        continue;
                    }
                    let c1 = (low[i] as f64).sqrt();
                    low[i] -= 1;
                    if low[j] == 0 {
                        continue;
                    }
                    let c2 = (low[j] as f64).sqrt();
                    low[j] -= 1;
                    for kk in 0..m {
                        for l in 0..m {
                            // a*_k a*_l
                            scratch.copy_from_slice(&low);
                            let c3 = (scratch[l] as f64 + 1.0).sqrt();
                            scratch[l] += 1;
                            let c4 = (scratch[kk] as f64 + 1.0).sqrt();
                            scratch[kk] += 1;
                            let dst = b.index.rank(&scratch);
                            g[(i * m + j, kk * m + l)] += amps[dst].conj() * a * (c1 * c2 * c3 * c4);
                        }
                    }
                }
            }
        }
        g / C64::new((n * (n - 1)) as f64, 0.0)
    };
    Ok(ReducedDensity { order: k, matrix, source_norm: psi.norm() })
}

/// `|phi><phi|^{(x)k}` in the same index convention as [`reduce`].
pub fn product_projector(phi: &ModeFunction, k: usize) -> DMatrix<C64> {
    let v = &phi.0;
    let p = v * v.adjoint();
    if k == 1 {
        p
    } else {
        p.kronecker(&p)
    }
}

/// `Tr|A - B|`, the sum of absolute eigenvalues of the difference (no factor 1/2).
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidParameter(format!("shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    for m in [a, b] {
        let residual = linalg::hermiticity_residual(m);
        if residual > 1e-10 {
            return Err(Error::NotHermitian { residual });
        }
    }
    linalg::trace_norm(&(a - b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalGap {
    pub order: usize,
    pub trace_distance: f64,
    /// `2 ||psi - psi~||`
    pub bound: f64,
    pub holds: bool,
}

/// `Tr|gamma^(k) - gamma~^(k)|` against the duality bound `2 ||psi - psi~||`.
pub fn marginal_gap(psi: &SectorState, psi_reg: &SectorState, k: usize) -> Result<MarginalGap> {
    let d = trace_distance(&reduce(psi, k)?.matrix, &reduce(psi_reg, k)?.matrix)?;
    let bound = 2.0 * psi.distance(psi_reg)?;
    Ok(MarginalGap { order: k, trace_distance: d, bound, holds: d <= bound + 1e-12 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationGap {
    pub particles: usize,
    pub alpha: f64,
    pub t: f64,
    /// `||psi_t - psi~_t||^2`
    pub sq_distance: f64,
    /// `sq_distance / (N alpha |t|)`, the empirical constant; zero at `t = 0`.
    pub constant: f64,
    pub marginals: Vec<MarginalGap>,
}

/// Propagates `phi^{(x)N}` under `H_N` and under the Hamiltonian with the
/// regularized potential, for every time in `times`.
pub fn regularization_gap(
    particles: usize,
    grid: &LatticeGrid,
    potential: &PotentialSpec,
    alpha: f64,
    phi0: &ModeFunction,
    times: &[f64],
) -> Result<Vec<RegularizationGap>> {
    let reg = crate::lattice::regularize(potential, alpha)?;
    let h = assemble(particles, grid, potential)?;
    let psi0 = SectorState::product(h.basis(), phi0)?;
    let identical = reg.values() == potential.values();
    let (u, u_reg) = if identical {
        let u = h.propagator()?;
        (u.clone(), u)
    } else {
        let h_reg = assemble_on(h.basis(), grid, &reg)?;
        (h.propagator()?, h_reg.propagator()?)
    };
    times
        .iter()
        .map(|&t| {
            let a = u.propagate(&psi0, t)?;
            let b = u_reg.propagate(&psi0, t)?;
            let sq = a.distance(&b)?.powi(2);
            let scale = particles as f64 * alpha * t.abs();
            let marginals = (1..=particles.min(2)).map(|k| marginal_gap(&a, &b, k)).collect::<Result<_>>()?;
            Ok(RegularizationGap {
                particles,
                alpha,
                t,
                sq_distance: sq,
                constant: if scale > 0.0 { sq / scale } else { 0.0 },
                marginals,
            })
        })
        .collect()
}
