//! Periodic one-dimensional lattice, the finite-difference kinetic operator,
//! translation-invariant pair potentials and their magnitude cutoff.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Periodic ring of `sites` points with spacing `spacing`.
///
/// `h0` is the three-point discrete Laplacian with periodic wraparound:
/// `2/dx^2` on the diagonal and `-1/dx^2` on each neighbour bond. For two
/// sites both bonds connect the same pair, so the off-diagonal entry is
/// `-2/dx^2`.
#[derive(Debug, Clone)]
pub struct LatticeGrid {
    sites: usize,
    spacing: f64,
    h0: DMatrix<f64>,
}

pub fn build_grid(sites: usize, spacing: f64) -> Result<LatticeGrid> {
    LatticeGrid::new(sites, spacing)
}

impl LatticeGrid {
    pub fn new(sites: usize, spacing: f64) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 sites, got {sites}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        let inv = 1.0 / (spacing * spacing);
        let mut h0 = DMatrix::zeros(sites, sites);
        for i in 0..sites {
            let j = (i + 1) % sites;
            h0[(i, i)] += inv;
            h0[(j, j)] += inv;
            h0[(i, j)] -= inv;
            h0[(j, i)] -= inv;
        }
        Ok(Self { sites, spacing, h0 })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }

    /// Number of bonds separating `i` and `j` along the shorter arc.
    pub fn ring_steps(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j) % self.sites;
        d.min(self.sites - d)
    }

    pub fn ring_distance(&self, i: usize, j: usize) -> f64 {
        self.spacing * self.ring_steps(i, j) as f64
    }

    /// Largest ring step that occurs on this grid.
    pub fn max_steps(&self) -> usize {
        self.sites / 2
    }

    /// Exact spectral norm of `h0` (its largest eigenvalue).
    pub fn kinetic_norm(&self) -> f64 {
        // circulant: eigenvalues 2(1 - cos(2 pi k / M)) / dx^2
        let m = self.sites as f64;
        (0..self.sites)
            .map(|k| 2.0 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / m).cos()))
            .fold(0.0, f64::max)
            / (self.spacing * self.spacing)
    }

    /// Signed displacement from `center` folded into `[-L/2, L/2)`.
    pub fn signed_offset(&self, site: usize, center: f64) -> f64 {
        let l = self.sites as f64;
        let raw = site as f64 - center;
        let folded = (raw + l / 2.0).rem_euclid(l) - l / 2.0;
        folded * self.spacing
    }
}

/// Profile family of a two-body potential that depends only on ring distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PotentialFamily {
    /// `v0 / sqrt(d^2 + a^2)`
    SoftCoulomb { v0: f64, a: f64 },
    /// `v0 * exp(-d^2 / (2 sigma^2))`
    Gaussian { v0: f64, sigma: f64 },
    Zero,
    /// Explicit values per ring step `0..=M/2`.
    Table { values: Vec<f64> },
}

impl PotentialFamily {
    pub fn tag(&self) -> String {
        match self {
            Self::SoftCoulomb { v0, a } => format!("soft-coulomb(v0={v0},a={a})"),
            Self::Gaussian { v0, sigma } => format!("gaussian(v0={v0},sigma={sigma})"),
            Self::Zero => "zero".to_string(),
            Self::Table { .. } => "table".to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match *self {
            Self::SoftCoulomb { v0, a } if !v0.is_finite() || !(a > 0.0) => {
                bad("soft-coulomb needs finite v0 and a > 0")
            }
            Self::Gaussian { v0, sigma } if !v0.is_finite() || !(sigma > 0.0) => {
                bad("gaussian needs finite v0 and sigma > 0")
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, distance: f64) -> f64 {
        match *self {
            Self::SoftCoulomb { v0, a } => v0 / (distance * distance + a * a).sqrt(),
            Self::Gaussian { v0, sigma } => v0 * (-distance * distance / (2.0 * sigma * sigma)).exp(),
            Self::Zero | Self::Table { .. } => 0.0,
        }
    }
}

/// Potential sampled on the ring: `values[k] = V(k * dx)` for `k = 0..=M/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    values: Vec<f64>,
    /// Cutoff `alpha` of the last regularization, if any.
    cutoff: Option<f64>,
}

impl PotentialSpec {
    pub fn on_grid(family: PotentialFamily, grid: &LatticeGrid) -> Result<Self> {
        family.validate()?;
        let values = match &family {
            PotentialFamily::Table { values } => {
                if values.len() != grid.max_steps() + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "table has {} entries, grid needs {}",
                        values.len(),
                        grid.max_steps() + 1
                    )));
                }
                values.clone()
            }
            f => (0..=grid.max_steps()).map(|k| f.eval(k as f64 * grid.spacing())).collect(),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential has non-finite values".into()));
        }
        Ok(Self { family, values, cutoff: None })
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            family: PotentialFamily::Table { values: values.clone() },
            values,
            cutoff: None,
        }
    }

    pub fn zero(grid: &LatticeGrid) -> Self {
        Self { family: PotentialFamily::Zero, values: vec![0.0; grid.max_steps() + 1], cutoff: None }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn at_steps(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn tag(&self) -> String {
        match self.cutoff {
            Some(a) => format!("{}|alpha={a}", self.family.tag()),
            None => self.family.tag(),
        }
    }

    fn check_grid(&self, grid: &LatticeGrid) -> Result<()> {
        if self.values.len() != grid.max_steps() + 1 {
            return Err(Error::ModeMismatch { expected: grid.max_steps() + 1, found: self.values.len() });
        }
        Ok(())
    }

    /// `V(dist(i, j))` as an `M x M` matrix.
    pub fn pair_matrix(&self, grid: &LatticeGrid) -> Result<DMatrix<f64>> {
        self.check_grid(grid)?;
        let m = grid.sites();
        Ok(DMatrix::from_fn(m, m, |i, j| self.values[grid.ring_steps(i, j)]))
    }

    /// Ring convolution `(V * rho)(i) = sum_j V(dist(i, j)) rho(j)`.
    pub fn convolve(&self, grid: &LatticeGrid, rho: &[f64]) -> Vec<f64> {
        let m = grid.sites();
        (0..m)
            .map(|i| (0..m).map(|j| self.values[grid.ring_steps(i, j)] * rho[j]).sum())
            .collect()
    }
}

/// Magnitude cutoff `sgn(V) * min(|V|, 1/alpha)` applied pointwise.
pub fn regularize(p: &PotentialSpec, alpha: f64) -> Result<PotentialSpec> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let cap = 1.0 / alpha;
    let values = p.values.iter().map(|&v| v.signum() * v.abs().min(cap)).map(|v| if v == 0.0 { 0.0 } else { v }).collect();
    // a second cutoff keeps the tighter cap, i.e. the larger alpha
    let cutoff = Some(p.cutoff.map_or(alpha, |old| old.max(alpha)));
    Ok(PotentialSpec { family: p.family.clone(), values, cutoff })
}

/// Smallest `D` with `diag(V(dist(0, .)))^2 <= D (I + h0)`, found by bisection
/// on the positive-semidefiniteness of `D (I + h0) - diag(V^2)`.
///
/// Translation invariance makes the choice of the reference site irrelevant.
/// The result is feasible and within a relative `1e-6` of the optimum.
pub fn certify_d(p: &PotentialSpec, grid: &LatticeGrid) -> Result<f64> {
    p.check_grid(grid)?;
    let m = grid.sites();
    let v2: Vec<f64> = (0..m).map(|j| p.values[grid.ring_steps(0, j)].powi(2)).collect();
    let vmax2 = v2.iter().cloned().fold(0.0, f64::max);
    if vmax2 == 0.0 {
        return Ok(0.0);
    }
    let b = DMatrix::<f64>::identity(m, m) + grid.h0();
    let feasible = |d: f64| -> Result<bool> {
        let mut a = &b * d;
        for (j, w) in v2.iter().enumerate() {
            a[(j, j)] -= w;
        }
        let min = linalg::eigvalsh_real(&a)?.into_iter().fold(f64::INFINITY, f64::min);
        Ok(min >= -1e-13 * d.max(1.0))
    };
    // (I + h0) has spectrum in [1, 1 + ||h0||]
    let mut lo = vmax2 / (1.0 + grid.kinetic_norm());
    let mut hi = vmax2;
    if feasible(lo)? {
        return Ok(lo);
    }
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `max lambda` of `A x = lambda B x` through a Cholesky factor of `B`.
    fn generalized_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let l = b.clone().cholesky().unwrap().l();
        let linv = l.try_inverse().unwrap();
        let c = &linv * a * linv.transpose();
        c.symmetric_eigen().eigenvalues.max()
    }

    #[test]
    fn two_site_stencil_double_counts_bond() {
        let g = build_grid(2, 1.0).unwrap();
        assert_eq!(g.h0(), &DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
    }

    #[test]
    fn four_site_spectrum() {
        let g = build_grid(4, 1.0).unwrap();
        let mut ev: Vec<f64> = g.h0().clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // 2 (1 - cos(2 pi k / 4)), k = 0..3
        let expect = [0.0, 2.0, 2.0, 4.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((g.kinetic_norm() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_in_kernel() {
        let g = build_grid(3, 0.5).unwrap();
        let ones = nalgebra::DVector::from_element(3, 1.0);
        assert!((g.h0() * ones).amax() < 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(1, 1.0).is_err());
        assert!(build_grid(4, 0.0).is_err());
        assert!(build_grid(4, -1.0).is_err());
    }

    #[test]
    fn regularize_clips_with_sign() {
        let p = PotentialSpec::from_values(vec![3.0, -0.5, 10.0]);
        let r = regularize(&p, 0.5).unwrap();
        assert_eq!(r.values(), &[2.0, -0.5, 2.0]);
        assert_eq!(r.cutoff(), Some(0.5));
        assert!(regularize(&p, 0.0).is_err());
    }

    #[test]
    fn regularize_above_range_is_identity() {
        let p = PotentialSpec::from_values(vec![3.0, -0.5, 10.0, 1e8]);
        let r = regularize(&p, 1e-9).unwrap();
        assert_eq!(r.values(), p.values());
    }

    #[test]
    fn soft_coulomb_cutoff_on_grid() {
        let g = build_grid(6, 1.0).unwrap();
        let p = PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0: 5.0, a: 0.1 }, &g).unwrap();
        let raw: Vec<f64> = (0..=3).map(|k| 5.0 / ((k * k) as f64 + 0.01).sqrt()).collect();
        for (a, b) in p.values().iter().zip(&raw) {
            assert!((a - b).abs() < 1e-14);
        }
        let r = regularize(&p, 1.0).unwrap();
        assert_eq!(r.at_steps(0), 1.0);
        for k in 1..=3 {
            let expect = if raw[k] < 1.0 { raw[k] } else { 1.0 };
            assert_eq!(r.at_steps(k), expect);
        }
        // a weak profile where V(1) < 1 keeps every d >= 1 untouched
        let weak = PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0: 0.9, a: 0.1 }, &g).unwrap();
        let rw = regularize(&weak, 1.0).unwrap();
        assert_eq!(rw.at_steps(0), 1.0);
        assert_eq!(&rw.values()[1..], &weak.values()[1..]);
    }

    #[test]
    fn certify_zero_and_constant() {
        let g = build_grid(5, 1.0).unwrap();
        assert_eq!(certify_d(&PotentialSpec::zero(&g), &g).unwrap(), 0.0);
        let c = PotentialSpec::from_values(vec![1.7; 3]);
        let d = certify_d(&c, &g).unwrap();
        assert!((d - 1.7f64.powi(2)).abs() <= 0.01 * 1.7f64.powi(2));
    }

    #[test]
    fn certify_matches_generalized_eigensolve() {
        let g = build_grid(8, 1.0).unwrap();
        let p = PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0: 5.0, a: 0.5 }, &g).unwrap();
        let d = certify_d(&p, &g).unwrap();
        let a = DMatrix::from_fn(8, 8, |i, j| if i == j { p.at_steps(g.ring_steps(0, j)).powi(2) } else { 0.0 });
        let b = DMatrix::<f64>::identity(8, 8) + g.h0();
        let oracle = generalized_max(&a, &b);
        assert!(d >= oracle * (1.0 - 1e-9));
        assert!((d - oracle).abs() <= 0.01 * oracle, "bisection {d} vs oracle {oracle}");
    }

    proptest! {
        #[test]
        fn ring_distance_is_a_metric(m in 2usize..12, i in 0usize..12, j in 0usize..12, k in 0usize..12) {
            let g = build_grid(m, 0.7).unwrap();
            let (i, j, k) = (i % m, j % m, k % m);
            prop_assert_eq!(g.ring_steps(i, j), g.ring_steps(j, i));
            prop_assert!(g.ring_steps(i, k) <= g.ring_steps(i, j) + g.ring_steps(j, k));
            prop_assert!(g.ring_steps(i, j) <= g.max_steps());
        }

        #[test]
        fn laplacian_psd_with_zero_row_sums(m in 2usize..10, dx in 0.2f64..3.0) {
            let g = build_grid(m, dx).unwrap();
            let ev = g.h0().clone().symmetric_eigen().eigenvalues;
            prop_assert!(ev.min() > -1e-12);
            for i in 0..m {
                prop_assert!(g.h0().row(i).sum().abs() < 1e-12);
            }
        }

        #[test]
        fn regularize_properties(vals in proptest::collection::vec(-20.0f64..20.0, 1..6), a1 in 0.01f64..2.0, a2 in 0.01f64..2.0) {
            let p = PotentialSpec::from_values(vals.clone());
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let r = regularize(&p, lo).unwrap();
            let rr = regularize(&r, lo).unwrap();
            prop_assert_eq!(r.values(), rr.values());
            let r_hi = regularize(&p, hi).unwrap();
            for ((v, a), b) in vals.iter().zip(r.values()).zip(r_hi.values()) {
                prop_assert!(a.abs() <= 1.0 / lo + 1e-12);
                prop_assert!(a.abs() >= b.abs());
                if *v != 0.0 { prop_assert_eq!(a.signum(), v.signum()); }
                // |V - V~| <= alpha V^2
                prop_assert!((v - a).abs() <= lo * v * v + 1e-12);
            }
        }

        #[test]
        fn certified_d_bounds_and_inheritance(v0 in 0.1f64..6.0, a in 0.05f64..2.0, m in 3usize..9, alpha in 0.05f64..2.0) {
            let g = build_grid(m, 1.0).unwrap();
            let p = PotentialSpec::on_grid(PotentialFamily::SoftCoulomb { v0, a }, &g).unwrap();
            let d = certify_d(&p, &g).unwrap();
            let vmax2 = p.values().iter().map(|v| v * v).fold(0.0, f64::max);
            prop_assert!(d <= vmax2 * (1.0 + 1e-12));
            prop_assert!(d >= vmax2 / (1.0 + g.kinetic_norm()) * (1.0 - 1e-12));
            // the regularized profile obeys the same inequality with the same D
            let r = regularize(&p, alpha).unwrap();
            let mut x = (DMatrix::<f64>::identity(m, m) + g.h0()) * d;
            for j in 0..m { x[(j, j)] -= r.at_steps(g.ring_steps(0, j)).powi(2); }
            prop_assert!(x.symmetric_eigen().eigenvalues.min() > -1e-9);
        }
    }
}
