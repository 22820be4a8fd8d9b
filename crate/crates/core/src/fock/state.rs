use std::sync::Arc;

use nalgebra::DVector;

use super::basis::FockBasis;
use crate::error::{Error, Result};
use crate::linalg::{cdot, cnorm_sq, C64, ONE, ZERO};

/// One-particle wave function on the lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction(pub DVector<C64>);

impl ModeFunction {
    pub fn new(values: Vec<C64>) -> Self {
        Self(DVector::from_vec(values))
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0))))
    }

    pub fn zeros(modes: usize) -> Self {
        Self(DVector::zeros(modes))
    }

    /// Unit vector on site `i`.
    pub fn basis(modes: usize, i: usize) -> Self {
        let mut v = DVector::zeros(modes);
        v[i] = ONE;
        Self(v)
    }

    pub fn uniform(modes: usize) -> Self {
        Self(DVector::from_element(modes, C64::new(1.0 / (modes as f64).sqrt(), 0.0)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &ModeFunction) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn normalized(&self) -> Self {
        Self(&self.0 / C64::new(self.norm(), 0.0))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &ModeFunction) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ModeFunction) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn density(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Amplitudes over a truncated [`FockBasis`].
///
/// `leaked` accumulates the squared norm that operations pushed above
/// `n_max` and therefore dropped.
#[derive(Debug, Clone)]
pub struct FockState {
    basis: Arc<FockBasis>,
    amps: Vec<C64>,
    pub leaked: f64,
}

impl FockState {
    pub fn zeros(basis: &Arc<FockBasis>) -> Self {
        Self { basis: Arc::clone(basis), amps: vec![ZERO; basis.dim()], leaked: 0.0 }
    }

    pub fn vacuum(basis: &Arc<FockBasis>) -> Self {
        let mut s = Self::zeros(basis);
        s.amps[0] = ONE;
        s
    }

    pub fn from_amplitudes(basis: &Arc<FockBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for a basis of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis: Arc::clone(basis), amps, leaked: 0.0 })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn with_amplitudes(&self, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), self.amps.len());
        Self { basis: Arc::clone(&self.basis), amps, leaked: self.leaked }
    }

    pub fn amplitude_of(&self, occ: &[u16]) -> C64 {
        self.basis.index_of(occ).map_or(ZERO, |k| self.amps[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        cnorm_sq(&self.amps)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn inner(&self, other: &FockState) -> Result<C64> {
        self.check_same(other)?;
        Ok(cdot(&self.amps, &other.amps))
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.with_amplitudes(self.amps.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &FockState) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.with_amplitudes(self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect());
        out.leaked += other.leaked;
        Ok(out)
    }

    pub fn sub(&self, other: &FockState) -> Result<Self> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn distance(&self, other: &FockState) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub(crate) fn check_same(&self, other: &FockState) -> Result<()> {
        if *self.basis != *other.basis {
            return Err(Error::BasisMismatch { left: self.basis.describe(), right: other.basis.describe() });
        }
        Ok(())
    }

    /// Squared norm carried by each sector `0..=n_max`.
    pub fn sector_masses(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.n_max() + 1];
        for (k, a) in self.amps.iter().enumerate() {
            out[self.basis.sector_of(k)] += a.norm_sqr();
        }
        out
    }

    /// Mass in the two highest sectors, an indicator of truncation adequacy.
    pub fn truncation_leak(&self) -> f64 {
        let m = self.sector_masses();
        let top = self.basis.n_max();
        m[top.saturating_sub(1)..=top].iter().sum()
    }

    /// Highest sector with any nonzero amplitude.
    pub fn top_sector(&self) -> usize {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(k, _)| self.basis.sector_of(k))
            .max()
            .unwrap_or(0)
    }

    /// Multiply sector `n` by `w(n)`.
    pub fn weighted_by_sector(&self, w: impl Fn(usize) -> f64) -> Self {
        let table: Vec<f64> = (0..=self.basis.n_max()).map(&w).collect();
        self.with_amplitudes(
            self.amps.iter().enumerate().map(|(k, a)| a * table[self.basis.sector_of(k)]).collect(),
        )
    }

    /// `(N + 1)^p psi`.
    pub fn number_power(&self, p: f64) -> Self {
        self.weighted_by_sector(|n| (n as f64 + 1.0).powf(p))
    }

    /// Mean and variance of the particle number.
    pub fn number_moments(&self) -> (f64, f64) {
        let masses = self.sector_masses();
        let total: f64 = masses.iter().sum();
        let mean = masses.iter().enumerate().map(|(n, m)| n as f64 * m).sum::<f64>() / total;
        let second = masses.iter().enumerate().map(|(n, m)| (n * n) as f64 * m).sum::<f64>() / total;
        (mean, second - mean * mean)
    }
}
