//! Creation, annihilation, field, second-quantized and Weyl operators acting
//! on truncated Fock states.

use nalgebra::DMatrix;

use super::basis::FockBasis;
use super::state::{FockState, ModeFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};

/// Series terms below this relative norm end the Weyl expansions.
const SERIES_TOL: f64 = 1e-16;

fn check_modes(f: &ModeFunction, basis: &FockBasis) -> Result<()> {
    if f.len() != basis.modes() {
        return Err(Error::ModeMismatch { expected: basis.modes(), found: f.len() });
    }
    Ok(())
}

fn raw_annihilate(f: &ModeFunction, s: &FockState) -> Vec<C64> {
    let b = s.basis();
    let fc: Vec<C64> = f.as_slice().iter().map(|z| z.conj()).collect();
    let mut out = vec![ZERO; b.dim()];
    for (k, &amp) in s.amplitudes().iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let occ = b.occupation(k);
        for i in 0..b.modes() {
            if let Some(t) = b.lowered(k, i) {
                out[t] += fc[i] * (occ[i] as f64).sqrt() * amp;
            }
        }
    }
    out
}

fn raw_create(f: &ModeFunction, s: &FockState) -> Vec<C64> {
    let b = s.basis();
    let fv = f.as_slice();
    let mut out = vec![ZERO; b.dim()];
    for (k, &amp) in s.amplitudes().iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let occ = b.occupation(k);
        for i in 0..b.modes() {
            if let Some(t) = b.raised(k, i) {
                out[t] += fv[i] * ((occ[i] + 1) as f64).sqrt() * amp;
            }
        }
    }
    out
}

/// `a*(f) s`. Components pushed above `n_max` are dropped; their squared
/// norm `||f||^2 ||P_top s||^2 + ||a(f) P_top s||^2` is added to `leaked`.
pub fn apply_create(f: &ModeFunction, s: &FockState) -> Result<FockState> {
    let b = s.basis();
    check_modes(f, b)?;
    let top = s.basis().n_max();
    let top_part = project_sector(top, s)?;
    let lost = f.norm_sqr() * top_part.norm_sqr() + linalg::cnorm_sq(&raw_annihilate(f, &top_part));
    let mut out = s.with_amplitudes(raw_create(f, s));
    out.leaked += lost;
    Ok(out)
}

/// `a(f) s`, antilinear in `f`.
pub fn apply_annihilate(f: &ModeFunction, s: &FockState) -> Result<FockState> {
    check_modes(f, s.basis())?;
    Ok(s.with_amplitudes(raw_annihilate(f, s)))
}

/// `phi(f) = a*(f) + a(f)`.
pub fn field_phi(f: &ModeFunction, s: &FockState) -> Result<FockState> {
    let c = apply_create(f, s)?;
    let a = apply_annihilate(f, s)?;
    let mut out = c.add(&a)?;
    out.leaked = c.leaked;
    Ok(out)
}

/// `P_n s`.
pub fn project_sector(n: usize, s: &FockState) -> Result<FockState> {
    let b = s.basis();
    if n > b.n_max() {
        return Err(Error::SectorOutOfRange { n, n_max: b.n_max() });
    }
    let range = b.sector_range(n);
    let amps = s
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| if range.contains(&k) { a } else { ZERO })
        .collect();
    Ok(s.with_amplitudes(amps))
}

/// `a*(f)^n Omega / sqrt(n!)`; for unit `f` this is the normalized product state.
pub fn product_state(basis: &std::sync::Arc<FockBasis>, f: &ModeFunction, n: usize) -> Result<FockState> {
    check_modes(f, basis)?;
    if n > basis.n_max() {
        return Err(Error::SectorOutOfRange { n, n_max: basis.n_max() });
    }
    let mut s = FockState::vacuum(basis);
    for k in 1..=n {
        s = apply_create(f, &s)?.scaled(C64::new(1.0 / (k as f64).sqrt(), 0.0));
    }
    Ok(s)
}

/// Second quantization `dGamma(J) = sum_ij J_ij a*_i a_j`.
#[derive(Debug, Clone)]
pub struct SecondQuantized {
    j: DMatrix<C64>,
    hermitian: bool,
}

/// Lift of a Hermitian one-body matrix. Non-Hermitian input is rejected.
pub fn second_quantize(j: &DMatrix<C64>) -> Result<SecondQuantized> {
    let residual = linalg::hermiticity_residual(j);
    if residual > 1e-12 * (1.0 + j.camax()) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(SecondQuantized { j: j.clone(), hermitian: true })
}

/// Lift of an arbitrary one-body matrix; the result is flagged non-observable.
pub fn second_quantize_any(j: &DMatrix<C64>) -> SecondQuantized {
    let hermitian = linalg::hermiticity_residual(j) <= 1e-12 * (1.0 + j.camax());
    SecondQuantized { j: j.clone(), hermitian }
}

impl SecondQuantized {
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn one_body(&self) -> &DMatrix<C64> {
        &self.j
    }

    pub fn apply(&self, s: &FockState) -> Result<FockState> {
        let b = s.basis();
        if self.j.nrows() != b.modes() {
            return Err(Error::ModeMismatch { expected: b.modes(), found: self.j.nrows() });
        }
        let m = b.modes();
        let mut out = vec![ZERO; b.dim()];
        for (k, &amp) in s.amplitudes().iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let occ = b.occupation(k);
            for jm in 0..m {
                let Some(low) = b.lowered(k, jm) else { continue };
                let cj = (occ[jm] as f64).sqrt();
                let occ_low = b.occupation(low);
                for i in 0..m {
                    let coef = self.j[(i, jm)];
                    if coef == ZERO {
                        continue;
                    }
                    // same sector, never out of range
                    let t = b.raised(low, i).expect("number-conserving hop stays in range");
                    out[t] += coef * cj * ((occ_low[i] + 1) as f64).sqrt() * amp;
                }
            }
        }
        Ok(s.with_amplitudes(out))
    }
}

/// Minimum `n_max` for which [`weyl_apply`] certifies `W(f)`.
pub fn weyl_headroom(f: &ModeFunction) -> usize {
    let m = f.norm_sqr();
    (m + 6.0 * m.sqrt() + 10.0).ceil() as usize
}

/// `W(f) s = exp(a*(f) - a(f)) s`, evaluated through the normal-ordered
/// factorization `e^{-||f||^2/2} e^{a*(f)} e^{-a(f)}` with terminating
/// series. The truncated arithmetic reproduces `P_{<=n_max} W(f) s` exactly;
/// the dropped mass is recorded in `leaked`.
pub fn weyl_apply(f: &ModeFunction, s: &FockState) -> Result<FockState> {
    let b = s.basis();
    check_modes(f, b)?;
    let required = weyl_headroom(f);
    if b.n_max() < required {
        return Err(Error::Headroom { n_max: b.n_max(), required });
    }
    let scale = s.norm().max(f64::MIN_POSITIVE);

    // e^{-a(f)} s: lowering only, terminates after n_max + 1 terms
    let mut acc = s.amplitudes().to_vec();
    let mut term = s.clone();
    for k in 1..=b.n_max() {
        let next = raw_annihilate(f, &term);
        let next: Vec<C64> = next.into_iter().map(|z| -z / k as f64).collect();
        if linalg::cnorm_sq(&next).sqrt() < SERIES_TOL * scale {
            break;
        }
        for (a, t) in acc.iter_mut().zip(&next) {
            *a += t;
        }
        term = s.with_amplitudes(next);
    }

    // e^{a*(f)}: raising; everything above n_max is gone
    let lowered = s.with_amplitudes(acc);
    let mut acc = lowered.amplitudes().to_vec();
    let mut term = lowered;
    for k in 1..=b.n_max() {
        let next: Vec<C64> = raw_create(f, &term).into_iter().map(|z| z / k as f64).collect();
        if linalg::cnorm_sq(&next).sqrt() < SERIES_TOL * scale {
            break;
        }
        for (a, t) in acc.iter_mut().zip(&next) {
            *a += t;
        }
        term = s.with_amplitudes(next);
    }

    let pref = (-0.5 * f.norm_sqr()).exp();
    let amps: Vec<C64> = acc.into_iter().map(|z| z * pref).collect();
    let mut out = s.with_amplitudes(amps);
    out.leaked = s.leaked + (s.norm_sqr() - out.norm_sqr()).max(0.0);
    Ok(out)
}

/// Coherent state `W(f) Omega`.
pub fn coherent_state(basis: &std::sync::Arc<FockBasis>, f: &ModeFunction) -> Result<FockState> {
    weyl_apply(f, &FockState::vacuum(basis))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fock::testing::{random_mode, random_state_below};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(m: usize, n: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(m, n).unwrap())
    }

    #[test]
    fn create_on_vacuum() {
        let b = basis(3, 4);
        let s = apply_create(&ModeFunction::basis(3, 0), &FockState::vacuum(&b)).unwrap();
        assert_eq!(s.amplitude_of(&[1, 0, 0]), C64::new(1.0, 0.0));
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.leaked, 0.0);
    }

    #[test]
    fn annihilate_one_particle_and_vacuum() {
        let b = basis(3, 4);
        let e0 = ModeFunction::basis(3, 0);
        let one = apply_create(&e0, &FockState::vacuum(&b)).unwrap();
        let back = apply_annihilate(&e0, &one).unwrap();
        assert_eq!(back.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(apply_annihilate(&e0, &FockState::vacuum(&b)).unwrap().norm(), 0.0);
    }

    #[test]
    fn leak_is_recorded_exactly() {
        let b = basis(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state_below(&b, 2, &mut rng);
        let f = random_mode(2, &mut rng);
        let out = apply_create(&f, &s).unwrap();
        // reference: the same state in a roomier basis
        let big = basis(2, 3);
        let mut amps = vec![ZERO; big.dim()];
        for k in 0..b.dim() {
            amps[big.index_of(b.occupation(k)).unwrap()] = s.amplitudes()[k];
        }
        let full = apply_create(&f, &FockState::from_amplitudes(&big, amps).unwrap()).unwrap();
        let top = project_sector(3, &full).unwrap().norm_sqr();
        assert!((out.leaked - top).abs() < 1e-13);
    }

    #[test]
    fn product_state_from_creation_powers() {
        let b = basis(2, 5);
        let f = ModeFunction::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let s = product_state(&b, &f, 3).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
        // amplitude of (n1, n2) is sqrt(3!/(n1! n2!)) f1^n1 f2^n2
        let a = s.amplitude_of(&[1, 2]);
        let expect = 3f64.sqrt() * 0.6 * C64::new(0.0, 0.8).powi(2);
        assert!((a - expect).norm() < 1e-14);
        assert_eq!(s.sector_masses()[3], s.norm_sqr());
    }

    #[test]
    fn number_operator_is_second_quantized_identity() {
        let b = basis(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state_below(&b, 5, &mut rng);
        let p3 = project_sector(3, &s).unwrap();
        let n = second_quantize(&DMatrix::identity(3, 3)).unwrap();
        let out = n.apply(&p3).unwrap();
        assert!(out.sub(&p3.scaled(C64::new(3.0, 0.0))).unwrap().norm() < 1e-13);
    }

    #[test]
    fn kinetic_annihilates_vacuum() {
        let g = crate::lattice::build_grid(4, 1.0).unwrap();
        let b = basis(4, 3);
        let k = second_quantize(&linalg::to_complex(g.h0())).unwrap();
        assert_eq!(k.apply(&FockState::vacuum(&b)).unwrap().norm(), 0.0);
    }

    #[test]
    fn non_hermitian_rejected_but_flaggable() {
        let j = DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(1.0, 0.0), ZERO, ZERO]);
        assert!(matches!(second_quantize(&j), Err(Error::NotHermitian { .. })));
        assert!(!second_quantize_any(&j).is_hermitian());
    }

    #[test]
    fn weyl_zero_is_identity() {
        let b = basis(2, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state_below(&b, 4, &mut rng);
        let out = weyl_apply(&ModeFunction::zeros(2), &s).unwrap();
        assert!(out.sub(&s).unwrap().norm() < 1e-15);
    }

    #[test]
    fn weyl_requires_headroom() {
        let b = basis(2, 10);
        let f = ModeFunction::from_real(&[1.0, 1.0]);
        match weyl_apply(&f, &FockState::vacuum(&b)) {
            Err(Error::Headroom { required, .. }) => assert_eq!(required, weyl_headroom(&f)),
            other => panic!("expected headroom error, got {other:?}"),
        }
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let b = basis(3, 2);
        let f = ModeFunction::basis(2, 0);
        assert!(matches!(apply_create(&f, &FockState::vacuum(&b)), Err(Error::ModeMismatch { .. })));
        assert!(project_sector(3, &FockState::vacuum(&b)).is_err());
    }
}
