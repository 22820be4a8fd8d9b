//! Dense Hermitian eigensolvers and small matrix helpers.
//!
//! Storage is `nalgebra` throughout; the eigendecompositions are delegated to
//! `faer`, which is several times faster on the sector Hamiltonians that reach
//! a few thousand rows.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues in nondecreasing order with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct RealEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn eigh_real(m: &DMatrix<f64>) -> Result<RealEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter(format!("non-square {}x{} matrix", n, m.ncols())));
    }
    let a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen {
        dim: n,
        reason: format!("{e:?}"),
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = DVector::from_fn(n, |i, _| s[i]);
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen { dim: n, reason: "non-finite eigenvalue".into() });
    }
    Ok(RealEigen { values, vectors })
}

pub fn eigh_complex(m: &DMatrix<C64>) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter(format!("non-square {}x{} matrix", n, m.ncols())));
    }
    let a = Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen {
        dim: n,
        reason: format!("{e:?}"),
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = DVector::from_fn(n, |i, _| s[i].re);
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen { dim: n, reason: "non-finite eigenvalue".into() });
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn eigvalsh(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let a = Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)]);
    let vals = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen {
        dim: n,
        reason: format!("{e:?}"),
    })?;
    Ok(vals)
}

pub fn eigvalsh_real(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen {
        dim: n,
        reason: format!("{e:?}"),
    })
}

/// max |A - A^dagger| over all entries.
pub fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Entry-wise max of |A - B|.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// `exp(-i h t)` for a real symmetric `h`.
pub fn unitary_from_real_symmetric(h: &DMatrix<f64>, t: f64) -> Result<DMatrix<C64>> {
    let eig = eigh_real(h)?;
    Ok(phase_rotate(&to_complex(&eig.vectors), eig.values.as_slice(), t))
}

/// `exp(-i h t)` for a Hermitian `h`.
pub fn unitary_from_hermitian(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let eig = eigh_complex(h)?;
    Ok(phase_rotate(&eig.vectors, eig.values.as_slice(), t))
}

fn phase_rotate(q: &DMatrix<C64>, values: &[f64], t: f64) -> DMatrix<C64> {
    let n = q.nrows();
    let mut scaled = q.clone();
    for (j, &lam) in values.iter().enumerate() {
        let ph = C64::from_polar(1.0, -lam * t);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * q.adjoint()
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm(m: &DMatrix<C64>) -> Result<f64> {
    Ok(eigvalsh(m)?.iter().map(|v| v.abs()).sum())
}

/// Ordinary least squares of `y` on `x`. Returns (slope, intercept, r2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

pub fn cnorm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `<a, b>` antilinear in the first slot.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_eigen_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let e = eigh_real(&m).unwrap();
        let back = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((back - m).abs().max() < 1e-13);
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
    }

    #[test]
    fn hermitian_unitary_is_unitary() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.3, -0.2), C64::new(0.3, 0.2), C64::new(-0.5, 0.0)],
        );
        let u = unitary_from_hermitian(&h, 0.7).unwrap();
        let id = &u * u.adjoint();
        assert!(max_abs_diff(&id, &DMatrix::identity(2, 2)) < 1e-14);
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s + 2.0).abs() < 1e-14 && (i - 3.0).abs() < 1e-13 && (r2 - 1.0).abs() < 1e-14);
    }
}
