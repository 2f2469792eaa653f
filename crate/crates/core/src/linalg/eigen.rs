//! Hermitian spectral calculus by cyclic Jacobi.
//!
//! An n×n Hermitian `A + iB` is embedded as the real symmetric 2n×2n block
//! matrix `[[A, −B], [B, A]]`. The embedding is an algebra homomorphism, so any
//! real function applied to the embedded spectrum maps back to the same
//! function of the Hermitian matrix; every eigenvalue appears twice.

use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix given row-major.
/// Returns eigenvalues and the eigenvector matrix (columns), unsorted.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 || n < 2 {
        return ((0..n).map(|i| a[i * n + i]).collect(), v);
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-17 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

fn embed(h: &CMatrix) -> Vec<f64> {
    let n = h.rows();
    let m = 2 * n;
    let mut out = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            out[i * m + j] = z.re;
            out[(i + n) * m + (j + n)] = z.re;
            out[i * m + (j + n)] = -z.im;
            out[(i + n) * m + j] = z.im;
        }
    }
    out
}

fn check_hermitian(h: &CMatrix, tol: f64) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            h.rows(),
            h.cols()
        )));
    }
    let r = h.hermitian_residual();
    if r > tol.max(1e-12 * h.frobenius_norm()) {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h, 1e-9)?;
    let n = h.rows();
    let (mut vals, _) = symmetric_eigen(&embed(&h.hermitian_part()), 2 * n);
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?[0])
}

/// f(h) for Hermitian h and a real function f of the spectrum.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    check_hermitian(h, 1e-9)?;
    let n = h.rows();
    let m = 2 * n;
    let (vals, vecs) = symmetric_eigen(&embed(&h.hermitian_part()), m);
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, &w) in fv.iter().enumerate() {
                re += vecs[i * m + k] * w * vecs[j * m + k];
                im += vecs[(i + n) * m + k] * w * vecs[j * m + k];
            }
            out.set(i, j, C64::new(re, im));
        }
    }
    Ok(out.hermitian_part())
}

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues in
/// [−tol, 0) are clamped to zero; anything lower is an error.
pub fn psd_sqrt(h: &CMatrix, tol: f64) -> Result<CMatrix> {
    check_hermitian(h, tol)?;
    let lo = min_eigenvalue(h)?;
    if lo < -tol {
        return Err(Error::NotPositive(lo));
    }
    hermitian_function(h, |x| x.max(0.0).sqrt())
}

/// h^{-1/2} for a strictly positive Hermitian h.
pub fn pd_inv_sqrt(h: &CMatrix) -> Result<CMatrix> {
    let lo = min_eigenvalue(h)?;
    if lo <= 0.0 {
        return Err(Error::NotPositive(lo));
    }
    hermitian_function(h, |x| 1.0 / x.sqrt())
}
