//! Separable-map feasibility: `Σ_k p_k S_k† (⊗H_i) S_k = ⊗G_i`.
//!
//! All vectors involved are product operators, so the LP is solved in the
//! span of the K+1 operators. Small systems orthonormalize dense vectors;
//! large ones use the Gram matrix built from per-party traces, which never
//! forms a full tensor product.

use super::StateInClass;
use crate::error::{Error, Result};
use crate::feasible::{simplex_solve, SimplexFeasibility};
use crate::groups::{commutes, StabilizerGroup};
use crate::linalg::{hermitian_to_real_vec, symmetric_eigen, tensor, CMatrix};

/// Above this total dimension the Gram path is used.
const DENSE_LIMIT: usize = 64;

pub fn sep_check(
    source: &StateInClass,
    target: &StateInClass,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<SimplexFeasibility> {
    source.check_group(group)?;
    target.check_group(group)?;
    // product vectors: index 0 is the source, 1..=K the conjugated targets
    let mut products: Vec<Vec<CMatrix>> = vec![source.ops().to_vec()];
    for s in group.elements() {
        products.push(
            target
                .ops()
                .iter()
                .zip(&s.factors)
                .map(|(h, f)| h.conjugate_by_adjoint(f))
                .collect(),
        );
    }
    let total: usize = source.dims().iter().product();
    let coords = if total <= DENSE_LIMIT {
        dense_coordinates(&products)?
    } else {
        gram_coordinates(&products)
    };
    let (b, cols) = coords.split_first().expect("source vector present");
    Ok(simplex_solve(cols, b, tol))
}

/// Coordinates in an orthonormal basis of the span, by modified
/// Gram–Schmidt with one reorthogonalization pass.
fn dense_coordinates(products: &[Vec<CMatrix>]) -> Result<Vec<Vec<f64>>> {
    let vecs: Vec<Vec<f64>> = products
        .iter()
        .map(|p| tensor(p).map(|m| hermitian_to_real_vec(&m)))
        .collect::<Result<_>>()?;
    let scale = vecs
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &vecs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-14 * scale {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    Ok(vecs
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|q| q.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect())
}

/// Coordinates from the eigendecomposition of the Gram matrix,
/// `⟨A, B⟩ = ∏_i tr(A_i B_i)` for Hermitian product operators.
fn gram_coordinates(products: &[Vec<CMatrix>]) -> Vec<Vec<f64>> {
    let n = products.len();
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v: f64 = products[a]
                .iter()
                .zip(&products[b])
                .map(|(x, y)| x.inner(y).re)
                .product();
            gram[a * n + b] = v;
            gram[b * n + a] = v;
        }
    }
    let (vals, vecs) = symmetric_eigen(&gram, n);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 1e-15 * top).collect();
    (0..n)
        .map(|a| keep.iter().map(|&i| vals[i].sqrt() * vecs[a * n + i]).collect())
        .collect()
}

/// Source whose party j is `p·H_j + (1−p)·S⁽ʲ⁾† H_j S⁽ʲ⁾`, other parties
/// copied from the target. S must commute with the target at every other
/// party so the mixture is realized by the product map.
pub fn sep_source_construct(
    target: &StateInClass,
    group: &StabilizerGroup,
    symmetry: usize,
    j: usize,
    p: f64,
    tol: f64,
) -> Result<StateInClass> {
    target.check_group(group)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if symmetry >= group.len() {
        return Err(Error::OutOfRange(format!("symmetry {symmetry}")));
    }
    if j >= target.parties() {
        return Err(Error::OutOfRange(format!("party {j}")));
    }
    let s = group.element(symmetry);
    for (i, h) in target.ops().iter().enumerate() {
        if i != j && !commutes(h, &s.factors[i], tol)?.0 {
            return Err(Error::Precondition(format!(
                "symmetry {symmetry} does not commute with party {i}"
            )));
        }
    }
    let hj = target.op(j);
    let mixed = &hj.scale_real(p) + &hj.conjugate_by_adjoint(&s.factors[j]).scale_real(1.0 - p);
    target.with_op(j, mixed)
}
