//! Phase-1 simplex over `{p ≥ 0, Σp = 1, A·p = b}` with Bland's rule.

use super::{SimplexFeasibility, Status};

const PIVOT_EPS: f64 = 1e-12;

/// Decides whether `target` is a convex combination of `columns`.
///
/// Columns are scaled to unit norm (including the simplex row) before the
/// tableau is built, and the weights are unscaled afterwards. The problem is
/// feasible when the phase-1 optimum is at most `tol·(1 + ‖b‖)`.
pub fn simplex_solve(columns: &[Vec<f64>], target: &[f64], tol: f64) -> SimplexFeasibility {
    let k = columns.len();
    let d = target.len();
    if k == 0 || columns.iter().any(|c| c.len() != d) {
        return SimplexFeasibility::no(f64::INFINITY);
    }
    if target.iter().any(|x| !x.is_finite()) || columns.iter().flatten().any(|x| !x.is_finite())
    {
        return SimplexFeasibility::no(f64::INFINITY);
    }
    let bnorm = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = tol * (1.0 + bnorm);

    let rows = d + 1;
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| (1.0 + c.iter().map(|x| x * x).sum::<f64>()).sqrt())
        .collect();
    // tableau: rows × (k structural + rows artificial + rhs)
    let width = k + rows + 1;
    let mut t = vec![0.0; rows * width];
    for r in 0..rows {
        let rhs = if r < d { target[r] } else { 1.0 };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (c, col) in columns.iter().enumerate() {
            let a = if r < d { col[r] } else { 1.0 };
            t[r * width + c] = sign * a / scales[c];
        }
        t[r * width + k + r] = 1.0;
        t[r * width + width - 1] = sign * rhs;
    }
    let mut basis: Vec<usize> = (k..k + rows).collect();

    // reduced costs of phase 1 (minimize sum of artificials)
    let cost = |t: &[f64], j: usize, basis: &[usize]| -> f64 {
        let cj = if j >= k && j < k + rows { 1.0 } else { 0.0 };
        let mut z = 0.0;
        for (r, &b) in basis.iter().enumerate() {
            let cb = if b >= k { 1.0 } else { 0.0 };
            z += cb * t[r * width + j];
        }
        cj - z
    };

    let max_iter = 50 * (k + rows) + 1000;
    for _ in 0..max_iter {
        let entering = (0..k + rows).find(|&j| !basis.contains(&j) && cost(&t, j, &basis) < -PIVOT_EPS);
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = t[r * width + e];
            if a > PIVOT_EPS {
                let ratio = t[r * width + width - 1] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15
                            || ((ratio - lratio).abs() <= 1e-15 && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((lr, _)) = leave else { break };
        pivot(&mut t, width, rows, lr, e);
        basis[lr] = e;
    }

    let mut y = vec![0.0; k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            y[b] = t[r * width + width - 1].max(0.0);
        }
    }
    let mut p: Vec<f64> = y.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return SimplexFeasibility::no(residual_of(columns, target, &vec![1.0 / k as f64; k]));
    }
    for v in &mut p {
        *v /= total;
    }
    let residual = residual_of(columns, target, &p);
    if residual <= threshold {
        SimplexFeasibility {
            status: Status::CertifiedYes,
            p: Some(p),
            residual,
        }
    } else {
        SimplexFeasibility::no(residual)
    }
}

fn pivot(t: &mut [f64], width: usize, rows: usize, pr: usize, pc: usize) {
    let pv = t[pr * width + pc];
    for j in 0..width {
        t[pr * width + j] /= pv;
    }
    for r in 0..rows {
        if r == pr {
            continue;
        }
        let f = t[r * width + pc];
        if f == 0.0 {
            continue;
        }
        for j in 0..width {
            t[r * width + j] -= f * t[pr * width + j];
        }
    }
}

/// ‖Σ p_k a_k − b‖.
pub fn residual_of(columns: &[Vec<f64>], target: &[f64], p: &[f64]) -> f64 {
    let mut acc = target.iter().map(|x| -x).collect::<Vec<_>>();
    for (c, &w) in columns.iter().zip(p) {
        for (a, x) in acc.iter_mut().zip(c) {
            *a += w * x;
        }
    }
    acc.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Convex-hull membership, optionally with the zero-sum-plane test for
/// 3-vectors: every point and the target share `x+y+z`.
#[derive(Clone, Debug, PartialEq)]
pub struct HullMembership {
    pub feasibility: SimplexFeasibility,
    pub in_plane: Option<bool>,
}

pub fn hull_membership(
    points: &[Vec<f64>],
    target: &[f64],
    tol: f64,
    plane_check: bool,
) -> HullMembership {
    let feasibility = simplex_solve(points, target, tol);
    let in_plane = plane_check.then(|| {
        let s = |v: &[f64]| v.iter().sum::<f64>();
        points.first().is_some_and(|p0| {
            let level = s(p0);
            points.len() == points.iter().filter(|p| (s(p) - level).abs() <= tol).count()
                && (s(target) - level).abs() <= tol
        })
    });
    HullMembership {
        feasibility,
        in_plane,
    }
}
