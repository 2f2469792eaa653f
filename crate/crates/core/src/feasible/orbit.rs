//! Bilinear search for `G = Σ_k p_k S_k† H S_k` with `H ≻ 0` nontrivial.
//!
//! Qubits: with `R_k = R(S_k)` the Bloch vectors satisfy `g = M(p)·h`,
//! `M(p) = Σ p_k R_kᵀ`. Nelder–Mead runs over softmax logits for p, the
//! linear solve gives h, and an LP over the columns `R_kᵀ h` polishes p.
//! Other dimensions use the same split on vectorized Hermitian operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{simplex_solve, Status};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_function, hermitian_to_real_vec, min_eigenvalue, real_vec_to_hermitian,
    rotate, rotate_transpose, su2_to_so3, symmetric_eigen, BlochVec, CMatrix,
};

/// Accepted reconstruction error of a witness.
pub const WITNESS_RESIDUAL: f64 = 1e-8;
/// Smallest accepted eigenvalue of H.
pub const WITNESS_MIN_EIG: f64 = 1e-6;
/// Target separation of h from every trivial solution during the search.
const SEPARATION: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    pub tol: f64,
    /// Number of restarts.
    pub budget: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Kept distance of ‖h‖ from 1/2.
    pub margin: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            budget: 64,
            iterations: 500,
            seed: 0,
            margin: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitResult {
    pub status: Status,
    pub h: Option<CMatrix>,
    /// Indices into the factor list with positive weight.
    pub support: Vec<usize>,
    /// Weights aligned with `support`.
    pub p: Vec<f64>,
    pub residual: f64,
    pub reason: String,
}

impl OrbitResult {
    fn no(reason: &str) -> Self {
        Self {
            status: Status::CertifiedNo,
            h: None,
            support: Vec::new(),
            p: Vec::new(),
            residual: f64::NAN,
            reason: reason.into(),
        }
    }

    fn inconclusive(restarts: usize) -> Self {
        Self {
            status: Status::Inconclusive,
            h: None,
            support: Vec::new(),
            p: Vec::new(),
            residual: f64::NAN,
            reason: format!("no verified witness after {restarts} restarts"),
        }
    }
}

pub fn orbit_search(g1: &CMatrix, factors: &[CMatrix], opts: &OrbitOptions) -> Result<OrbitResult> {
    if opts.budget == 0 || opts.iterations == 0 {
        return Err(Error::InvalidBudget);
    }
    if factors.is_empty() {
        return Err(Error::Empty("orbit factors"));
    }
    let d = g1.rows();
    for f in factors {
        if f.rows() != d || !f.is_square() {
            return Err(Error::DimensionMismatch("factor size differs from G".into()));
        }
        let r = f.unitarity_residual();
        if r > opts.tol.max(1e-9) {
            return Err(Error::NotUnitary(r));
        }
    }
    let r = g1.hermitian_residual();
    if r > opts.tol.max(1e-9) {
        return Err(Error::NotHermitian(r));
    }
    let tr = g1.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidTrace(tr));
    }

    // All conjugations coincide: H = S G S† is forced, hence trivial.
    let f0 = &factors[0];
    if factors
        .iter()
        .all(|f| f.proportionality(f0).is_some_and(|(_, res)| res <= 1e-9))
    {
        return Ok(OrbitResult::no("every factor induces the same conjugation"));
    }

    let found = if d == 2 {
        qubit_search(g1, factors, opts)?
    } else {
        general_search(g1, factors, opts)
    };
    Ok(found.unwrap_or_else(|| OrbitResult::inconclusive(opts.budget)))
}

/// Re-checks a witness from scratch; returns the reconstruction residual.
pub fn verify_orbit_witness(
    g1: &CMatrix,
    factors: &[CMatrix],
    support: &[usize],
    p: &[f64],
    h: &CMatrix,
    tol: f64,
) -> Result<f64> {
    if support.len() != p.len() || support.is_empty() {
        return Err(Error::InvalidWitness("support and weights differ in length".into()));
    }
    if p.iter().any(|&x| !(x > 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWitness(format!("weights {p:?} are not a positive distribution")));
    }
    let mut acc = CMatrix::zeros(g1.rows(), g1.cols());
    for (&k, &w) in support.iter().zip(p) {
        let s = factors
            .get(k)
            .ok_or_else(|| Error::InvalidWitness(format!("factor index {k} out of range")))?;
        acc = &acc + &h.conjugate_by_adjoint(s).scale_real(w);
    }
    let residual = acc.distance(g1);
    if residual > WITNESS_RESIDUAL {
        return Err(Error::InvalidWitness(format!("reconstruction residual {residual:.3e}")));
    }
    let lo = min_eigenvalue(h)?;
    if lo < WITNESS_MIN_EIG {
        return Err(Error::InvalidWitness(format!("H has eigenvalue {lo:.3e}")));
    }
    for (k, s) in factors.iter().enumerate() {
        let trivial = g1.conjugate_by(s);
        if h.distance(&trivial) <= tol {
            return Err(Error::InvalidWitness(format!(
                "H equals the conjugate of G by factor {k}"
            )));
        }
    }
    Ok(residual)
}

fn finish(
    g1: &CMatrix,
    factors: &[CMatrix],
    p_full: &[f64],
    h: CMatrix,
    tol: f64,
) -> Option<OrbitResult> {
    let support: Vec<usize> = (0..p_full.len()).filter(|&k| p_full[k] > 1e-12).collect();
    let total: f64 = support.iter().map(|&k| p_full[k]).sum();
    let p: Vec<f64> = support.iter().map(|&k| p_full[k] / total).collect();
    let residual = verify_orbit_witness(g1, factors, &support, &p, &h, tol).ok()?;
    Some(OrbitResult {
        status: Status::CertifiedYes,
        h: Some(h),
        support,
        p,
        residual,
        reason: "witness verified".into(),
    })
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Starting logits near vertex `restart mod m`.
fn start_logits(rng: &mut ChaCha8Rng, m: usize, restart: usize) -> Vec<f64> {
    let v = restart % m;
    (0..m)
        .map(|k| {
            let noise: f64 = rng.sample(StandardNormal);
            if k == v {
                3.0 + noise
            } else {
                noise
            }
        })
        .collect()
}

// ----- qubit path -----

type Rot = [[f64; 3]; 3];

struct QubitProblem {
    g: BlochVec,
    rots: Vec<Rot>,
    trivial: Vec<BlochVec>,
    bound: f64,
}

impl QubitProblem {
    fn matrix(&self, p: &[f64]) -> [f64; 9] {
        let mut m = [0.0; 9];
        for (r, &w) in self.rots.iter().zip(p) {
            for a in 0..3 {
                for b in 0..3 {
                    m[a * 3 + b] += w * r[b][a];
                }
            }
        }
        m
    }

    /// Candidate h values for weights p: the plain solve, and the solve with
    /// the softest singular direction replaced by a free component.
    fn candidates(&self, p: &[f64]) -> Vec<BlochVec> {
        let m = self.matrix(p);
        let mut mtm = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                mtm[a * 3 + b] = (0..3).map(|k| m[k * 3 + a] * m[k * 3 + b]).sum();
            }
        }
        let (vals, vecs) = symmetric_eigen(&mtm, 3);
        let g = self.g.to_array();
        let mtg: Vec<f64> = (0..3).map(|a| (0..3).map(|k| m[k * 3 + a] * g[k]).sum()).collect();
        let top = vals.iter().cloned().fold(0.0, f64::max);
        let col = |i: usize| [vecs[i], vecs[3 + i], vecs[6 + i]];
        let soft = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("3 eigenvalues");
        let cut = 1e-24 * top.max(1e-300);
        let mut h_full = [0.0; 3];
        let mut h_soft = [0.0; 3];
        for i in 0..3 {
            if vals[i] <= cut {
                continue;
            }
            let v = col(i);
            let c = (0..3).map(|k| v[k] * mtg[k]).sum::<f64>() / vals[i];
            for k in 0..3 {
                h_full[k] += c * v[k];
                if i != soft {
                    h_soft[k] += c * v[k];
                }
            }
        }
        let mut out = vec![BlochVec::from_array(h_full)];
        // Dropping the softest direction trades a small residual for a free
        // component; this is where nontrivial solutions live.
        let n0 = BlochVec::from_array(h_soft).norm();
        if n0 < self.bound {
            let v = col(soft);
            let t = 0.5 * (self.bound * self.bound - n0 * n0).sqrt();
            for sign in [1.0, -1.0] {
                let h = [
                    h_soft[0] + sign * t * v[0],
                    h_soft[1] + sign * t * v[1],
                    h_soft[2] + sign * t * v[2],
                ];
                out.push(BlochVec::from_array(h));
            }
        }
        out
    }

    fn residual(&self, p: &[f64], h: BlochVec) -> f64 {
        let mut acc = [-self.g.x, -self.g.y, -self.g.z];
        for (r, &w) in self.rots.iter().zip(p) {
            let v = rotate_transpose(r, h).to_array();
            for k in 0..3 {
                acc[k] += w * v[k];
            }
        }
        (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt()
    }

    fn separation(&self, h: BlochVec) -> f64 {
        self.trivial
            .iter()
            .map(|t| {
                BlochVec::new(h.x - t.x, h.y - t.y, h.z - t.z).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn score(&self, p: &[f64], h: BlochVec) -> f64 {
        self.residual(p, h)
            + (h.norm() - self.bound).max(0.0)
            + (1.0 - self.separation(h) / SEPARATION).max(0.0)
    }

    fn best(&self, p: &[f64]) -> (f64, BlochVec) {
        self.candidates(p)
            .into_iter()
            .map(|h| (self.score(p, h), h))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one candidate")
    }

    /// Refits p for fixed h by an exact LP.
    fn polish(&self, h: BlochVec) -> Option<Vec<f64>> {
        let cols: Vec<Vec<f64>> = self
            .rots
            .iter()
            .map(|r| rotate_transpose(r, h).to_array().to_vec())
            .collect();
        let lp = simplex_solve(&cols, &self.g.to_array(), 1e-11);
        lp.p
    }
}

fn qubit_search(g1: &CMatrix, factors: &[CMatrix], opts: &OrbitOptions) -> Result<Option<OrbitResult>> {
    let g = BlochVec::decode(g1, 1e-9)?;
    let rots = factors
        .iter()
        .map(|f| su2_to_so3(f, 1e-9))
        .collect::<Result<Vec<_>>>()?;
    let trivial = rots.iter().map(|r| rotate(r, g)).collect();
    let prob = QubitProblem {
        g,
        rots,
        trivial,
        bound: 0.5 - opts.margin,
    };
    let m = factors.len();
    let out = (0..opts.budget).into_par_iter().find_map_first(|restart| {
        let mut rng = restart_rng(opts.seed, restart);
        let x0 = start_logits(&mut rng, m, restart);
        let f = |theta: &[f64]| prob.best(&softmax(theta)).0;
        let theta = nelder_mead(f, x0, opts.iterations);
        let p = softmax(&theta);
        let (_, h) = prob.best(&p);
        let p_fit = prob.polish(h).unwrap_or(p);
        finish(g1, factors, &p_fit, h.encode(), opts.tol)
    });
    Ok(out)
}

/// Minimizes `f` from `x0`; returns the best vertex.
fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: Vec<f64>, iterations: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(&x0);
    simplex.push((x0.clone(), fx0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += 0.5;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 == 0.0 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v.0[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|k| centroid[k] + t * (worst.0[k] - centroid[k])).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = along(0.5);
                let fx = f(&x);
                (x, fx)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for k in 0..n {
                        v.0[k] = best[k] + 0.5 * (v.0[k] - best[k]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}

// ----- general path -----

struct GeneralProblem {
    d: usize,
    g: Vec<f64>,
    /// Real matrices of H ↦ S_k† H S_k on vectorized Hermitian operators.
    maps: Vec<Vec<f64>>,
}

impl GeneralProblem {
    fn new(g1: &CMatrix, factors: &[CMatrix]) -> Self {
        let d = g1.rows();
        let n = d * d;
        let maps = factors
            .iter()
            .map(|s| {
                let mut a = vec![0.0; n * n];
                for c in 0..n {
                    let mut e = vec![0.0; n];
                    e[c] = 1.0;
                    let img = hermitian_to_real_vec(&real_vec_to_hermitian(&e, d).conjugate_by_adjoint(s));
                    for r in 0..n {
                        a[r * n + c] = img[r];
                    }
                }
                a
            })
            .collect();
        Self {
            d,
            g: hermitian_to_real_vec(g1),
            maps,
        }
    }

    /// Least-squares H for fixed p, nudged along the softest direction when
    /// the map is singular, then clamped to be positive with unit trace.
    fn solve_h(&self, p: &[f64]) -> CMatrix {
        let n = self.d * self.d;
        let mut a = vec![0.0; n * n];
        for (m, &w) in self.maps.iter().zip(p) {
            for (x, y) in a.iter_mut().zip(m) {
                *x += w * y;
            }
        }
        let mut ata = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                ata[i * n + j] = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum();
            }
        }
        let atg: Vec<f64> = (0..n).map(|i| (0..n).map(|k| a[k * n + i] * self.g[k]).sum()).collect();
        let (vals, vecs) = symmetric_eigen(&ata, n);
        let top = vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let mut x = vec![0.0; n];
        let mut soft: Option<(f64, usize)> = None;
        for i in 0..n {
            if vals[i] > 1e-20 * top {
                let c: f64 = (0..n).map(|k| vecs[k * n + i] * atg[k]).sum::<f64>() / vals[i];
                for k in 0..n {
                    x[k] += c * vecs[k * n + i];
                }
            } else if soft.is_none_or(|(v, _)| vals[i] < v) {
                soft = Some((vals[i], i));
            }
        }
        let mut h = real_vec_to_hermitian(&x, self.d);
        if let Some((_, i)) = soft {
            let v: Vec<f64> = (0..n).map(|k| vecs[k * n + i]).collect();
            let dir = real_vec_to_hermitian(&v, self.d);
            let lo = min_eigenvalue(&h).unwrap_or(0.0).max(0.0);
            h = &h + &dir.scale_real(0.5 * lo);
        }
        let clamped = hermitian_function(&h, |e| e.max(WITNESS_MIN_EIG * 10.0)).unwrap_or(h);
        let tr = clamped.trace().re;
        clamped.scale_real(1.0 / tr)
    }

    fn refit_p(&self, h: &CMatrix) -> Option<Vec<f64>> {
        let hv = real_vec_to_hermitian(&hermitian_to_real_vec(h), self.d);
        let v = hermitian_to_real_vec(&hv);
        let n = self.d * self.d;
        let cols: Vec<Vec<f64>> = self
            .maps
            .iter()
            .map(|m| (0..n).map(|r| (0..n).map(|c| m[r * n + c] * v[c]).sum()).collect())
            .collect();
        simplex_solve(&cols, &self.g, 1e-11).p
    }
}

fn general_search(g1: &CMatrix, factors: &[CMatrix], opts: &OrbitOptions) -> Option<OrbitResult> {
    let prob = GeneralProblem::new(g1, factors);
    let m = factors.len();
    (0..opts.budget).into_par_iter().find_map_first(|restart| {
        let mut rng = restart_rng(opts.seed, restart);
        let rounds = opts.iterations.clamp(1, 20);
        let v = restart % m;
        let eps: f64 = rng.random_range(1e-3..0.3);
        let mut p: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = p.iter().sum();
        for (k, x) in p.iter_mut().enumerate() {
            *x = eps * *x / s + if k == v { 1.0 - eps } else { 0.0 };
        }
        for _ in 0..rounds {
            let h = prob.solve_h(&p);
            if let Some(found) = finish(g1, factors, &p, h.clone(), opts.tol) {
                return Some(found);
            }
            if let Some(q) = prob.refit_p(&h) {
                if let Some(found) = finish(g1, factors, &q, h, opts.tol) {
                    return Some(found);
                }
                p = q;
            }
            let jitter: f64 = rng.random_range(0.5..1.5);
            let w = 0.2 * jitter;
            let k = rng.random_range(0..m);
            for (i, x) in p.iter_mut().enumerate() {
                *x = (1.0 - w) * *x + if i == k { w } else { 0.0 };
            }
        }
        None
    })
}
