//! Seed states ψ₂(α), the recursive family ψ_m(α) and the λ maps.
//!
//! Qubits are labelled 0..2^m−1 with qubit 0 the most significant bit.
//! Swaps and projections act on amplitude indices directly.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{bell, BellKind};
use crate::error::{Error, Result};
use crate::linalg::{apply_local, pauli, CMatrix, StateVector, C64, ZERO};

/// Four unit-norm coefficients of ψ₂(α).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaVec(pub [C64; 4]);

impl AlphaVec {
    /// Normalizes the input; returns the vector and how far its norm was from 1.
    pub fn normalized(a: [C64; 4]) -> Result<(Self, f64)> {
        let n = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Precondition("alpha must be a nonzero finite vector".into()));
        }
        Ok((Self(a.map(|z| z / n)), (n - 1.0).abs()))
    }

    pub fn real(a: [f64; 4]) -> Self {
        Self::normalized(a.map(|x| C64::new(x, 0.0))).expect("nonzero literal").0
    }

    /// `(1,2,3,4)/√30`.
    pub fn default_generic() -> Self {
        Self::real([1.0, 2.0, 3.0, 4.0])
    }

    pub fn coeffs(&self) -> &[C64; 4] {
        &self.0
    }

    /// Rotates the global phase so the largest coefficient is real positive.
    fn gauge_fixed(a: [C64; 4]) -> [C64; 4] {
        let big = a
            .iter()
            .copied()
            .max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()))
            .expect("four entries");
        let ph = big.conj() / big.norm();
        a.map(|z| z * ph)
    }
}

/// Uniform on the complex unit sphere, redrawn until generic.
pub fn sample_generic_alpha(rng: &mut impl Rng, tol: f64) -> AlphaVec {
    loop {
        let a = [0; 4].map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        if let Ok((alpha, _)) = AlphaVec::normalized(a) {
            if alpha_generic(&alpha, tol) {
                return alpha;
            }
        }
    }
}

/// Distinct squares and no rescaling q ≠ 1 that maps the multiset of
/// squares onto itself.
pub fn alpha_generic(alpha: &AlphaVec, tol: f64) -> bool {
    squares_generic(&alpha.0.map(|z| z * z), tol)
}

fn squares_generic(sq: &[C64; 4], tol: f64) -> bool {
    for i in 0..4 {
        for j in i + 1..4 {
            if (sq[i] - sq[j]).norm() <= tol {
                return false;
            }
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            if i == j || sq[j].norm() <= tol {
                continue;
            }
            let q = sq[i] / sq[j];
            if (q - 1.0).norm() <= tol {
                continue;
            }
            if multiset_eq(sq, &sq.map(|z| z * q), tol) {
                return false;
            }
        }
    }
    true
}

fn multiset_eq(a: &[C64; 4], b: &[C64; 4], tol: f64) -> bool {
    let mut used = [false; 4];
    b.iter().all(|y| {
        let hit = (0..4)
            .filter(|&k| !used[k])
            .min_by(|&k, &l| (a[k] - y).norm().total_cmp(&(a[l] - y).norm()));
        match hit {
            Some(k) if (a[k] - y).norm() <= tol.max(1e-12) * 1e2 => {
                used[k] = true;
                true
            }
            _ => false,
        }
    })
}

/// Which genericity set to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenericityRule {
    /// Distinct squares and no multiset rescaling.
    Seed,
    /// The seed condition for α and for every composed λ-image up to `depth`.
    Chain { depth: usize },
}

impl Default for GenericityRule {
    fn default() -> Self {
        GenericityRule::Chain { depth: 2 }
    }
}

pub fn is_generic(alpha: &AlphaVec, rule: GenericityRule, tol: f64) -> bool {
    match rule {
        GenericityRule::Seed => alpha_generic(alpha, tol),
        GenericityRule::Chain { depth } => {
            alpha_generic(alpha, tol) && generic_chain_check(alpha, depth, tol).passed
        }
    }
}

/// `σ_i ⊗ σ_i` on qubits 1 and 3 of `|φ⁺⟩₀₁|φ⁺⟩₂₃`.
fn seed_basis() -> [StateVector; 4] {
    let phi = bell(BellKind::PhiPlus);
    let base = phi.kron(&phi);
    let id = CMatrix::identity(2);
    [0, 1, 2, 3].map(|i| {
        apply_local(&[id.clone(), pauli(i), id.clone(), pauli(i)], &base).expect("4 qubits")
    })
}

/// `Σ_i β_i σ_i⁽⁰⁾σ_i⁽¹⁾ |φ⁺⟩₀₂|φ⁺⟩₁₃`, the layout of the set 𝒫.
fn p_basis() -> [StateVector; 4] {
    let phi = bell(BellKind::PhiPlus);
    let base = swap_qubits(&phi.kron(&phi), 1, 2);
    let id = CMatrix::identity(2);
    [0, 1, 2, 3].map(|i| {
        apply_local(&[pauli(i), pauli(i), id.clone(), id.clone()], &base).expect("4 qubits")
    })
}

/// `ψ₂(α) = Σ_i α_i σ_i⁽¹⁾ σ_i⁽³⁾ |φ⁺⟩₀₁|φ⁺⟩₂₃`.
pub fn psi2(alpha: &AlphaVec) -> StateVector {
    let basis = seed_basis();
    let amps = (0..16)
        .map(|k| (0..4).map(|i| alpha.0[i] * basis[i].amplitudes()[k]).sum())
        .collect();
    StateVector::qubits(4, amps).expect("sixteen amplitudes")
}

/// Exchanges two qubits of a qubit register.
pub fn swap_qubits(psi: &StateVector, a: usize, b: usize) -> StateVector {
    let n = psi.parties();
    let (ba, bb) = (n - 1 - a, n - 1 - b);
    let src = psi.amplitudes();
    let amps: Vec<C64> = (0..src.len())
        .map(|idx| {
            let x = ((idx >> ba) ^ (idx >> bb)) & 1;
            src[idx ^ ((x << ba) | (x << bb))]
        })
        .collect();
    StateVector::qubits(n, amps).expect("same length")
}

fn symmetrize(psi: &StateVector, a: usize, b: usize) -> StateVector {
    let s = swap_qubits(psi, a, b);
    let amps = psi
        .amplitudes()
        .iter()
        .zip(s.amplitudes())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    StateVector::qubits(psi.parties(), amps).expect("same length")
}

/// Swap pairs of `K(m,k)` in application order, innermost first.
pub fn symmetrizer_k(m: usize, k: usize) -> Result<Vec<(usize, usize)>> {
    if !(2..=4).contains(&k) || !(k..=4).contains(&m) {
        return Err(Error::OutOfRange(format!("K({m},{k}) needs 2 ≤ k ≤ m ≤ 4")));
    }
    Ok(k_pairs(m, k))
}

fn k_pairs(m: usize, k: usize) -> Vec<(usize, usize)> {
    if m == k {
        return Vec::new();
    }
    let inner = k_pairs(m - 1, k);
    let half = 1 << (m - 1);
    let mut out = inner.clone();
    out.extend(inner.iter().map(|&(i, j)| (i + half, j + half)));
    out.push((0, half));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildPath {
    /// ψ_m ∝ ½(𝟙 + U_{0,2^{m−1}}) ψ_{m−1}^{⊗2}.
    Recursive,
    /// ψ_m ∝ K(m,2) ψ₂^{⊗2^{m−2}}.
    Symmetrizer,
}

/// Normalized ψ_m(α), m ∈ 2..=4.
pub fn build_psi_m(alpha: &AlphaVec, m: usize, path: BuildPath) -> Result<StateVector> {
    if !(2..=4).contains(&m) {
        return Err(Error::OutOfRange(format!("m = {m} outside 2..=4")));
    }
    let seed = psi2(alpha);
    let raw = match path {
        BuildPath::Recursive => {
            let mut psi = seed;
            for level in 3..=m {
                psi = symmetrize(&psi.kron(&psi), 0, 1 << (level - 1));
                check_alive(&psi)?;
            }
            psi
        }
        BuildPath::Symmetrizer => {
            let mut psi = seed.clone();
            for _ in 1..(1 << (m - 2)) {
                psi = psi.kron(&seed);
            }
            for (a, b) in k_pairs(m, 2) {
                psi = symmetrize(&psi, a, b);
                check_alive(&psi)?;
            }
            psi
        }
    };
    raw.normalized()
}

fn check_alive(psi: &StateVector) -> Result<()> {
    let n = psi.norm();
    if n <= 1e-12 {
        return Err(Error::Annihilated(n));
    }
    Ok(())
}

/// `‖U_k ψ_m − ψ_m‖` with U_k exchanging qubits i and 2^k + i for 0 < i < 2^k.
pub fn verify_uk_invariance(alpha: &AlphaVec, m: usize, k: usize) -> Result<f64> {
    if !(2..=4).contains(&m) || !(2..m).contains(&k) {
        return Err(Error::OutOfRange(format!("U_k needs 2 ≤ k < m ≤ 4, got m={m} k={k}")));
    }
    let psi = build_psi_m(alpha, m, BuildPath::Recursive)?;
    let mut out = psi.clone();
    let shift = 1 << k;
    for i in 1..shift {
        out = swap_qubits(&out, i, shift + i);
    }
    Ok(out.distance(&psi))
}

/// Contracts qubit pairs with a two-qubit bra; remaining qubits keep
/// their relative order.
pub fn project_pairs(psi: &StateVector, pairs: &[(usize, usize)], bra: &StateVector) -> StateVector {
    let mut cur = psi.clone();
    let mut labels: Vec<usize> = (0..psi.parties()).collect();
    let b = bra.amplitudes();
    for &(qa, qb) in pairs {
        let a = labels.iter().position(|&l| l == qa).expect("qubit present");
        let bpos = labels.iter().position(|&l| l == qb).expect("qubit present");
        let n = cur.parties();
        let (sa, sb) = (n - 1 - a, n - 1 - bpos);
        let src = cur.amplitudes();
        let keep: Vec<usize> = (0..n).filter(|&q| q != a && q != bpos).collect();
        let out_n = n - 2;
        let amps: Vec<C64> = (0..1usize << out_n)
            .map(|r| {
                let mut base = 0usize;
                for (pos, &q) in keep.iter().enumerate() {
                    let bit = (r >> (out_n - 1 - pos)) & 1;
                    base |= bit << (n - 1 - q);
                }
                let mut acc = ZERO;
                for xa in 0..2 {
                    for xb in 0..2 {
                        let idx = base | (xa << sa) | (xb << sb);
                        acc += b[2 * xa + xb].conj() * src[idx];
                    }
                }
                acc
            })
            .collect();
        cur = StateVector::qubits(out_n, amps).expect("consistent length");
        labels = keep.iter().map(|&q| labels[q]).collect();
    }
    cur
}

/// Result of one λ map.
#[derive(Clone, Debug)]
pub struct LambdaImage {
    /// Coefficients in the ψ₂ layout, gauge-fixed.
    pub alpha: AlphaVec,
    /// Coefficients in the 𝒫 layout.
    pub beta: [C64; 4],
    pub residual: f64,
}

impl LambdaImage {
    pub fn beta2(&self) -> f64 {
        self.beta[2].norm()
    }
}

fn lambda_pairs(i: usize) -> Result<[(usize, usize); 2]> {
    match i {
        1 => Ok([(2, 6), (3, 7)]),
        2 => Ok([(1, 5), (3, 7)]),
        3 => Ok([(1, 5), (2, 6)]),
        _ => Err(Error::OutOfRange(format!("lambda index {i} outside 1..=3"))),
    }
}

/// Projects `½(𝟙 + U_{0,4})ψ₂(α)^{⊗2}` onto two singlets and reads the
/// four-qubit result back as a seed state.
pub fn lambda_map(i: usize, alpha: &AlphaVec, tol: f64) -> Result<LambdaImage> {
    let pairs = lambda_pairs(i)?;
    let seed = psi2(alpha);
    let sym = symmetrize(&seed.kron(&seed), 0, 4);
    let out = project_pairs(&sym, &pairs, &bell(BellKind::PsiMinus));
    let n = out.norm();
    if n <= 1e-10 {
        return Err(Error::Annihilated(n));
    }
    let out = out.normalized()?;
    let expand = |basis: &[StateVector; 4]| -> ([C64; 4], f64) {
        let c = [0, 1, 2, 3].map(|k| basis[k].inner(&out));
        let fit: Vec<C64> = (0..16)
            .map(|x| (0..4).map(|k| c[k] * basis[k].amplitudes()[x]).sum())
            .collect();
        let r = fit
            .iter()
            .zip(out.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        (c, r)
    };
    let (a, residual) = expand(&seed_basis());
    if residual > tol {
        return Err(Error::ExpansionResidual(residual));
    }
    let ph = {
        let g = AlphaVec::gauge_fixed(a);
        let k = (0..4).max_by(|&x, &y| a[x].norm().total_cmp(&a[y].norm())).unwrap();
        g[k] / a[k]
    };
    let (b, _) = expand(&p_basis());
    Ok(LambdaImage {
        alpha: AlphaVec(a.map(|z| z * ph)),
        beta: b.map(|z| z * ph),
        residual,
    })
}

/// 𝒫-membership: β₂ vanishes and the remaining squares are generic.
pub fn beta_in_p(beta: &[C64; 4], tol: f64) -> bool {
    beta[2].norm() <= tol && squares_generic(&beta.map(|z| z * z), tol)
}

#[derive(Clone, Debug)]
pub struct ChainReport {
    pub passed: bool,
    pub checked: usize,
    /// First failing composition (applied left to right) and why.
    pub failure: Option<(Vec<usize>, String)>,
}

/// Every composition of up to `depth` λ maps keeps α generic.
pub fn generic_chain_check(alpha: &AlphaVec, depth: usize, tol: f64) -> ChainReport {
    if depth > 4 {
        return ChainReport {
            passed: false,
            checked: 0,
            failure: Some((Vec::new(), format!("depth {depth} above 4"))),
        };
    }
    if !alpha_generic(alpha, tol) {
        return ChainReport {
            passed: false,
            checked: 0,
            failure: Some((Vec::new(), "seed is not generic".into())),
        };
    }
    let mut seqs: Vec<Vec<usize>> = Vec::new();
    for len in 1..=depth {
        let mut level: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..len {
            level = level
                .into_iter()
                .flat_map(|s| (1..=3).map(move |k| [s.as_slice(), &[k]].concat()))
                .collect();
        }
        seqs.extend(level);
    }
    let failures: Vec<(Vec<usize>, String)> = seqs
        .par_iter()
        .filter_map(|seq| {
            let mut a = *alpha;
            for &k in seq {
                match lambda_map(k, &a, 1e-9) {
                    Ok(img) => a = img.alpha,
                    Err(e) => return Some((seq.clone(), e.to_string())),
                }
            }
            (!alpha_generic(&a, tol)).then(|| (seq.clone(), "image is not generic".into()))
        })
        .collect();
    ChainReport {
        passed: failures.is_empty(),
        checked: seqs.len(),
        failure: failures.into_iter().next(),
    }
}
