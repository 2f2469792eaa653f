//! Finite local stabilizers.
//!
//! A symmetry is kept in factorized form. Two symmetries are the same when
//! their tensor products agree; the comparison never builds the product, so
//! sixteen-party groups stay cheap.

use crate::error::{Error, Result};
use crate::linalg::{apply_local, tensor, CMatrix, StateVector, C64, ONE};

/// Product unitary `S⁽¹⁾ ⊗ … ⊗ S⁽ⁿ⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSymmetry {
    pub factors: Vec<CMatrix>,
}

impl LocalSymmetry {
    pub fn new(factors: Vec<CMatrix>, tol: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("symmetry factors"));
        }
        for f in &factors {
            let r = f.unitarity_residual();
            if r > tol {
                return Err(Error::NotUnitary(r));
            }
        }
        Ok(Self { factors })
    }

    /// `s^{⊗n}`.
    pub fn uniform(s: &CMatrix, n: usize) -> Self {
        Self {
            factors: vec![s.clone(); n],
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&d| CMatrix::identity(d)).collect(),
        }
    }

    pub fn parties(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, party: usize) -> &CMatrix {
        &self.factors[party]
    }

    /// `self · other`, party by party.
    pub fn compose(&self, other: &LocalSymmetry) -> LocalSymmetry {
        LocalSymmetry {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> LocalSymmetry {
        LocalSymmetry {
            factors: self.factors.iter().map(CMatrix::adjoint).collect(),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        tensor(&self.factors).expect("symmetry has at least one factor")
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        apply_local(&self.factors, psi)
    }

    /// True when the factor at `party` is not a multiple of the identity.
    pub fn nontrivial_at(&self, party: usize, tol: f64) -> bool {
        !self.factors[party].is_scalar(tol)
    }

    /// Upper bound on ‖⊗self − ⊗other‖, or `None` when some pair of
    /// factors is not proportional (then the products differ).
    pub fn tensor_distance(&self, other: &LocalSymmetry, tol: f64) -> Option<f64> {
        if self.parties() != other.parties() {
            return None;
        }
        let mut fits = Vec::with_capacity(self.parties());
        for (a, b) in self.factors.iter().zip(&other.factors) {
            if a.rows() != b.rows() {
                return None;
            }
            let (c, resid) = a.proportionality(b)?;
            if resid > tol {
                return None;
            }
            fits.push((c, resid));
        }
        // ⊗a − ⊗b telescopes through ⊗(c_i b_i); each step costs one factor residual.
        let norms_a: Vec<f64> = self.factors.iter().map(CMatrix::frobenius_norm).collect();
        let norms_cb: Vec<f64> = other
            .factors
            .iter()
            .zip(&fits)
            .map(|(b, (c, _))| c.norm() * b.frobenius_norm())
            .collect();
        let mut bound = 0.0;
        for (i, (_, resid)) in fits.iter().enumerate() {
            let left: f64 = norms_a[..i].iter().product();
            let right: f64 = norms_cb[i + 1..].iter().product();
            bound += left * resid * right;
        }
        let phase: C64 = fits.iter().map(|(c, _)| *c).product();
        let total_b: f64 = other.factors.iter().map(CMatrix::frobenius_norm).product();
        bound += (phase - ONE).norm() * total_b;
        Some(bound)
    }

    pub fn tensor_eq(&self, other: &LocalSymmetry, tol: f64) -> bool {
        self.tensor_distance(other, tol).is_some_and(|d| d <= tol)
    }
}

/// A finite group of local symmetries. Element 0 is the identity.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    elements: Vec<LocalSymmetry>,
    dims: Vec<usize>,
}

pub const DEFAULT_MAX_GROUP: usize = 256;

impl StabilizerGroup {
    /// Wraps a list that is already closed. Element 0 must be the identity.
    pub fn from_elements(elements: Vec<LocalSymmetry>, tol: f64) -> Result<Self> {
        let first = elements.first().ok_or(Error::Empty("group elements"))?;
        let dims: Vec<usize> = first.factors.iter().map(CMatrix::rows).collect();
        if !first.tensor_eq(&LocalSymmetry::identity(&dims), tol) {
            return Err(Error::Precondition("element 0 is not the identity".into()));
        }
        let g = Self { elements, dims };
        if let Some((i, j)) = g.closure_defect(tol) {
            return Err(Error::Precondition(format!(
                "product of elements {i} and {j} is not in the list"
            )));
        }
        Ok(g)
    }

    pub fn elements(&self) -> &[LocalSymmetry] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &LocalSymmetry {
        &self.elements[k]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    /// Index of the element whose tensor product equals `s`.
    pub fn find(&self, s: &LocalSymmetry, tol: f64) -> Option<usize> {
        self.elements.iter().position(|e| e.tensor_eq(s, tol))
    }

    /// First pair whose product is missing, if any.
    pub fn closure_defect(&self, tol: f64) -> Option<(usize, usize)> {
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                if self.find(&a.compose(b), tol).is_none() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Factors at one party, in element order.
    pub fn factors_at(&self, party: usize) -> Vec<CMatrix> {
        self.elements.iter().map(|e| e.factors[party].clone()).collect()
    }
}

/// Closure of the generators under products. Order: identity, then new
/// generators, then products in breadth-first order.
pub fn close_group(
    generators: &[LocalSymmetry],
    max_size: usize,
    tol: f64,
) -> Result<StabilizerGroup> {
    let first = generators.first().ok_or(Error::Empty("generators"))?;
    let dims: Vec<usize> = first.factors.iter().map(CMatrix::rows).collect();
    for g in generators {
        let gd: Vec<usize> = g.factors.iter().map(CMatrix::rows).collect();
        if gd != dims {
            return Err(Error::DimensionMismatch(format!(
                "generator dims {gd:?} vs {dims:?}"
            )));
        }
        let _ = LocalSymmetry::new(g.factors.clone(), tol)?;
    }
    let mut elements = vec![LocalSymmetry::identity(&dims)];
    let push = |elements: &mut Vec<LocalSymmetry>, s: LocalSymmetry| -> Result<bool> {
        if elements.iter().any(|e| e.tensor_eq(&s, tol)) {
            return Ok(false);
        }
        if elements.len() >= max_size {
            return Err(Error::ClosureOverflow(max_size));
        }
        elements.push(s);
        Ok(true)
    };
    for g in generators {
        push(&mut elements, g.clone())?;
    }
    let mut cursor = 0;
    while cursor < elements.len() {
        let current = elements[cursor].clone();
        for g in generators {
            push(&mut elements, current.compose(g))?;
        }
        cursor += 1;
    }
    Ok(StabilizerGroup { elements, dims })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerCheck {
    pub residuals: Vec<f64>,
    pub pass: bool,
}

/// ‖S|ψ⟩ − |ψ⟩‖ per element.
pub fn verify_stabilizer(
    psi: &StateVector,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<StabilizerCheck> {
    if psi.dims() != group.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs group dims {:?}",
            psi.dims(),
            group.dims()
        )));
    }
    let residuals = group
        .elements()
        .iter()
        .map(|s| s.apply(psi).map(|out| out.distance(psi)))
        .collect::<Result<Vec<_>>>()?;
    let pass = residuals.iter().all(|&r| r <= tol);
    Ok(StabilizerCheck { residuals, pass })
}

/// Frobenius norm of `[op, s]` and whether it is within `tol`.
pub fn commutes(op: &CMatrix, s: &CMatrix, tol: f64) -> Result<(bool, f64)> {
    if !op.is_square() || !s.is_square() || op.rows() != s.rows() {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {}x{} and {}x{}",
            op.rows(),
            op.cols(),
            s.rows(),
            s.cols()
        )));
    }
    let n = op.commutator(s).frobenius_norm();
    Ok((n <= tol, n))
}

/// Indices of elements whose factors commute with `ops[i]` at every party
/// except `exempt`. Pass `None` to require commutation everywhere.
pub fn admissible_set(
    ops: &[CMatrix],
    group: &StabilizerGroup,
    exempt: Option<usize>,
    tol: f64,
) -> Result<Vec<usize>> {
    if ops.len() != group.parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} operators for a {}-party group",
            ops.len(),
            group.parties()
        )));
    }
    let mut out = Vec::new();
    for (k, s) in group.elements().iter().enumerate() {
        let mut ok = true;
        for (i, g) in ops.iter().enumerate() {
            if Some(i) == exempt {
                continue;
            }
            if !commutes(g, &s.factors[i], tol)?.0 {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(k);
        }
    }
    Ok(out)
}

/// `(1/|S|) Σ_k S_k · op · S_k†`.
pub fn twirl(op: &CMatrix, subgroup: &[CMatrix]) -> Result<CMatrix> {
    if subgroup.is_empty() {
        return Err(Error::Empty("twirl subgroup"));
    }
    let mut acc = CMatrix::zeros(op.rows(), op.cols());
    for s in subgroup {
        if s.cols() != op.rows() {
            return Err(Error::DimensionMismatch("twirl element size".into()));
        }
        acc = &acc + &op.conjugate_by(s);
    }
    Ok(acc.scale_real(1.0 / subgroup.len() as f64))
}

/// Twirl over a whole group, with dense full-tensor elements.
pub fn twirl_group(op: &CMatrix, group: &StabilizerGroup) -> Result<CMatrix> {
    let mats: Vec<CMatrix> = group.elements().iter().map(LocalSymmetry::to_matrix).collect();
    twirl(op, &mats)
}

/// True iff `S_a S_b ∝ S_b S_a` for every pair.
pub fn pairwise_prop_commute(group: &StabilizerGroup, tol: f64) -> bool {
    first_non_prop_commuting_pair(group, tol).is_none()
}

pub fn first_non_prop_commuting_pair(
    group: &StabilizerGroup,
    tol: f64,
) -> Option<(usize, usize)> {
    let els = group.elements();
    for a in 0..els.len() {
        for b in a + 1..els.len() {
            if !prop_commute(&els[a], &els[b], tol) {
                return Some((a, b));
            }
        }
    }
    None
}

fn prop_commute(a: &LocalSymmetry, b: &LocalSymmetry, tol: f64) -> bool {
    a.factors.iter().zip(&b.factors).all(|(x, y)| {
        let ab = x * y;
        let ba = y * x;
        let (r, c) = ab.argmax_abs();
        let den = ba.get(r, c);
        if den.norm() <= f64::MIN_POSITIVE {
            return false;
        }
        let phase = ab.get(r, c) / den;
        let phase = phase / phase.norm();
        ab.distance(&ba.scale(phase)) <= tol
    })
}

/// Cyclic subgroup generated by one factor, as matrices: 𝟙, s, s², …
/// Stops when a power returns to a multiple of the identity.
pub fn cyclic_powers(s: &CMatrix, max_order: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let n = s.rows();
    let mut out = vec![CMatrix::identity(n)];
    let mut p = s.clone();
    while !p.is_scalar(tol) {
        if out.len() >= max_order {
            return Err(Error::ClosureOverflow(max_order));
        }
        out.push(p.clone());
        p = &p * s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, BlochVec, I};

    fn pauli_group(n: usize) -> StabilizerGroup {
        let gens = [
            LocalSymmetry::uniform(&pauli(1), n),
            LocalSymmetry::uniform(&pauli(3), n),
        ];
        close_group(&gens, DEFAULT_MAX_GROUP, 1e-9).unwrap()
    }

    #[test]
    fn pauli_closure_has_four_elements() {
        let g = pauli_group(4);
        assert_eq!(g.len(), 4);
        let y4 = LocalSymmetry::uniform(&pauli(2), 4);
        assert!(g.find(&y4, 1e-9).is_some());
    }

    #[test]
    fn identity_generator_gives_trivial_group() {
        let g = close_group(&[LocalSymmetry::identity(&[2, 2])], 8, 1e-9).unwrap();
        assert_eq!(g.len(), 1);
        assert!(pairwise_prop_commute(&g, 1e-9));
    }

    #[test]
    fn overflow_is_reported() {
        let r = exp_small_rotation();
        let gen = LocalSymmetry::uniform(&r, 2);
        assert_eq!(
            close_group(&[gen], 16, 1e-9).unwrap_err(),
            Error::ClosureOverflow(16)
        );
    }

    fn exp_small_rotation() -> CMatrix {
        crate::linalg::exp_i_pauli(0.1, 3)
    }

    #[test]
    fn compensating_phases_are_equal() {
        let a = LocalSymmetry::uniform(&pauli(1), 2);
        let b = LocalSymmetry {
            factors: vec![pauli(1).scale(I), pauli(1).scale(-I)],
        };
        assert!(a.tensor_eq(&b, 1e-12));
        let c = LocalSymmetry {
            factors: vec![pauli(1).scale(I), pauli(1)],
        };
        assert!(!a.tensor_eq(&c, 1e-12));
        let dense = a.to_matrix().distance(&c.to_matrix());
        assert!(c.tensor_distance(&a, 1.0).unwrap() >= dense - 1e-12);
    }

    #[test]
    fn zero_state_not_stabilized() {
        let g = pauli_group(4);
        let psi = StateVector::basis(vec![2; 4], 0).unwrap();
        let chk = verify_stabilizer(&psi, &g, 1e-9).unwrap();
        assert!(!chk.pass);
        let x = g
            .find(&LocalSymmetry::uniform(&pauli(1), 4), 1e-9)
            .unwrap();
        assert!((chk.residuals[x] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn commutator_examples() {
        let half = BlochVec::ZERO.encode();
        assert_eq!(commutes(&half, &pauli(2), 1e-12).unwrap(), (true, 0.0));
        let z = BlochVec::new(0.0, 0.0, 0.3).encode();
        assert!(commutes(&z, &pauli(3), 1e-12).unwrap().0);
        let g = BlochVec::new(0.1, 0.2, 0.3).encode();
        let (ok, n) = commutes(&g, &pauli(3), 1e-12).unwrap();
        // [x σ1 + y σ2, σ3] = −2i x σ2 + 2i y σ1, norm 2√2·√(x²+y²)
        assert!(!ok);
        assert!((n - 2.0 * 2f64.sqrt() * 0.05f64.sqrt()).abs() < 1e-14);
        assert!(commutes(&g, &CMatrix::identity(3), 1e-9).is_err());
    }

    #[test]
    fn admissible_with_z_bystanders() {
        let g = pauli_group(4);
        let ops = vec![
            BlochVec::new(0.1, 0.2, 0.3).encode(),
            BlochVec::new(0.0, 0.0, 0.2).encode(),
            BlochVec::new(0.0, 0.0, 0.1).encode(),
            BlochVec::new(0.0, 0.0, -0.1).encode(),
        ];
        let adm = admissible_set(&ops, &g, Some(0), 1e-9).unwrap();
        let z = g.find(&LocalSymmetry::uniform(&pauli(3), 4), 1e-9).unwrap();
        assert_eq!(adm, vec![0, z]);
        let all_half = vec![BlochVec::ZERO.encode(); 4];
        for j in 0..4 {
            assert_eq!(admissible_set(&all_half, &g, Some(j), 1e-9).unwrap().len(), 4);
        }
    }

    #[test]
    fn twirl_over_z_is_dephasing() {
        let h = BlochVec::new(0.1, -0.2, 0.15).encode();
        let t = twirl(&h, &[CMatrix::identity(2), pauli(3)]).unwrap();
        let want = CMatrix::diag(&[h.get(0, 0), h.get(1, 1)]);
        assert!(t.distance(&want) < 1e-15);
        assert!(twirl(&h, &[]).is_err());
    }

    #[test]
    fn pauli_group_prop_commutes() {
        assert!(pairwise_prop_commute(&pauli_group(4), 1e-9));
    }

    #[test]
    fn cyclic_powers_of_pauli() {
        let p = cyclic_powers(&pauli(3), 8, 1e-9).unwrap();
        assert_eq!(p.len(), 2);
    }
}
