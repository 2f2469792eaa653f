//! Concrete SLOCC classes and their stabilizers.

mod seed;

pub use seed::{
    alpha_generic, beta_in_p, build_psi_m, generic_chain_check, is_generic, lambda_map,
    project_pairs, psi2, sample_generic_alpha, swap_qubits, symmetrizer_k, verify_uk_invariance,
    AlphaVec, BuildPath, ChainReport, GenericityRule, LambdaImage,
};

use crate::error::{Error, Result};
use crate::groups::{close_group, verify_stabilizer, LocalSymmetry, StabilizerGroup, DEFAULT_MAX_GROUP};
use crate::linalg::{exp_i_pauli, pauli, StateVector, C64, ONE, ZERO};

/// A class representative together with its finite local stabilizer.
#[derive(Clone, Debug)]
pub struct ClassSpec {
    pub name: String,
    pub representative: StateVector,
    pub stabilizer: StabilizerGroup,
}

impl ClassSpec {
    /// Checks that every element fixes the representative within `tol`.
    pub fn new(
        name: impl Into<String>,
        representative: StateVector,
        stabilizer: StabilizerGroup,
        tol: f64,
    ) -> Result<Self> {
        let check = verify_stabilizer(&representative, &stabilizer, tol)?;
        if let Some((index, &residual)) = check
            .residuals
            .iter()
            .enumerate()
            .find(|(_, &r)| r > tol)
        {
            return Err(Error::NotStabilized { index, residual });
        }
        Ok(Self {
            name: name.into(),
            representative,
            stabilizer,
        })
    }

    pub fn dims(&self) -> &[usize] {
        self.representative.dims()
    }

    pub fn parties(&self) -> usize {
        self.representative.parties()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell(kind: BellKind) -> StateVector {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let amps = match kind {
        BellKind::PhiPlus => vec![h, ZERO, ZERO, h],
        BellKind::PhiMinus => vec![h, ZERO, ZERO, -h],
        BellKind::PsiPlus => vec![ZERO, h, h, ZERO],
        BellKind::PsiMinus => vec![ZERO, h, -h, ZERO],
    };
    StateVector::qubits(2, amps).expect("four amplitudes")
}

/// `U = exp(iπ/4 σ₂) exp(iπ/4 σ₁)`, the order-three element of the L class.
pub fn l_unitary() -> crate::linalg::CMatrix {
    let q = std::f64::consts::FRAC_PI_4;
    &exp_i_pauli(q, 2) * &exp_i_pauli(q, 1)
}

/// The L state: `(φ⁻φ⁻ + e^{iπ/3} φ⁺φ⁺ + e^{2iπ/3} ψ⁺ψ⁺)/√3`, pairs (0,1)(2,3).
pub fn l_state() -> StateVector {
    let pair = |k| {
        let b = bell(k);
        b.kron(&b)
    };
    let w1 = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let w2 = w1 * w1;
    let terms = [
        (ONE, pair(BellKind::PhiMinus)),
        (w1, pair(BellKind::PhiPlus)),
        (w2, pair(BellKind::PsiPlus)),
    ];
    let s = 1.0 / 3f64.sqrt();
    let amps = (0..16)
        .map(|i| terms.iter().map(|(c, v)| c * v.amplitudes()[i]).sum::<C64>() * s)
        .collect();
    StateVector::qubits(4, amps).expect("sixteen amplitudes")
}

/// The L class with its 12-element stabilizer. `U^{⊗4}` multiplies |L⟩ by
/// `e^{−2iπ/3}`, so the generator carries the compensating factor `e^{iπ/6}`.
pub fn l_class() -> ClassSpec {
    let u = l_unitary().scale(C64::from_polar(1.0, std::f64::consts::PI / 6.0));
    let gens = [
        LocalSymmetry::uniform(&u, 4),
        LocalSymmetry::uniform(&pauli(1), 4),
        LocalSymmetry::uniform(&pauli(3), 4),
    ];
    let group = close_group(&gens, DEFAULT_MAX_GROUP, 1e-9).expect("finite group");
    ClassSpec::new("L", l_state(), group, 1e-9).expect("stabilizer fixes |L⟩")
}

/// `{σ_i^{⊗n}}`, identity first.
pub fn pauli_group(n: usize) -> Result<StabilizerGroup> {
    if n == 0 || n % 4 != 0 {
        // σ₁σ₂ = iσ₃ per party, so the strings close only when i^n = 1.
        return Err(Error::OutOfRange(format!("Pauli strings close for n divisible by 4, got {n}")));
    }
    let elements = (0..4).map(|i| LocalSymmetry::uniform(&pauli(i), n)).collect();
    StabilizerGroup::from_elements(elements, 1e-9)
}

pub fn pauli_class(n: usize, representative: StateVector, tol: f64) -> Result<ClassSpec> {
    if representative.dims() != vec![2; n].as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "representative dims {:?} for {n} qubits",
            representative.dims()
        )));
    }
    ClassSpec::new(format!("pauli{n}"), representative, pauli_group(n)?, tol)
}

pub const BUILTIN_CLASSES: [&str; 4] = ["pauli4", "pauli8", "pauli16", "L"];

/// Built-in classes; Pauli classes use the recursive state at the default α.
pub fn builtin(name: &str) -> Result<ClassSpec> {
    let m = match name {
        "L" => return Ok(l_class()),
        "pauli4" => 2,
        "pauli8" => 3,
        "pauli16" => 4,
        _ => return Err(Error::OutOfRange(format!("unknown class {name:?}"))),
    };
    let psi = build_psi_m(&AlphaVec::default_generic(), m, BuildPath::Recursive)?;
    pauli_class(1 << m, psi, 1e-9)
}
