//! Protocol trees: one acting party per node, conditioned unitaries on
//! every party, and an expected state at each leaf.

mod synth;

pub use synth::{synth_locc1, synth_two_step_l, TwoStepProtocol};

use serde::{Deserialize, Serialize};

use crate::analysis::StateInClass;
use crate::classes::ClassSpec;
use crate::error::{Error, Result};
use crate::groups::StabilizerGroup;
use crate::linalg::{apply_local, BlochVec, CMatrix};

/// Declared and computed probabilities must agree to this.
pub const PROBABILITY_CHECK: f64 = 1e-8;

/// Branches below this weight are not followed.
const NEGLIGIBLE: f64 = 1e-14;

/// A party's operator as written in files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalOp {
    Bloch([f64; 3]),
    Matrix(CMatrix),
}

impl LocalOp {
    pub fn to_matrix(&self) -> CMatrix {
        match self {
            LocalOp::Bloch(b) => BlochVec::from_array(*b).encode(),
            LocalOp::Matrix(m) => m.clone(),
        }
    }

    /// Qubit operators become Bloch vectors.
    pub fn from_matrix(m: &CMatrix) -> Self {
        match BlochVec::decode(m, 1e-9) {
            Ok(b) => LocalOp::Bloch(b.to_array()),
            Err(_) => LocalOp::Matrix(m.clone()),
        }
    }

    pub fn state(class: &str, ops: &[LocalOp]) -> Result<StateInClass> {
        StateInClass::new(class, ops.iter().map(LocalOp::to_matrix).collect())
    }

    pub fn list(state: &StateInClass) -> Vec<LocalOp> {
        state.ops().iter().map(LocalOp::from_matrix).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolTree {
    Node { party: usize, outcomes: Vec<Outcome> },
    Leaf { parties: Vec<LocalOp> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub measurement: CMatrix,
    /// One per party; applied after the measurement.
    pub unitaries: Vec<CMatrix>,
    /// Declared conditional probability, checked against the simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub child: Box<ProtocolTree>,
}

impl ProtocolTree {
    pub fn leaf(state: &StateInClass) -> Self {
        ProtocolTree::Leaf {
            parties: LocalOp::list(state),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ProtocolTree::Leaf { .. } => 0,
            ProtocolTree::Node { outcomes, .. } => {
                1 + outcomes.iter().map(|o| o.child.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Outcome operators of the root node.
    pub fn root_povm(&self) -> Vec<CMatrix> {
        match self {
            ProtocolTree::Leaf { .. } => Vec::new(),
            ProtocolTree::Node { outcomes, .. } => {
                outcomes.iter().map(|o| o.measurement.clone()).collect()
            }
        }
    }
}

/// `‖Σ M†M − 𝟙‖` in Frobenius norm.
pub fn validate_povm(ops: &[CMatrix]) -> Result<f64> {
    let first = ops.first().ok_or(Error::Empty("POVM"))?;
    let d = first.rows();
    let mut acc = CMatrix::identity(d).scale_real(-1.0);
    for m in ops {
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "POVM element {}x{} in dimension {d}",
                m.rows(),
                m.cols()
            )));
        }
        acc = &acc + &(&m.adjoint() * m);
    }
    Ok(acc.frobenius_norm())
}

/// `Some(k)` for the first group element with `S_k† A_i S_k = B_i` at every party.
pub fn lu_equiv_in_class(
    a: &StateInClass,
    b: &StateInClass,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<Option<usize>> {
    if a.dims() != b.dims() || a.dims() != group.dims() {
        return Err(Error::DimensionMismatch("states and class differ in dimensions".into()));
    }
    Ok(group.elements().iter().position(|s| {
        a.ops()
            .iter()
            .zip(b.ops())
            .zip(&s.factors)
            .all(|((x, y), f)| x.conjugate_by_adjoint(f).distance(y) <= tol)
    }))
}

#[derive(Clone, Debug)]
pub struct Branch {
    /// Outcome index at each level.
    pub path: Vec<usize>,
    pub probability: f64,
    pub leaf: StateInClass,
    pub declared: StateInClass,
    /// Group element relating the computed and declared leaves.
    pub equivalence: Option<usize>,
    /// `|⟨Φ_declared|Φ_computed⟩|²`, both normalized.
    pub fidelity: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub branches: Vec<Branch>,
    pub max_povm_residual: f64,
    /// Largest gap between declared and simulated conditional probabilities.
    pub probability_mismatch: f64,
    /// Every leaf matches its declaration and all leaves agree.
    pub deterministic: bool,
}

impl RunReport {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

struct Walk<'a> {
    class: &'a ClassSpec,
    tol: f64,
    branches: Vec<Branch>,
    povm: f64,
    mismatch: f64,
}

/// Simulates every branch on the local operators. Operator `g_j` of the
/// acting party becomes `U_j M g_j`, the others `U_i g_i`.
pub fn run_tree(
    class: &ClassSpec,
    state: &StateInClass,
    tree: &ProtocolTree,
    tol: f64,
) -> Result<RunReport> {
    if state.dims() != class.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs class dims {:?}",
            state.dims(),
            class.dims()
        )));
    }
    let mut walk = Walk {
        class,
        tol,
        branches: Vec::new(),
        povm: 0.0,
        mismatch: 0.0,
    };
    walk.visit(tree, state.local_roots()?, &mut Vec::new(), 1.0)?;
    let group = &class.stabilizer;
    let agree = match walk.branches.first() {
        None => false,
        Some(first) => walk.branches.iter().try_fold(true, |ok, b| {
            Ok::<_, Error>(ok && lu_equiv_in_class(&first.leaf, &b.leaf, group, tol.max(1e-9))?.is_some())
        })?,
    };
    let deterministic = agree
        && walk.povm <= tol.max(1e-9)
        && walk.mismatch <= PROBABILITY_CHECK
        && walk.branches.iter().all(|b| b.equivalence.is_some());
    Ok(RunReport {
        branches: walk.branches,
        max_povm_residual: walk.povm,
        probability_mismatch: walk.mismatch,
        deterministic,
    })
}

impl Walk<'_> {
    fn visit(
        &mut self,
        tree: &ProtocolTree,
        ops: Vec<CMatrix>,
        path: &mut Vec<usize>,
        weight: f64,
    ) -> Result<()> {
        let n = ops.len();
        match tree {
            ProtocolTree::Leaf { parties } => self.finish_leaf(parties, &ops, path, weight),
            ProtocolTree::Node { party, outcomes } => {
                let j = *party;
                if j >= n {
                    return Err(Error::OutOfRange(format!("acting party {j}")));
                }
                let povm: Vec<CMatrix> = outcomes.iter().map(|o| o.measurement.clone()).collect();
                if povm.first().is_some_and(|m| m.rows() != ops[j].rows()) {
                    return Err(Error::DimensionMismatch(format!("measurement at party {j}")));
                }
                let r = validate_povm(&povm)?;
                self.povm = self.povm.max(r);
                let psi = &self.class.representative;
                let base = apply_local(&ops, psi)?.norm().powi(2);
                let mut total = 0.0;
                let mut children = Vec::with_capacity(outcomes.len());
                for (k, o) in outcomes.iter().enumerate() {
                    if o.unitaries.len() != n {
                        return Err(Error::DimensionMismatch(format!(
                            "outcome {k} has {} unitaries for {n} parties",
                            o.unitaries.len()
                        )));
                    }
                    for (i, u) in o.unitaries.iter().enumerate() {
                        let res = u.unitarity_residual();
                        if u.rows() != ops[i].rows() || res > self.tol.max(1e-9) {
                            return Err(Error::NonUnitaryCorrection {
                                party: i,
                                outcome: k,
                                residual: res,
                            });
                        }
                    }
                    let mut next = ops.clone();
                    next[j] = &o.measurement * &ops[j];
                    let p = apply_local(&next, psi)?.norm().powi(2) / base;
                    for (g, u) in next.iter_mut().zip(&o.unitaries) {
                        *g = u * &*g;
                    }
                    if let Some(d) = o.probability {
                        self.mismatch = self.mismatch.max((d - p).abs());
                    }
                    total += p;
                    children.push((p, next));
                }
                if (total - 1.0).abs() > self.tol.max(1e-9) {
                    return Err(Error::ProbabilityDeficit {
                        path: format!("{path:?}"),
                        total,
                    });
                }
                for (k, ((p, next), o)) in children.into_iter().zip(outcomes).enumerate() {
                    if p * weight <= NEGLIGIBLE {
                        continue;
                    }
                    path.push(k);
                    self.visit(&o.child, next, path, weight * p)?;
                    path.pop();
                }
                Ok(())
            }
        }
    }

    fn finish_leaf(
        &mut self,
        parties: &[LocalOp],
        ops: &[CMatrix],
        path: &[usize],
        weight: f64,
    ) -> Result<()> {
        let name = &self.class.name;
        let declared = LocalOp::state(name, parties)?;
        let leaf_ops: Vec<CMatrix> = ops
            .iter()
            .map(|g| {
                let gg = &g.adjoint() * g;
                let tr = gg.trace().re;
                gg.scale_real(1.0 / tr).hermitian_part()
            })
            .collect();
        let leaf = StateInClass::new(name.clone(), leaf_ops)?;
        let equivalence = lu_equiv_in_class(&leaf, &declared, &self.class.stabilizer, self.tol.max(1e-9))?;
        let psi = &self.class.representative;
        let got = apply_local(ops, psi)?.normalized()?;
        let want = apply_local(&declared.local_roots()?, psi)?.normalized()?;
        self.branches.push(Branch {
            path: path.to_vec(),
            probability: weight,
            leaf,
            declared,
            equivalence,
            fidelity: got.fidelity(&want),
        });
        Ok(())
    }
}
