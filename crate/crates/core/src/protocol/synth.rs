use super::{lu_equiv_in_class, run_tree, validate_povm, Outcome, ProtocolTree};
use crate::analysis::{StateInClass, Witness};
use crate::classes::{l_class, l_unitary, ClassSpec};
use crate::error::{Error, Result};
use crate::feasible::hull_membership;
use crate::groups::commutes;
use crate::linalg::{pauli, pd_inv_sqrt, psd_sqrt, BlochVec, CMatrix};

/// One-round tree from a witness: `A_k = √p_k h S_k⁽ʲ⁾ g_j⁻¹` with
/// corrections `U_k⁽ⁱ⁾ = g_i S_k⁽ⁱ⁾ g_i⁻¹` at the other parties.
pub fn synth_locc1(
    class: &ClassSpec,
    source: &StateInClass,
    witness: &Witness,
    tol: f64,
) -> Result<ProtocolTree> {
    let group = &class.stabilizer;
    let j = witness.party;
    if j >= source.parties() {
        return Err(Error::InvalidWitness(format!("party {j} out of range")));
    }
    if witness.symmetries.len() != witness.p.len() || witness.symmetries.is_empty() {
        return Err(Error::InvalidWitness("symmetries and weights differ in length".into()));
    }
    if let Some(&k) = witness.symmetries.iter().find(|&&k| k >= group.len()) {
        return Err(Error::InvalidWitness(format!("symmetry {k} not in the group")));
    }
    let roots = source.local_roots()?;
    let invs: Vec<CMatrix> = source.ops().iter().map(pd_inv_sqrt).collect::<Result<_>>()?;
    let h = psd_sqrt(&witness.h, 1e-9)?;
    let target = source.with_op(j, witness.h.clone())?;
    let leaf = ProtocolTree::leaf(&target);

    let mut outcomes = Vec::with_capacity(witness.symmetries.len());
    for (k, (&s, &pk)) in witness.symmetries.iter().zip(&witness.p).enumerate() {
        let sym = group.element(s);
        let mut unitaries = Vec::with_capacity(source.parties());
        for i in 0..source.parties() {
            if i == j {
                unitaries.push(CMatrix::identity(roots[i].rows()));
                continue;
            }
            let u = &(&roots[i] * &sym.factors[i]) * &invs[i];
            let residual = u.unitarity_residual();
            if residual > tol.max(1e-9) {
                return Err(Error::NonUnitaryCorrection {
                    party: i,
                    outcome: k,
                    residual,
                });
            }
            unitaries.push(u);
        }
        outcomes.push(Outcome {
            measurement: (&(&h * &sym.factors[j]) * &invs[j]).scale_real(pk.sqrt()),
            unitaries,
            probability: Some(pk),
            child: Box::new(leaf.clone()),
        });
    }
    let povm: Vec<CMatrix> = outcomes.iter().map(|o| o.measurement.clone()).collect();
    let r = validate_povm(&povm)?;
    if r > tol.max(1e-9) {
        return Err(Error::PovmResidual(r));
    }
    let tree = ProtocolTree::Node { party: j, outcomes };
    let report = run_tree(class, source, &tree, tol.max(1e-9))?;
    if !report.deterministic {
        return Err(Error::InvalidWitness("synthesized tree is not deterministic".into()));
    }
    Ok(tree)
}

/// The two-round L protocol with a probabilistic first step.
#[derive(Clone, Debug)]
pub struct TwoStepProtocol {
    pub tree: ProtocolTree,
    pub class: ClassSpec,
    pub source: StateInClass,
    pub target: StateInClass,
    /// First-round weight of `{h₁, g₂}`.
    pub p: f64,
    /// Second-round weights over `{𝟙, U, U†}` in each branch.
    pub q: [f64; 3],
    pub q_tilde: [f64; 3],
    pub intermediate: [StateInClass; 2],
}

fn fail(what: &str) -> Error {
    Error::Precondition(what.to_string())
}

/// Party 0 splits into `{h₁, g₂}` and `{h₁σ₃, g₂}`, with `h₁ = (x,x,x)`
/// fixed by U; party 1 then maps both branches to `{h₁, h₂}`.
pub fn synth_two_step_l(g1: BlochVec, g2: BlochVec, h2: BlochVec, tol: f64) -> Result<TwoStepProtocol> {
    if (g1.x - g1.y).abs() > tol {
        return Err(fail("g1: first two components unequal"));
    }
    let x = g1.z;
    if x.abs() <= tol {
        return Err(fail("g1: third component must be nonzero"));
    }
    let p = 0.5 * (g1.x / x + 1.0);
    if !(p > 0.0 && p < 1.0) {
        return Err(fail("g1: implied probability outside (0, 1)"));
    }
    if (h2.x + h2.y + h2.z).abs() > tol {
        return Err(fail("h2: components do not sum to zero"));
    }
    let h1 = BlochVec::new(x, x, x);
    for (name, v) in [("g1", g1), ("g2", g2), ("h1", h1), ("h2", h2)] {
        if v.norm() >= 0.5 {
            return Err(Error::Precondition(format!("{name}: Bloch norm not below 1/2")));
        }
    }
    let points = vec![
        vec![h2.x, h2.y, h2.z],
        vec![h2.z, h2.x, h2.y],
        vec![h2.y, h2.z, h2.x],
    ];
    let solve = |t: [f64; 3], name: &str| -> Result<[f64; 3]> {
        let m = hull_membership(&points, &t, tol, true);
        match m.feasibility.p {
            Some(q) if m.feasibility.is_yes() => Ok([q[0], q[1], q[2]]),
            _ => Err(Error::Precondition(format!("{name} not in the hull of the h2 orbit"))),
        }
    };
    let q = solve([g2.x, g2.y, g2.z], "g2")?;
    let q_tilde = solve([-g2.x, -g2.y, g2.z], "flipped g2")?;

    let class = l_class();
    let group = &class.stabilizer;
    let half = BlochVec::ZERO;
    let source = StateInClass::from_bloch("L", &[g1, g2, half, half])?;
    for i in 0..2 {
        for s in &group.elements()[1..] {
            if commutes(source.op(i), &s.factors[i], tol)?.0 {
                return Err(Error::Precondition(format!(
                    "source party {i} commutes with a nontrivial symmetry"
                )));
            }
        }
    }
    let target = StateInClass::from_bloch("L", &[h1, h2, half, half])?;
    let leaf = ProtocolTree::leaf(&target);

    let id = CMatrix::identity(2);
    let z = pauli(3);
    let u = l_unitary();
    let syms = [id.clone(), u.clone(), u.adjoint()];
    let rh1 = psd_sqrt(&h1.encode(), 1e-9)?;
    let rh2 = psd_sqrt(&h2.encode(), 1e-9)?;
    let g1_inv = pd_inv_sqrt(source.op(0))?;
    let g2_inv = pd_inv_sqrt(source.op(1))?;

    let second = |weights: &[f64; 3], flip: bool| -> ProtocolTree {
        let outcomes = syms
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > tol)
            .map(|(s, &w)| {
                let tail = if flip { s * &z } else { s.clone() };
                Outcome {
                    measurement: (&(&rh2 * &tail) * &g2_inv).scale_real(w.sqrt()),
                    unitaries: vec![s.clone(), id.clone(), tail.clone(), tail],
                    probability: Some(w),
                    child: Box::new(leaf.clone()),
                }
            })
            .collect();
        ProtocolTree::Node { party: 1, outcomes }
    };
    // weights at or below tol are dropped; renormalize the rest
    let renorm = |w: [f64; 3]| {
        let kept: f64 = w.iter().filter(|&&v| v > tol).sum();
        w.map(|v| if v > tol { v / kept } else { 0.0 })
    };
    let (q, q_tilde) = (renorm(q), renorm(q_tilde));

    let tree = ProtocolTree::Node {
        party: 0,
        outcomes: vec![
            Outcome {
                measurement: (&rh1 * &g1_inv).scale_real(p.sqrt()),
                unitaries: vec![id.clone(); 4],
                probability: Some(p),
                child: Box::new(second(&q, false)),
            },
            Outcome {
                measurement: (&(&rh1 * &z) * &g1_inv).scale_real((1.0 - p).sqrt()),
                unitaries: vec![id.clone(); 4],
                probability: Some(1.0 - p),
                child: Box::new(second(&q_tilde, true)),
            },
        ],
    };

    let first = StateInClass::new("L", vec![h1.encode(), source.op(1).clone(), half.encode(), half.encode()])?;
    let flipped = first.with_op(0, h1.encode().conjugate_by(&z))?;
    if lu_equiv_in_class(&first, &flipped, group, tol.max(1e-9))?.is_some() {
        return Err(fail("intermediate branches are LU-equivalent"));
    }
    let report = run_tree(&class, &source, &tree, tol.max(1e-9))?;
    if !report.deterministic {
        return Err(fail("two-step tree is not deterministic"));
    }
    Ok(TwoStepProtocol {
        tree,
        class,
        source,
        target,
        p,
        q,
        q_tilde,
        intermediate: [first, flipped],
    })
}
