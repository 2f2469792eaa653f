//! Decision procedures on states `g|Ψ_s⟩` of a class with finite stabilizer.

mod sep;

pub use sep::{sep_check, sep_source_construct};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{orbit_search, verify_orbit_witness, OrbitOptions, Status};
use crate::groups::{admissible_set, commutes, pairwise_prop_commute, twirl, StabilizerGroup};
use crate::linalg::{min_eigenvalue, pd_inv_sqrt, psd_sqrt, BlochVec, CMatrix, C64};

/// Smallest eigenvalue a state operator may have.
pub const MIN_STATE_EIG: f64 = 1e-8;

/// A state of a class, carried by its positive unit-trace local operators.
#[derive(Clone, Debug, PartialEq)]
pub struct StateInClass {
    pub class: String,
    ops: Vec<CMatrix>,
}

impl StateInClass {
    pub fn new(class: impl Into<String>, ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Empty("state operators"));
        }
        for op in &ops {
            if !op.is_square() {
                return Err(Error::DimensionMismatch("state operator is not square".into()));
            }
            let r = op.hermitian_residual();
            if r > 1e-10 {
                return Err(Error::NotHermitian(r));
            }
            let tr = op.trace();
            if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                return Err(Error::InvalidTrace(tr.re));
            }
            let lo = min_eigenvalue(op)?;
            if lo < MIN_STATE_EIG {
                return Err(Error::NotPositive(lo));
            }
        }
        Ok(Self {
            class: class.into(),
            ops: ops.iter().map(CMatrix::hermitian_part).collect(),
        })
    }

    pub fn from_bloch(class: impl Into<String>, vecs: &[BlochVec]) -> Result<Self> {
        Self::new(class, vecs.iter().map(|g| g.encode()).collect())
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn op(&self, party: usize) -> &CMatrix {
        &self.ops[party]
    }

    pub fn parties(&self) -> usize {
        self.ops.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.ops.iter().map(CMatrix::rows).collect()
    }

    /// Bloch vector of a qubit party.
    pub fn bloch(&self, party: usize) -> Option<BlochVec> {
        (self.ops[party].rows() == 2)
            .then(|| BlochVec::decode(&self.ops[party], 1e-9).ok())
            .flatten()
    }

    /// Same state with party `j` replaced.
    pub fn with_op(&self, j: usize, op: CMatrix) -> Result<Self> {
        let mut ops = self.ops.clone();
        *ops.get_mut(j).ok_or_else(|| Error::OutOfRange(format!("party {j}")))? = op;
        Self::new(self.class.clone(), ops)
    }

    /// Canonical local operators `g_i = √G_i`.
    pub fn local_roots(&self) -> Result<Vec<CMatrix>> {
        self.ops.iter().map(|g| psd_sqrt(g, 1e-9)).collect()
    }

    fn check_group(&self, group: &StabilizerGroup) -> Result<()> {
        if self.dims() != group.dims() {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} vs class dims {:?}",
                self.dims(),
                group.dims()
            )));
        }
        Ok(())
    }
}

/// A one-round step: weights over group elements and the new operator at
/// the acting party.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub symmetries: Vec<usize>,
    pub p: Vec<f64>,
    pub h: CMatrix,
    pub party: usize,
}

impl Witness {
    /// Re-checks the witness against a source state.
    pub fn verify(&self, source: &StateInClass, group: &StabilizerGroup, tol: f64) -> Result<f64> {
        source.check_group(group)?;
        let j = self.party;
        if j >= source.parties() {
            return Err(Error::InvalidWitness(format!("party {j} out of range")));
        }
        let adm = admissible_set(source.ops(), group, Some(j), tol)?;
        for &k in &self.symmetries {
            if !adm.contains(&k) {
                return Err(Error::InvalidWitness(format!(
                    "symmetry {k} does not commute with the other parties"
                )));
            }
        }
        let factors: Vec<CMatrix> = adm.iter().map(|&k| group.element(k).factors[j].clone()).collect();
        let support: Vec<usize> = self
            .symmetries
            .iter()
            .map(|k| adm.iter().position(|a| a == k).expect("checked above"))
            .collect();
        verify_orbit_witness(source.op(j), &factors, &support, &self.p, &self.h, tol)
    }
}

/// `A_k = √p_k · √H · S_k⁽ʲ⁾ · g_j⁻¹` for a witness.
pub fn povm_from_witness(
    source: &StateInClass,
    group: &StabilizerGroup,
    w: &Witness,
) -> Result<Vec<CMatrix>> {
    let j = w.party;
    let g_inv = pd_inv_sqrt(source.op(j))?;
    let h = psd_sqrt(&w.h, 1e-9)?;
    Ok(w
        .symmetries
        .iter()
        .zip(&w.p)
        .map(|(&k, &pk)| (&(&h * &group.element(k).factors[j]) * &g_inv).scale_real(pk.sqrt()))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reachability {
    pub reachable: bool,
    pub symmetry: Option<usize>,
    pub party: Option<usize>,
}

/// Commutation table: `table[k][i]` is true when element k's factor at
/// party i commutes with operator i.
fn commutation_table(ops: &[CMatrix], group: &StabilizerGroup, tol: f64) -> Result<Vec<Vec<bool>>> {
    group
        .elements()
        .iter()
        .map(|s| {
            ops.iter()
                .zip(&s.factors)
                .map(|(g, f)| commutes(g, f, tol).map(|c| c.0))
                .collect()
        })
        .collect()
}

/// Some non-identity S commutes at every party but one, and fails there.
pub fn check_reachable(
    target: &StateInClass,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<Reachability> {
    target.check_group(group)?;
    let table = commutation_table(target.ops(), group, tol)?;
    for (k, row) in table.iter().enumerate() {
        if k == group.identity_index() {
            continue;
        }
        let mut failing = row.iter().enumerate().filter(|(_, &c)| !c).map(|(i, _)| i);
        if let (Some(j), None) = (failing.next(), failing.next()) {
            return Ok(Reachability {
                reachable: true,
                symmetry: Some(k),
                party: Some(j),
            });
        }
    }
    Ok(Reachability {
        reachable: false,
        symmetry: None,
        party: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TrivialAdmissible,
    Twirl,
    OrbitSearch,
}

#[derive(Clone, Debug)]
pub struct Convertibility {
    pub party: usize,
    pub status: Status,
    pub admissible: Vec<usize>,
    pub witness: Option<Witness>,
    pub method: Method,
    pub residual: Option<f64>,
}

/// Tries to convert the source deterministically by a measurement of party j.
pub fn check_convertible(
    source: &StateInClass,
    group: &StabilizerGroup,
    j: usize,
    opts: &OrbitOptions,
) -> Result<Convertibility> {
    source.check_group(group)?;
    if j >= source.parties() {
        return Err(Error::OutOfRange(format!("party {j}")));
    }
    if opts.budget == 0 {
        return Err(Error::InvalidBudget);
    }
    let tol = opts.tol;
    let adm = admissible_set(source.ops(), group, Some(j), tol)?;
    let nontrivial: Vec<usize> = adm
        .iter()
        .copied()
        .filter(|&k| group.element(k).nontrivial_at(j, 1e-9))
        .collect();
    let no = |adm: Vec<usize>| Convertibility {
        party: j,
        status: Status::CertifiedNo,
        admissible: adm,
        witness: None,
        method: Method::TrivialAdmissible,
        residual: None,
    };
    if nontrivial.is_empty() {
        return Ok(no(adm));
    }
    let gj = source.op(j);
    let factors: Vec<CMatrix> = adm.iter().map(|&k| group.element(k).factors[j].clone()).collect();

    for &k in &nontrivial {
        if !commutes(gj, &group.element(k).factors[j], tol)?.0 {
            continue;
        }
        if let Some(w) = twirl_witness(source, group, j, k, &adm, &factors, opts)? {
            let residual = w.verify(source, group, tol)?;
            return Ok(Convertibility {
                party: j,
                status: Status::CertifiedYes,
                admissible: adm,
                witness: Some(w),
                method: Method::Twirl,
                residual: Some(residual),
            });
        }
    }

    let found = orbit_search(gj, &factors, opts)?;
    let witness = found.h.clone().map(|h| Witness {
        symmetries: found.support.iter().map(|&s| adm[s]).collect(),
        p: found.p.clone(),
        h,
        party: j,
    });
    Ok(Convertibility {
        party: j,
        status: found.status,
        admissible: adm,
        residual: witness.as_ref().map(|_| found.residual),
        witness,
        method: Method::OrbitSearch,
    })
}

/// `H = G_j + X − T(X)`, T the twirl over the cyclic group of element k.
fn twirl_witness(
    source: &StateInClass,
    group: &StabilizerGroup,
    j: usize,
    k: usize,
    adm: &[usize],
    factors: &[CMatrix],
    opts: &OrbitOptions,
) -> Result<Option<Witness>> {
    let s = group.element(k);
    let mut powers = vec![group.identity_index()];
    let mut cur = s.clone();
    while let Some(idx) = group.find(&cur, 1e-9) {
        if idx == group.identity_index() {
            break;
        }
        powers.push(idx);
        if powers.len() > group.len() {
            return Ok(None);
        }
        cur = cur.compose(s);
    }
    let gj = source.op(j);
    let d = gj.rows();
    let subgroup: Vec<CMatrix> = powers.iter().map(|&i| group.element(i).factors[j].clone()).collect();
    let lam = min_eigenvalue(gj)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(((j as u64) << 32) | k as u64);
    for _ in 0..8 {
        let mut x = CMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let z = if a == b {
                    C64::new(rng.random_range(-1.0..1.0), 0.0)
                } else {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
                x.set(a, b, z);
                x.set(b, a, z.conj());
            }
        }
        let off = &x - &twirl(&x, &subgroup)?;
        let n = off.frobenius_norm();
        if n <= 1e-12 {
            continue;
        }
        let h = gj + &off.scale_real(0.5 * lam / n);
        let p = vec![1.0 / powers.len() as f64; powers.len()];
        let support: Vec<usize> = powers
            .iter()
            .map(|i| adm.iter().position(|a| a == i))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Precondition("power of an admissible symmetry is not admissible".into()))?;
        if verify_orbit_witness(gj, factors, &support, &p, &h, opts.tol).is_ok() {
            return Ok(Some(Witness {
                symmetries: powers,
                p,
                h,
                party: j,
            }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MesCheck {
    pub value: bool,
    /// Some S ≠ 𝟙 commutes at every party.
    pub commuting_symmetry: Option<usize>,
    /// The reachability witness that violates the second condition.
    pub violation: Option<(usize, usize)>,
}

/// In the restricted MES and convertible by all-det steps.
pub fn check_mes_convertible(
    state: &StateInClass,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<MesCheck> {
    state.check_group(group)?;
    let table = commutation_table(state.ops(), group, tol)?;
    let commuting_symmetry = table
        .iter()
        .enumerate()
        .find(|(k, row)| *k != group.identity_index() && row.iter().all(|&c| c))
        .map(|(k, _)| k);
    let r = check_reachable(state, group, tol)?;
    let violation = r.symmetry.zip(r.party);
    Ok(MesCheck {
        value: commuting_symmetry.is_some() && violation.is_none(),
        commuting_symmetry,
        violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub reachable: Reachability,
    pub convertible: Vec<Convertibility>,
    pub mes_member: bool,
    pub mes_convertible: bool,
    pub isolated: Verdict,
}

pub fn classify(
    state: &StateInClass,
    group: &StabilizerGroup,
    opts: &OrbitOptions,
) -> Result<Classification> {
    let reachable = check_reachable(state, group, opts.tol)?;
    let convertible = (0..state.parties())
        .map(|j| check_convertible(state, group, j, opts))
        .collect::<Result<Vec<_>>>()?;
    let mes = check_mes_convertible(state, group, opts.tol)?;
    let any_yes = convertible.iter().any(|c| c.status == Status::CertifiedYes);
    let any_open = convertible.iter().any(|c| c.status == Status::Inconclusive);
    let isolated = if reachable.reachable || any_yes {
        Verdict::No
    } else if any_open {
        Verdict::Inconclusive
    } else {
        Verdict::Yes
    };
    Ok(Classification {
        mes_member: !reachable.reachable,
        reachable,
        convertible,
        mes_convertible: mes.value,
        isolated,
    })
}

#[derive(Clone, Debug)]
pub struct LockReport {
    pub before: Vec<Status>,
    pub after: Option<Vec<Status>>,
    /// Parties that were convertible and no longer are.
    pub locked: Vec<usize>,
    /// Parties that became convertible, with the symmetries their witness uses.
    pub unlocked: Vec<(usize, Vec<usize>)>,
    pub prop_commute: bool,
    /// False only if unlocking occurred in a pairwise proportionally commuting group.
    pub lemma4_consistent: bool,
}

pub fn lock_report(
    state: &StateInClass,
    group: &StabilizerGroup,
    step: Option<&Witness>,
    opts: &OrbitOptions,
) -> Result<LockReport> {
    let convert_all = |s: &StateInClass| -> Result<Vec<Convertibility>> {
        (0..s.parties()).map(|j| check_convertible(s, group, j, opts)).collect()
    };
    let before = convert_all(state)?;
    let prop_commute = pairwise_prop_commute(group, 1e-9);
    let mut report = LockReport {
        before: before.iter().map(|c| c.status).collect(),
        after: None,
        locked: Vec::new(),
        unlocked: Vec::new(),
        prop_commute,
        lemma4_consistent: true,
    };
    let Some(w) = step else { return Ok(report) };
    w.verify(state, group, opts.tol)?;
    let next = state.with_op(w.party, w.h.clone())?;
    let after = convert_all(&next)?;
    for (k, (b, a)) in before.iter().zip(&after).enumerate() {
        if k == w.party {
            continue;
        }
        match (b.status, a.status) {
            (Status::CertifiedYes, Status::CertifiedNo) => report.locked.push(k),
            (Status::CertifiedNo, Status::CertifiedYes) => {
                let syms = a.witness.as_ref().map(|x| x.symmetries.clone()).unwrap_or_default();
                report.unlocked.push((k, syms));
            }
            _ => {}
        }
    }
    report.after = Some(after.iter().map(|c| c.status).collect());
    report.lemma4_consistent = !(prop_commute && !report.unlocked.is_empty());
    Ok(report)
}
