//! Monte-Carlo volumes over declared slices, with all-det reachability
//! decided by a direct chain of one-party steps.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{check_reachable, StateInClass, Witness};
use crate::classes::ClassSpec;
use crate::error::{Error, Result};
use crate::feasible::{simplex_solve, SimplexFeasibility};
use crate::groups::{admissible_set, StabilizerGroup};
use crate::linalg::{hermitian_to_real_vec, BlochVec, CMatrix};

/// Radius of the sampling ball; keeps operators strictly positive.
pub const BALL_RADIUS: f64 = 0.5 - 1e-6;

/// Default cap on parties for the ordering scan.
pub const DEFAULT_CHAIN_CAP: usize = 4;

pub const DEFAULT_SAMPLES: usize = 2000;

/// Weights below this are dropped from a step's support.
const SUPPORT_EPS: f64 = 1e-12;

/// User-supplied sampler for a custom slice.
pub trait SliceSampler: Send + Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<StateInClass>;
    fn describe(&self) -> String;
}

#[derive(Clone)]
pub enum Slice {
    /// Party `party` uniform in the Bloch ball, the others fixed.
    PartyBall {
        party: usize,
        fixed: StateInClass,
    },
    /// `G_j(t) = t·H + (1−t)·S†HS` with t uniform on [0, 1].
    Segment {
        party: usize,
        h: CMatrix,
        s: CMatrix,
        fixed: StateInClass,
    },
    Custom(Arc<dyn SliceSampler>),
}

impl fmt::Debug for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Slice {
    pub fn describe(&self) -> String {
        match self {
            Slice::PartyBall { party, .. } => format!("party-ball:{party}"),
            Slice::Segment { party, h, .. } => match BlochVec::decode(h, 1e-9) {
                Ok(b) => format!("segment:{party}:{},{},{}", b.x, b.y, b.z),
                Err(_) => format!("segment:{party}"),
            },
            Slice::Custom(c) => c.describe(),
        }
    }

    /// The segment point at parameter t.
    pub fn segment_point(&self, t: f64) -> Result<StateInClass> {
        let Slice::Segment { party, h, s, fixed } = self else {
            return Err(Error::Precondition("not a segment slice".into()));
        };
        let g = &h.scale_real(t) + &h.conjugate_by_adjoint(s).scale_real(1.0 - t);
        fixed.with_op(*party, g.hermitian_part())
    }
}

fn ball_point(rng: &mut ChaCha8Rng) -> BlochVec {
    loop {
        let d: [f64; 3] = [0; 3].map(|_| rng.sample(StandardNormal));
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if n > 1e-300 {
            let r = BALL_RADIUS * rng.random::<f64>().cbrt();
            return BlochVec::from_array(d.map(|c| c * r / n));
        }
    }
}

fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic in `(seed, index)`.
pub fn sample_state(slice: &Slice, seed: u64, index: u64) -> Result<StateInClass> {
    let mut rng = substream(seed, index);
    match slice {
        Slice::PartyBall { party, fixed } => {
            if fixed.dims().get(*party) != Some(&2) {
                return Err(Error::DimensionMismatch(format!("party {party} is not a qubit")));
            }
            fixed.with_op(*party, ball_point(&mut rng).encode())
        }
        Slice::Segment { .. } => slice.segment_point(rng.random::<f64>()),
        Slice::Custom(c) => c.sample(&mut rng),
    }
}

/// Can one LOCC_j step map `source` to `source` with party j set to `target_j`?
pub fn all_det_step(
    source: &StateInClass,
    target_j: &CMatrix,
    j: usize,
    group: &StabilizerGroup,
    tol: f64,
) -> Result<(SimplexFeasibility, Vec<usize>)> {
    if j >= source.parties() {
        return Err(Error::OutOfRange(format!("party {j}")));
    }
    if target_j.rows() != source.op(j).rows() || !target_j.is_square() {
        return Err(Error::DimensionMismatch(format!("target operator at party {j}")));
    }
    let adm = admissible_set(source.ops(), group, Some(j), tol)?;
    let cols: Vec<Vec<f64>> = adm
        .iter()
        .map(|&k| hermitian_to_real_vec(&target_j.conjugate_by_adjoint(&group.element(k).factors[j])))
        .collect();
    let b = hermitian_to_real_vec(source.op(j));
    Ok((simplex_solve(&cols, &b, tol), adm))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub party: usize,
    pub symmetries: Vec<usize>,
    pub p: Vec<f64>,
    /// Operator the party ends up with.
    #[serde(skip)]
    pub h: Option<CMatrix>,
}

impl ChainStep {
    pub fn witness(&self) -> Option<Witness> {
        self.h.clone().map(|h| Witness {
            symmetries: self.symmetries.clone(),
            p: self.p.clone(),
            h,
            party: self.party,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    /// A yes is certified; a no holds only within the direct-chain model.
    pub reachable: bool,
    pub order: Vec<usize>,
    pub steps: Vec<ChainStep>,
    /// Group element whose conjugate of the target was reached.
    pub representative: Option<usize>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Orders the differing parties and sets each directly to its target.
pub fn all_det_chain(
    source: &StateInClass,
    target: &StateInClass,
    group: &StabilizerGroup,
    tol: f64,
    cap: usize,
) -> Result<ChainResult> {
    if source.dims() != target.dims() || source.dims() != group.dims() {
        return Err(Error::DimensionMismatch("source, target and class differ".into()));
    }
    let n = source.parties();
    if n > cap {
        return Err(Error::TooManyParties(n, cap));
    }
    let no = ChainResult {
        reachable: false,
        order: Vec::new(),
        steps: Vec::new(),
        representative: None,
    };
    for (r, s) in group.elements().iter().enumerate() {
        let rep: Vec<CMatrix> = target
            .ops()
            .iter()
            .zip(&s.factors)
            .map(|(t, f)| t.conjugate_by_adjoint(f).hermitian_part())
            .collect();
        let differ: Vec<usize> = (0..n).filter(|&i| source.op(i).distance(&rep[i]) > tol).collect();
        if differ.is_empty() {
            return Ok(ChainResult {
                reachable: true,
                representative: Some(r),
                ..no
            });
        }
        'order: for order in permutations(&differ) {
            let mut cur = source.clone();
            let mut steps = Vec::with_capacity(order.len());
            for &j in &order {
                let (fit, adm) = all_det_step(&cur, &rep[j], j, group, tol)?;
                let yes = fit.is_yes();
                let Some(p) = fit.p.filter(|_| yes) else { continue 'order };
                let (symmetries, p): (Vec<usize>, Vec<f64>) = adm
                    .iter()
                    .zip(&p)
                    .filter(|(_, &w)| w > SUPPORT_EPS)
                    .map(|(&k, &w)| (k, w))
                    .unzip();
                let total: f64 = p.iter().sum();
                steps.push(ChainStep {
                    party: j,
                    symmetries,
                    p: p.iter().map(|w| w / total).collect(),
                    h: Some(rep[j].clone()),
                });
                cur = cur.with_op(j, rep[j].clone())?;
            }
            return Ok(ChainResult {
                reachable: true,
                order,
                steps,
                representative: Some(r),
            });
        }
    }
    Ok(no)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeKind {
    Accessible,
    Source,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub kind: Option<VolumeKind>,
    pub hits: usize,
    pub samples: usize,
    pub fraction: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub seed: u64,
    pub slice: String,
    pub model: String,
}

impl VolumeEstimate {
    fn new(kind: Option<VolumeKind>, hits: usize, samples: usize, seed: u64, slice: String, model: &str) -> Self {
        let f = hits as f64 / samples as f64;
        Self {
            kind,
            hits,
            samples,
            fraction: f,
            half_width: 1.96 * (f * (1.0 - f) / samples as f64).sqrt(),
            seed,
            slice,
            model: model.to_string(),
        }
    }
}

/// Fraction of slice samples reachable from (accessible) or reaching
/// (source) the anchor by a direct all-det chain.
pub fn estimate_volume(
    kind: VolumeKind,
    anchor: &StateInClass,
    slice: &Slice,
    group: &StabilizerGroup,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let hits = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_state(slice, seed, i)?;
            let r = match kind {
                VolumeKind::Accessible => all_det_chain(anchor, &s, group, tol, DEFAULT_CHAIN_CAP)?,
                VolumeKind::Source => all_det_chain(&s, anchor, group, tol, DEFAULT_CHAIN_CAP)?,
            };
            Ok(usize::from(r.reachable))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(VolumeEstimate::new(Some(kind), hits, samples, seed, slice.describe(), "direct-chain"))
}

/// `E_a = V/V_sup`, `E_s = 1 − V/V_sup`.
pub fn entanglement_ratio(v: &VolumeEstimate, v_sup: f64, kind: VolumeKind) -> Result<f64> {
    if !(v_sup > 0.0) {
        return Err(Error::InvalidVolume(v_sup));
    }
    let r = v.fraction / v_sup;
    Ok(match kind {
        VolumeKind::Accessible => r,
        VolumeKind::Source => 1.0 - r,
    })
}

/// Fraction of uniformly sampled qubit states that are LOCC-reachable.
pub fn corollary2_fraction(class: &ClassSpec, samples: usize, seed: u64, tol: f64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if class.dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch("corollary check needs a qubit class".into()));
    }
    let n = class.parties();
    let hits = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let b: Vec<BlochVec> = (0..n).map(|_| ball_point(&mut rng)).collect();
            let s = StateInClass::from_bloch(class.name.clone(), &b)?;
            Ok(usize::from(check_reachable(&s, &class.stabilizer, tol)?.reachable))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(VolumeEstimate::new(None, hits, samples, seed, "all-party-ball".into(), "reachability"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{builtin, l_class, pauli_group};
    use crate::linalg::pauli;
    use crate::protocol::{run_tree, synth_locc1};

    fn st(b: &[[f64; 3]]) -> StateInClass {
        let v: Vec<BlochVec> = b.iter().map(|&a| BlochVec::from_array(a)).collect();
        StateInClass::from_bloch("pauli4", &v).unwrap()
    }

    const HALF: [f64; 3] = [0.0; 3];

    fn segment(t0: f64) -> (Slice, StateInClass) {
        let fixed = st(&[HALF; 4]);
        let slice = Slice::Segment {
            party: 0,
            h: BlochVec::new(0.1, 0.2, 0.3).encode(),
            s: pauli(3),
            fixed,
        };
        let anchor = slice.segment_point(t0).unwrap();
        (slice, anchor)
    }

    #[test]
    fn ball_moment() {
        let fixed = st(&[HALF; 4]);
        let slice = Slice::PartyBall { party: 2, fixed };
        let n = 100_000;
        let norms: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| sample_state(&slice, 11, i).unwrap().bloch(2).unwrap().norm())
            .collect();
        let mean = norms.iter().sum::<f64>() / n as f64;
        // E r = 3R/4, Var r = 3R²/80
        let r = BALL_RADIUS;
        let sigma = (3.0 * r * r / 80.0 / n as f64).sqrt();
        assert!((mean - 0.75 * r).abs() < 3.0 * sigma, "{mean}");
        assert!(norms.iter().all(|&x| x < 0.5));
    }

    #[test]
    fn sampling_is_deterministic() {
        let (slice, _) = segment(0.8);
        assert_eq!(sample_state(&slice, 3, 17).unwrap(), sample_state(&slice, 3, 17).unwrap());
        assert_ne!(sample_state(&slice, 3, 17).unwrap(), sample_state(&slice, 3, 18).unwrap());
        let end = slice.segment_point(0.0).unwrap().bloch(0).unwrap();
        assert!((end.x + 0.1).abs() < 1e-15 && (end.y + 0.2).abs() < 1e-15 && (end.z - 0.3).abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        let g = pauli_group(4).unwrap();
        let s = st(&[[0.0, 0.0, 0.06], HALF, HALF, HALF]);
        let (same, _) = all_det_step(&s, s.op(0), 0, &g, 1e-9).unwrap();
        assert!(same.is_yes());

        let (fit, adm) = all_det_step(&s, &BlochVec::new(0.0, 0.0, 0.1).encode(), 0, &g, 1e-9).unwrap();
        assert_eq!(adm, vec![0, 1, 2, 3]);
        let p = fit.p.unwrap();
        assert!((p[0] + p[3] - 0.8).abs() < 1e-9 && (p[1] + p[2] - 0.2).abs() < 1e-9);

        let (fit, _) = all_det_step(&s, &BlochVec::new(0.0, 0.0, 0.04).encode(), 0, &g, 1e-9).unwrap();
        assert!(!fit.is_yes());
    }

    #[test]
    fn chain_examples() {
        let g = pauli_group(4).unwrap();
        let s = st(&[[0.1, -0.2, 0.05], HALF, HALF, HALF]);
        let r = all_det_chain(&s, &s, &g, 1e-9, 4).unwrap();
        assert!(r.reachable && r.steps.is_empty());

        // z-aligned bystanders leave σ₃ alone, which fixes a z-axis target
        let blocked = st(&[[0.0, 0.0, 0.06], [0.0, 0.0, 0.2], [0.0, 0.0, 0.2], [0.0, 0.0, 0.2]]);
        let t = blocked.with_op(0, BlochVec::new(0.0, 0.0, 0.1).encode()).unwrap();
        assert!(!all_det_chain(&blocked, &t, &g, 1e-9, 4).unwrap().reachable);

        let src = st(&[HALF; 4]);
        let t = st(&[[0.0, 0.0, 0.1], HALF, HALF, HALF]);
        let r = all_det_chain(&src, &t, &g, 1e-9, 4).unwrap();
        assert!(r.reachable);
        assert_eq!(r.order, vec![0]);
        let w = r.steps[0].witness().unwrap();
        let class = builtin("pauli4").unwrap();
        let tree = synth_locc1(&class, &src, &w, 1e-9).unwrap();
        assert!(run_tree(&class, &src, &tree, 1e-9).unwrap().deterministic);

        let g8 = pauli_group(8).unwrap();
        let big = StateInClass::from_bloch("pauli8", &[BlochVec::ZERO; 8]).unwrap();
        assert!(matches!(
            all_det_chain(&big, &big, &g8, 1e-9, 4),
            Err(Error::TooManyParties(8, 4))
        ));
    }

    #[test]
    fn segment_volume() {
        let (slice, anchor) = segment(0.8);
        let g = pauli_group(4).unwrap();
        let v = estimate_volume(VolumeKind::Source, &anchor, &slice, &g, 2000, 5, 1e-9).unwrap();
        assert!((v.fraction - 0.6).abs() <= 3.0 * v.half_width, "{v:?}");
        let again = estimate_volume(VolumeKind::Source, &anchor, &slice, &g, 2000, 5, 1e-9).unwrap();
        assert_eq!(v, again);
        let e = entanglement_ratio(&v, 1.0, VolumeKind::Source).unwrap();
        assert!((e - 0.4).abs() <= v.half_width);
    }

    #[test]
    fn segment_monotone() {
        let g = pauli_group(4).unwrap();
        let mut last = -1.0;
        for t0 in [0.5, 0.6, 0.7, 0.8, 0.9] {
            let (slice, anchor) = segment(t0);
            let v = estimate_volume(VolumeKind::Source, &anchor, &slice, &g, 400, 9, 1e-9).unwrap();
            assert!(v.fraction >= last);
            last = v.fraction;
        }
    }

    #[test]
    fn isolated_anchor_accesses_nothing() {
        let g = pauli_group(4).unwrap();
        let anchor = st(&[[0.1, 0.2, 0.3], [0.3, -0.1, 0.2], [-0.2, 0.25, 0.1], [0.05, 0.3, -0.2]]);
        let slice = Slice::PartyBall { party: 0, fixed: anchor.clone() };
        let v = estimate_volume(VolumeKind::Accessible, &anchor, &slice, &g, 200, 1, 1e-9).unwrap();
        assert_eq!(v.hits, 0);
        assert_eq!(entanglement_ratio(&v, 1.0, VolumeKind::Accessible).unwrap(), 0.0);
    }

    #[test]
    fn ratio_and_sample_errors() {
        let v = VolumeEstimate::new(Some(VolumeKind::Source), 5, 5, 0, String::new(), "");
        assert_eq!(entanglement_ratio(&v, 1.0, VolumeKind::Source).unwrap(), 0.0);
        assert!(matches!(entanglement_ratio(&v, 0.0, VolumeKind::Source), Err(Error::InvalidVolume(_))));
        assert!(matches!(corollary2_fraction(&l_class(), 0, 0, 1e-9), Err(Error::NoSamples)));
    }

    #[test]
    fn corollary_small() {
        for class in [builtin("pauli4").unwrap(), l_class()] {
            let v = corollary2_fraction(&class, 500, 2, 1e-9).unwrap();
            assert_eq!(v.hits, 0);
        }
    }
}
