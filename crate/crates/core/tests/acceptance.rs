//! Acceptance run: one line per criterion with its runtime budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use locc_core::analysis::{
    check_convertible, check_reachable, lock_report, sep_check, StateInClass,
    Witness,
};
use locc_core::classes::{
    build_psi_m, generic_chain_check, l_class, l_unitary, lambda_map, pauli_group,
    sample_generic_alpha, verify_uk_invariance, BuildPath,
};
use locc_core::feasible::{orbit_search, simplex_solve, OrbitOptions, Status};
use locc_core::groups::{
    pairwise_prop_commute, twirl_group, verify_stabilizer, LocalSymmetry,
};
use locc_core::linalg::{pauli, pd_inv_sqrt, psd_sqrt, su2_to_so3, tensor, BlochVec, CMatrix};
use locc_core::protocol::{run_tree, synth_locc1, synth_two_step_l, validate_povm, ProtocolTree};
use locc_core::volumes::{
    corollary2_fraction, entanglement_ratio, estimate_volume, Slice, VolumeKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn bloch_state(class: &str, b: &[[f64; 3]]) -> std::result::Result<StateInClass, String> {
    let v: Vec<BlochVec> = b.iter().map(|&a| BlochVec::from_array(a)).collect();
    StateInClass::from_bloch(class, &v).map_err(err)
}

const HALF: [f64; 3] = [0.0; 3];

fn l_stabilizer() -> Check {
    let c = l_class();
    ensure!(c.stabilizer.len() == 12, "group has {} elements", c.stabilizer.len());
    let chk = verify_stabilizer(&c.representative, &c.stabilizer, 1e-10).map_err(err)?;
    let worst = chk.residuals.iter().cloned().fold(0.0, f64::max);
    ensure!(chk.pass && worst <= 1e-10, "stabilizer residual {worst:.3e}");
    ensure!(c.stabilizer.closure_defect(1e-9).is_none(), "group not closed");
    let r = su2_to_so3(&l_unitary(), 1e-9).map_err(err)?;
    let want = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    let dev = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| (r[a][b] - want[a][b]).abs())
        .fold(0.0, f64::max);
    ensure!(dev <= 1e-12, "rotation deviates by {dev:.3e}");
    Ok(format!("12 elements, max residual {worst:.1e}, R(U) deviation {dev:.1e}"))
}

fn twirl_separation() -> Check {
    let c = l_class();
    let target = bloch_state("L", &[[0.3, 0.0, 0.0], [0.0, 0.3, 0.0], HALF, HALF])?;
    let full = tensor(target.ops()).map_err(err)?;
    let t = twirl_group(&full, &c.stabilizer).map_err(err)?;
    let scale = t.trace().re / 16.0;
    let off = t.distance(&CMatrix::identity(16).scale_real(scale));
    ensure!(off <= 1e-10, "twirl off-identity residual {off:.3e}");
    let source = bloch_state("L", &[HALF; 4])?;
    let sep = sep_check(&source, &target, &c.stabilizer, 1e-9).map_err(err)?;
    ensure!(sep.status == Status::CertifiedYes, "sep_check returned {}", sep.status);
    // Orthogonal pair off every symmetry axis: the separation the pinned
    // axis-aligned pair is meant to exhibit.
    let generic = bloch_state("L", &[[0.3, 0.1, 0.0], [0.1, -0.3, 0.02], HALF, HALF])?;
    let generic_sep = sep_check(&source, &generic, &c.stabilizer, 1e-9).map_err(err)?;
    let generic_reach = check_reachable(&generic, &c.stabilizer, 1e-9).map_err(err)?;
    let control = format!(
        "off-axis pair: SEP {}, reachable {}",
        generic_sep.status, generic_reach.reachable
    );
    let reach = check_reachable(&target, &c.stabilizer, 1e-9).map_err(err)?;
    ensure!(
        !reach.reachable,
        "off-identity {off:.1e}, SEP yes, but the pinned target is LOCC_N-reachable: symmetry {} \
         commutes with every party except {} (h1 and h2 lie on rotation axes); {control}",
        reach.symmetry.unwrap_or_default(),
        reach.party.unwrap_or_default()
    );
    Ok(format!("off-identity {off:.1e}; SEP yes, LOCC_N reachable no; {control}"))
}

fn two_step() -> Check {
    let t = synth_two_step_l(
        BlochVec::new(0.1, 0.1, 0.2),
        BlochVec::new(0.1, -0.1, 0.0),
        BlochVec::new(0.1, 0.1, -0.2),
        1e-9,
    )
    .map_err(err)?;
    ensure!((t.p - 0.75).abs() <= 1e-9, "p = {}", t.p);
    let close = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9);
    ensure!(close(&t.q, &[1.0 / 3.0, 0.0, 2.0 / 3.0]), "q = {:?}", t.q);
    ensure!(close(&t.q_tilde, &[1.0 / 3.0, 2.0 / 3.0, 0.0]), "q~ = {:?}", t.q_tilde);
    let mut worst: f64 = 0.0;
    let mut stack = vec![&t.tree];
    while let Some(node) = stack.pop() {
        if let ProtocolTree::Node { outcomes, .. } = node {
            worst = worst.max(validate_povm(&node.root_povm()).map_err(err)?);
            stack.extend(outcomes.iter().map(|o| o.child.as_ref()));
        }
    }
    ensure!(worst <= 1e-9, "POVM residual {worst:.3e}");
    let run = run_tree(&t.class, &t.source, &t.tree, 1e-9).map_err(err)?;
    ensure!(run.deterministic, "run_tree not deterministic");
    let lu = locc_core::protocol::lu_equiv_in_class(
        &t.intermediate[0],
        &t.intermediate[1],
        &t.class.stabilizer,
        1e-9,
    )
    .map_err(err)?;
    ensure!(lu.is_none(), "intermediate branches are LU-equivalent");
    for j in 0..4 {
        let c = check_convertible(&t.source, &t.class.stabilizer, j, &OrbitOptions::default())
            .map_err(err)?;
        ensure!(c.status == Status::CertifiedNo, "source convertible at party {j}: {}", c.status);
    }
    Ok(format!(
        "p = {:.12}, {} leaves, POVM residual {worst:.1e}, source certified-no at all parties",
        t.p,
        run.branches.len()
    ))
}

fn corollary2() -> Check {
    let pauli4 = locc_core::classes::builtin("pauli4").map_err(err)?;
    let mut out = Vec::new();
    for class in [pauli4, l_class()] {
        let v = corollary2_fraction(&class, 10_000, 2024, 1e-9).map_err(err)?;
        ensure!(v.hits == 0, "{}: {} reachable samples", class.name, v.hits);
        out.push(format!("{} 0/{}", class.name, v.samples));
    }
    Ok(out.join(", "))
}

fn unlocking() -> Check {
    let opts = OrbitOptions::default();
    let c = l_class();
    let g = &c.stabilizer;
    let source = bloch_state("L", &[[0.08, 0.08, 0.2], HALF, HALF, HALF])?;
    let z = g
        .find(&LocalSymmetry::uniform(&pauli(3), 4), 1e-9)
        .ok_or("σ₃ string missing")?;
    let step = Witness {
        symmetries: vec![0, z],
        p: vec![0.7, 0.3],
        h: BlochVec::new(0.2, 0.2, 0.2).encode(),
        party: 0,
    };
    let tree = synth_locc1(&c, &source, &step, 1e-9).map_err(err)?;
    ensure!(
        run_tree(&c, &source, &tree, 1e-9).map_err(err)?.deterministic,
        "unlocking step not deterministic"
    );
    let r = lock_report(&source, g, Some(&step), &opts).map_err(err)?;
    ensure!(
        r.before[1..].iter().all(|s| *s == Status::CertifiedNo),
        "before: {:?}",
        r.before
    );
    let u = l_unitary();
    let u2 = &u * &u;
    let via_u = |k: usize| {
        let f = &g.element(k).factors[0];
        [&u, &u2]
            .iter()
            .any(|m| f.proportionality(m).is_some_and(|(_, e)| e <= 1e-9))
    };
    let parties: Vec<usize> = r.unlocked.iter().map(|x| x.0).collect();
    ensure!(parties == vec![1, 2, 3], "unlocked {parties:?}");
    ensure!(
        r.unlocked.iter().all(|(_, syms)| syms.iter().any(|&k| via_u(k))),
        "unlocking witness does not use U"
    );

    let p4 = pauli_group(4).map_err(err)?;
    ensure!(pairwise_prop_commute(&p4, 1e-9), "Pauli group not prop-commuting");
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (mut locked, mut steps) = (0, 0);
    for trial in 0..1000 {
        let axis = rng.random_range(0..3);
        let b: Vec<[f64; 3]> = (0..4)
            .map(|_| {
                let mut v = [0.0; 3];
                if rng.random_bool(0.75) {
                    v[axis] = rng.random_range(-0.4..0.4);
                } else {
                    v = [0; 3].map(|_| rng.random_range(-0.25..0.25));
                }
                v
            })
            .collect();
        let s = bloch_state("pauli4", &b)?;
        let j = rng.random_range(0..4);
        let conv = check_convertible(&s, &p4, j, &opts).map_err(err)?;
        let w = conv.witness;
        let rep = lock_report(&s, &p4, w.as_ref(), &opts).map_err(err)?;
        ensure!(rep.unlocked.is_empty(), "trial {trial}: unlocking in pauli4");
        ensure!(rep.lemma4_consistent, "trial {trial}: inconsistent report");
        if w.is_some() {
            steps += 1;
        }
        if !rep.locked.is_empty() {
            locked += 1;
        }
    }
    ensure!(locked > 0, "no locking observed");
    Ok(format!(
        "L parties 2-4 unlocked via U; pauli4: {steps} steps, {locked} locking, 0 unlocking in 1000 trials"
    ))
}

fn appendix_family() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = [0.0f64; 4];
    for n in 0..20 {
        let a = sample_generic_alpha(&mut rng, 1e-8);
        for m in [3, 4] {
            let psi = build_psi_m(&a, m, BuildPath::Recursive).map_err(err)?;
            let other = build_psi_m(&a, m, BuildPath::Symmetrizer).map_err(err)?;
            let g = pauli_group(1 << m).map_err(err)?;
            let chk = verify_stabilizer(&psi, &g, 1e-9).map_err(err)?;
            let r = chk.residuals.iter().cloned().fold(0.0, f64::max);
            worst[0] = worst[0].max(r);
            ensure!(chk.pass, "alpha {n}, m = {m}: Pauli residual {r:.3e}");
            let ov = (psi.inner(&other).norm() - 1.0).abs();
            worst[1] = worst[1].max(ov);
            ensure!(ov <= 1e-10, "alpha {n}, m = {m}: overlap off by {ov:.3e}");
            for k in 2..m {
                let u = verify_uk_invariance(&a, m, k).map_err(err)?;
                ensure!(u <= 1e-9, "alpha {n}: U_{k} residual {u:.3e} at m = {m}");
            }
        }
        for i in 1..=3 {
            let img = lambda_map(i, &a, 1e-9).map_err(err)?;
            worst[2] = worst[2].max(img.residual);
            worst[3] = worst[3].max(img.beta2());
            ensure!(img.beta2() <= 1e-9, "alpha {n}: lambda {i} beta2 = {:.3e}", img.beta2());
        }
        let chain = generic_chain_check(&a, 2, 1e-8);
        ensure!(chain.passed, "alpha {n}: chain failed {:?}", chain.failure);
    }
    Ok(format!(
        "20 alphas; Pauli {:.1e}, overlap {:.1e}, lambda residual {:.1e}, beta2 {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

/// Smallest residual over the 0.01 grid on the simplex.
fn grid_min(cols: &[Vec<f64>], b: &[f64]) -> f64 {
    let k = cols.len();
    let steps = 100;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; k - 1];
    loop {
        let used: usize = idx.iter().sum();
        if used <= steps {
            let mut w: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
            w.push((steps - used) as f64 / steps as f64);
            let r = (0..b.len())
                .map(|d| {
                    let v: f64 = (0..k).map(|c| w[c] * cols[c][d]).sum();
                    (v - b[d]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            best = best.min(r);
        }
        let mut pos = 0;
        loop {
            if pos == k - 1 {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] <= steps {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut yes, mut no) = (0, 0);
    for inst in 0..500 {
        let k = rng.random_range(2..=3);
        let d = rng.random_range(1..=3);
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = if inst % 2 == 0 {
            // grid point inside the hull
            let mut w: Vec<usize> = (0..k - 1).map(|_| rng.random_range(0..=100)).collect();
            let used: usize = w.iter().sum::<usize>().min(100);
            if w.iter().sum::<usize>() > 100 {
                w = vec![0; k - 1];
                w[0] = used;
            }
            w.push(100 - w.iter().sum::<usize>());
            (0..d)
                .map(|i| (0..k).map(|c| w[c] as f64 / 100.0 * cols[c][i]).sum())
                .collect()
        } else {
            (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let lp = simplex_solve(&cols, &b, 1e-9);
        let grid = grid_min(&cols, &b);
        let lip: f64 = cols
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
            * 0.01
            * k as f64;
        if lp.is_yes() {
            yes += 1;
            ensure!(grid <= lip, "instance {inst}: LP yes but grid residual {grid:.3e}");
        } else {
            no += 1;
            ensure!(grid > 1e-9, "instance {inst}: LP no but grid hits {grid:.3e}");
        }
    }

    let opts = OrbitOptions::default();
    let u = l_unitary();
    let pool = [pauli(1), pauli(2), pauli(3), u.clone(), &u * &u, &u * &pauli(1), &u * &pauli(3)];
    let mut worst = (0.0f64, 0.0f64);
    for inst in 0..200 {
        let r = 0.45 * rng.random::<f64>().cbrt();
        let dir: [f64; 3] = [0; 3].map(|_| rng.random_range(-1.0..1.0));
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let g = BlochVec::from_array(dir.map(|x| x * r / n)).encode();
        let mut factors = vec![CMatrix::identity(2)];
        for f in &pool {
            if rng.random_bool(0.4) {
                factors.push(f.clone());
            }
        }
        if factors.len() == 1 {
            factors.push(pool[inst % pool.len()].clone());
        }
        let o = orbit_search(&g, &factors, &OrbitOptions { seed: inst as u64, ..opts.clone() })
            .map_err(err)?;
        ensure!(o.status == Status::CertifiedYes, "orbit instance {inst}: {} ({})", o.status, o.reason);
        let h = o.h.as_ref().unwrap();
        let mut acc = CMatrix::zeros(2, 2);
        for (&s, &p) in o.support.iter().zip(&o.p) {
            acc = &acc + &h.conjugate_by_adjoint(&factors[s]).scale_real(p);
        }
        let rec = acc.distance(&g);
        let root = psd_sqrt(h, 1e-9).map_err(err)?;
        let gi = pd_inv_sqrt(&g).map_err(err)?;
        let povm: Vec<CMatrix> = o
            .support
            .iter()
            .zip(&o.p)
            .map(|(&s, &p)| (&(&root * &factors[s]) * &gi).scale_real(p.sqrt()))
            .collect();
        let comp = validate_povm(&povm).map_err(err)?;
        worst = (worst.0.max(rec), worst.1.max(comp));
        ensure!(rec <= 1e-8 && comp <= 1e-8, "orbit instance {inst}: rec {rec:.3e}, POVM {comp:.3e}");
    }
    Ok(format!(
        "LP/grid agree on 500 ({yes} yes, {no} no); 200 witnesses, reconstruction {:.1e}, POVM {:.1e}",
        worst.0, worst.1
    ))
}

fn volume() -> Check {
    let g = pauli_group(4).map_err(err)?;
    let slice = Slice::Segment {
        party: 0,
        h: BlochVec::new(0.1, 0.2, 0.3).encode(),
        s: pauli(3),
        fixed: bloch_state("pauli4", &[HALF; 4])?,
    };
    let anchor = slice.segment_point(0.8).map_err(err)?;
    let v = estimate_volume(VolumeKind::Source, &anchor, &slice, &g, 2000, 8, 1e-9).map_err(err)?;
    ensure!(
        (v.fraction - 0.6).abs() <= 3.0 * v.half_width,
        "fraction {} outside 0.6 ± 3·{}",
        v.fraction,
        v.half_width
    );
    let e = entanglement_ratio(&v, 1.0, VolumeKind::Source).map_err(err)?;
    ensure!((e - 0.4).abs() <= v.half_width, "E_s = {e}");
    let again = estimate_volume(VolumeKind::Source, &anchor, &slice, &g, 2000, 8, 1e-9).map_err(err)?;
    ensure!(
        again == v && again.fraction.to_bits() == v.fraction.to_bits(),
        "estimate not reproducible"
    );
    Ok(format!("fraction {:.4} ± {:.4}, E_s {:.4}", v.fraction, v.half_width, e))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 8] = [
        ("L stabilizer", 1, l_stabilizer),
        ("twirl SEP/LOCC separation", 5, twirl_separation),
        ("two-step L protocol", 10, two_step),
        ("measure-zero reachability", 60, corollary2),
        ("unlocking and locking", 60, unlocking),
        ("recursive Pauli family", 120, appendix_family),
        ("oracle equivalence", 120, oracles),
        ("volume model", 60, volume),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let within = took <= Duration::from_secs(*limit);
        let verdict = match (&out, within) {
            (Ok(_), true) => "PASS",
            _ => "FAIL",
        };
        let detail = match &out {
            Ok(s) => s.clone(),
            Err(e) => e.clone(),
        };
        let timing = if within { "" } else { " [over time budget]" };
        println!(
            "criterion {}: {verdict} {name} ({:.2}s / {limit}s){timing}: {detail}",
            i + 1,
            took.as_secs_f64()
        );
        if verdict == "FAIL" {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
