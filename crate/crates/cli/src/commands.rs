//! Subcommand implementations. Each returns the `result` part of a report.

use std::path::Path;

use locc_core::analysis::{
    check_convertible, check_mes_convertible, check_reachable, classify, lock_report, sep_check,
    Convertibility, StateInClass,
};
use locc_core::classes::{build_psi_m, is_generic, AlphaVec, BuildPath, ClassSpec, GenericityRule};
use locc_core::feasible::{OrbitOptions, Status};
use locc_core::linalg::{pauli, BlochVec, C64};
use locc_core::protocol::{run_tree, synth_locc1, synth_two_step_l, LocalOp, RunReport};
use locc_core::volumes::{corollary2_fraction, entanglement_ratio, estimate_volume, Slice, VolumeKind};
use serde_json::{json, Value};

use crate::files::{load_state, read_json, write_json, ClassRef, InlineClass, ProtocolFile, StateFile, WitnessFile};
use crate::report::Report;
use crate::{Build, Cli, CliError, Command, Demo, GenericityArg, KindArg, PathArg, ProtocolCmd, Synth};

type Out = Result<Value, CliError>;

pub fn dispatch(cli: &Cli, argv: &[String]) -> Result<Report, CliError> {
    let g = &cli.global;
    if !(g.tol > 0.0) || !g.tol.is_finite() {
        return Err(CliError::Input(format!("--tol must be positive, got {}", g.tol)));
    }
    let opts = OrbitOptions {
        tol: g.tol,
        budget: g.budget,
        seed: g.seed,
        ..OrbitOptions::default()
    };
    let tol = g.tol;
    let result = match &cli.command {
        Command::Analyze { state } => analyze(state, &opts),
        Command::Reachable { state } => reachable(state, tol),
        Command::Convertible { state, party } => convertible(state, *party, &opts),
        Command::SepCheck { source, target } => sep(source, target, tol),
        Command::MesCheck { state } => mes(state, tol),
        Command::LockReport { state, step } => lock(state, step.as_deref(), &opts),
        Command::Synth(Synth::Locc1 { state, witness, out }) => locc1(state, witness, out.as_deref(), tol),
        Command::Synth(Synth::TwoStepL { g1, g2, h2, out, state_out }) => {
            two_step(g1, g2, h2, out.as_deref(), state_out.as_deref(), tol)
        }
        Command::Protocol(ProtocolCmd::Run { protocol, state }) => run(protocol, state, tol),
        Command::Build(Build::PsiM { m, alpha, path, genericity, out }) => {
            psi_m(*m, alpha, *path, *genericity, out.as_deref(), tol)
        }
        Command::Volume { kind, anchor, slice, samples } => volume(*kind, anchor, slice, *samples, g.seed, tol),
        Command::Demo(Demo::Corollary2 { class, samples }) => corollary2(class, *samples, g.seed, tol),
    }?;
    Ok(Report {
        command: argv.to_vec(),
        tol,
        seed: g.seed,
        budget: g.budget,
        result,
    })
}

fn parse_reals(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("{what}: {e}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Input(format!("{what}: expected {n} finite comma-separated reals")));
    }
    Ok(v)
}

fn bloch_arg(s: &str, what: &str) -> Result<BlochVec, CliError> {
    let v = parse_reals(s, 3, what)?;
    Ok(BlochVec::from_array([v[0], v[1], v[2]]))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn convertibility_json(c: &Convertibility) -> Value {
    json!({
        "party": c.party,
        "status": c.status,
        "method": c.method,
        "admissible": c.admissible,
        "witness": c.witness.as_ref().map(|w| to_value(&WitnessFile::from_witness(w))),
        "residual": c.residual,
    })
}

fn analyze(path: &Path, opts: &OrbitOptions) -> Out {
    let (file, class, state) = load_state(path, opts.tol)?;
    let c = classify(&state, &class.stabilizer, opts)?;
    Ok(json!({
        "class": file.class.name(),
        "reachable": to_value(&c.reachable),
        "convertible": c.convertible.iter().any(|x| x.status == Status::CertifiedYes),
        "parties": c.convertible.iter().map(convertibility_json).collect::<Vec<_>>(),
        "mes_member": c.mes_member,
        "mes_convertible": c.mes_convertible,
        "isolated": c.isolated,
        "model": "all-det",
    }))
}

fn reachable(path: &Path, tol: f64) -> Out {
    let (_, class, state) = load_state(path, tol)?;
    Ok(to_value(&check_reachable(&state, &class.stabilizer, tol)?))
}

fn convertible(path: &Path, party: usize, opts: &OrbitOptions) -> Out {
    let (_, class, state) = load_state(path, opts.tol)?;
    Ok(convertibility_json(&check_convertible(&state, &class.stabilizer, party, opts)?))
}

fn sep(source: &Path, target: &Path, tol: f64) -> Out {
    let (sf, class, s) = load_state(source, tol)?;
    let (tf, _, t) = load_state(target, tol)?;
    if sf.class != tf.class {
        return Err(CliError::Input(format!(
            "source class {} and target class {} differ",
            sf.class.name(),
            tf.class.name()
        )));
    }
    let fit = sep_check(&s, &t, &class.stabilizer, tol)?;
    Ok(json!({
        "status": fit.status,
        "p": fit.p,
        "residual": fit.residual,
    }))
}

fn mes(path: &Path, tol: f64) -> Out {
    let (_, class, state) = load_state(path, tol)?;
    Ok(to_value(&check_mes_convertible(&state, &class.stabilizer, tol)?))
}

fn lock(path: &Path, step: Option<&Path>, opts: &OrbitOptions) -> Out {
    let (_, class, state) = load_state(path, opts.tol)?;
    let w = step.map(read_json::<WitnessFile>).transpose()?.map(|f| f.witness());
    let r = lock_report(&state, &class.stabilizer, w.as_ref(), opts)?;
    Ok(json!({
        "before": r.before,
        "after": r.after,
        "locked": r.locked,
        "unlocked": r.unlocked.iter().map(|(p, s)| json!({"party": p, "symmetries": s})).collect::<Vec<_>>(),
        "prop_commute": r.prop_commute,
        "lemma4_consistent": r.lemma4_consistent,
    }))
}

fn run_json(r: &RunReport) -> Value {
    json!({
        "deterministic": r.deterministic,
        "total_probability": r.total_probability(),
        "max_povm_residual": r.max_povm_residual,
        "probability_mismatch": r.probability_mismatch,
        "branches": r.branches.iter().map(|b| json!({
            "path": b.path,
            "probability": b.probability,
            "equivalence": b.equivalence,
            "fidelity": b.fidelity,
            "leaf": LocalOp::list(&b.leaf),
        })).collect::<Vec<_>>(),
    })
}

fn emit_protocol(file: &ProtocolFile, out: Option<&Path>) -> Result<Value, CliError> {
    match out {
        Some(p) => {
            write_json(p, file)?;
            Ok(json!(p.display().to_string()))
        }
        None => Ok(to_value(file)),
    }
}

fn locc1(state: &Path, witness: &Path, out: Option<&Path>, tol: f64) -> Out {
    let (sf, class, s) = load_state(state, tol)?;
    let w = read_json::<WitnessFile>(witness)?.witness();
    let tree = synth_locc1(&class, &s, &w, tol)?;
    let run = run_tree(&class, &s, &tree, tol)?;
    let file = ProtocolFile { class: sf.class, tree };
    Ok(json!({
        "protocol": emit_protocol(&file, out)?,
        "run": run_json(&run),
    }))
}

fn two_step(g1: &str, g2: &str, h2: &str, out: Option<&Path>, state_out: Option<&Path>, tol: f64) -> Out {
    let p = synth_two_step_l(bloch_arg(g1, "--g1")?, bloch_arg(g2, "--g2")?, bloch_arg(h2, "--h2")?, tol)?;
    let run = run_tree(&p.class, &p.source, &p.tree, tol)?;
    let class = ClassRef::Name(p.class.name.clone());
    if let Some(path) = state_out {
        write_json(path, &StateFile::from_state(class.clone(), &p.source))?;
    }
    let file = ProtocolFile { class, tree: p.tree.clone() };
    Ok(json!({
        "p": p.p,
        "q": p.q,
        "q_tilde": p.q_tilde,
        "source": LocalOp::list(&p.source),
        "target": LocalOp::list(&p.target),
        "intermediate": p.intermediate.iter().map(LocalOp::list).collect::<Vec<_>>(),
        "protocol": emit_protocol(&file, out)?,
        "run": run_json(&run),
    }))
}

fn run(protocol: &Path, state: &Path, tol: f64) -> Out {
    let pf: ProtocolFile = read_json(protocol)?;
    let (sf, class, s) = load_state(state, tol)?;
    if pf.class != sf.class {
        return Err(CliError::Input(format!(
            "protocol class {} and state class {} differ",
            pf.class.name(),
            sf.class.name()
        )));
    }
    Ok(run_json(&run_tree(&class, &s, &pf.tree, tol)?))
}

fn psi_m(m: usize, alpha: &str, path: PathArg, rule: GenericityArg, out: Option<&Path>, tol: f64) -> Out {
    let v = parse_reals(alpha, 8, "--alpha")?;
    let raw = [0, 1, 2, 3].map(|i| C64::new(v[2 * i], v[2 * i + 1]));
    let (alpha, deviation) = AlphaVec::normalized(raw)?;
    if deviation > 1e-12 {
        eprintln!("warning: alpha renormalized (norm off by {deviation:.3e})");
    }
    let rule = match rule {
        GenericityArg::Seed => GenericityRule::Seed,
        GenericityArg::Chain => GenericityRule::default(),
    };
    let generic = is_generic(&alpha, rule, tol.max(1e-9));
    if !generic {
        eprintln!("warning: alpha is not generic; the stabilizer may be larger than the Pauli strings");
    }
    let path = match path {
        PathArg::Recursive => BuildPath::Recursive,
        PathArg::Symmetrizer => BuildPath::Symmetrizer,
    };
    let psi = build_psi_m(&alpha, m, path)?;
    let n = psi.parties();
    let class = ClassRef::Inline(InlineClass {
        name: format!("pauli{n}"),
        dims: psi.dims().to_vec(),
        amplitudes: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        generators: [1, 3].iter().map(|&i| vec![pauli(i); n]).collect(),
    });
    let file = StateFile {
        n,
        dims: vec![2; n],
        class: class.clone(),
        parties: vec![LocalOp::Bloch([0.0; 3]); n],
    };
    // resolving re-checks that the strings stabilize the built state
    let spec = class.resolve(tol.max(1e-9))?;
    let state = match out {
        Some(p) => {
            write_json(p, &file)?;
            json!(p.display().to_string())
        }
        None => to_value(&file),
    };
    Ok(json!({
        "m": m,
        "qubits": n,
        "alpha": alpha.coeffs().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "renormalization": deviation,
        "generic": generic,
        "stabilizer_order": spec.stabilizer.len(),
        "state": state,
    }))
}

fn parse_slice(spec: &str, class: &ClassSpec, anchor: &StateInClass) -> Result<Slice, CliError> {
    let bad = || CliError::Input(format!("--slice {spec:?}: expected party-ball:<j> or segment:<j>:<sym>:<hx>,<hy>,<hz>"));
    let mut parts = spec.split(':');
    let kind = parts.next().ok_or_else(bad)?;
    let party: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if party >= anchor.parties() {
        return Err(CliError::Input(format!("--slice: party {party} out of range")));
    }
    let slice = match kind {
        "party-ball" => Slice::PartyBall { party, fixed: anchor.clone() },
        "segment" => {
            let sym: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let h = bloch_arg(parts.next().ok_or_else(bad)?, "--slice")?;
            if sym >= class.stabilizer.len() {
                return Err(CliError::Input(format!("--slice: symmetry {sym} out of range")));
            }
            Slice::Segment {
                party,
                h: h.encode(),
                s: class.stabilizer.element(sym).factors[party].clone(),
                fixed: anchor.clone(),
            }
        }
        _ => return Err(bad()),
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(slice)
}

fn volume(kind: KindArg, anchor: &Path, slice: &str, samples: usize, seed: u64, tol: f64) -> Out {
    let (_, class, state) = load_state(anchor, tol)?;
    let slice = parse_slice(slice, &class, &state)?;
    let kind = match kind {
        KindArg::A => VolumeKind::Accessible,
        KindArg::S => VolumeKind::Source,
    };
    let v = estimate_volume(kind, &state, &slice, &class.stabilizer, samples, seed, tol)?;
    let ratio = entanglement_ratio(&v, 1.0, kind)?;
    let mut out = to_value(&v);
    out["ratio"] = json!(ratio);
    Ok(out)
}

fn corollary2(class: &str, samples: usize, seed: u64, tol: f64) -> Out {
    let spec = ClassRef::Name(class.to_string()).resolve(tol)?;
    let mut out = to_value(&corollary2_fraction(&spec, samples, seed, tol)?);
    out["class"] = json!(class);
    Ok(out)
}
