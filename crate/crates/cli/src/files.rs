//! On-disk formats: state files, witness files and protocol files.

use std::path::Path;

use locc_core::analysis::{StateInClass, Witness};
use locc_core::classes::{builtin, ClassSpec};
use locc_core::groups::{close_group, LocalSymmetry, DEFAULT_MAX_GROUP};
use locc_core::linalg::{StateVector, C64};
use locc_core::protocol::{LocalOp, ProtocolTree};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::CliError;

/// A class given inline: representative amplitudes and stabilizer generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InlineClass {
    pub name: String,
    pub dims: Vec<usize>,
    pub amplitudes: Vec<[f64; 2]>,
    /// Each generator lists one unitary per party.
    pub generators: Vec<Vec<locc_core::linalg::CMatrix>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassRef {
    Name(String),
    Inline(InlineClass),
}

impl ClassRef {
    pub fn resolve(&self, tol: f64) -> Result<ClassSpec, CliError> {
        match self {
            ClassRef::Name(n) => builtin(n).map_err(CliError::input),
            ClassRef::Inline(c) => {
                let amps: Vec<C64> = c.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
                let rep = StateVector::new(c.dims.clone(), amps).map_err(CliError::input)?;
                let gens = c
                    .generators
                    .iter()
                    .map(|g| LocalSymmetry::new(g.clone(), tol.max(1e-9)))
                    .collect::<locc_core::Result<Vec<_>>>()
                    .map_err(CliError::input)?;
                let group = close_group(&gens, DEFAULT_MAX_GROUP, tol.max(1e-9)).map_err(CliError::input)?;
                ClassSpec::new(c.name.clone(), rep, group, tol.max(1e-9)).map_err(CliError::input)
            }
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ClassRef::Name(n) => n,
            ClassRef::Inline(c) => &c.name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub dims: Vec<usize>,
    pub class: ClassRef,
    pub parties: Vec<LocalOp>,
}

impl StateFile {
    pub fn from_state(class: ClassRef, state: &StateInClass) -> Self {
        Self {
            n: state.parties(),
            dims: state.dims(),
            class,
            parties: LocalOp::list(state),
        }
    }

    /// Checks the declared shape and builds the class and state.
    pub fn load(&self, tol: f64) -> Result<(ClassSpec, StateInClass), CliError> {
        if self.n != self.parties.len() || self.n != self.dims.len() {
            return Err(CliError::Input(format!(
                "n = {} but {} dims and {} parties given",
                self.n,
                self.dims.len(),
                self.parties.len()
            )));
        }
        for (i, (op, &d)) in self.parties.iter().zip(&self.dims).enumerate() {
            let m = op.to_matrix();
            if m.rows() != d || m.cols() != d {
                return Err(CliError::Input(format!(
                    "party {i}: operator is {}x{}, dims say {d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let class = self.class.resolve(tol)?;
        if class.dims() != self.dims.as_slice() {
            return Err(CliError::Input(format!(
                "class {} has dims {:?}, file has {:?}",
                class.name,
                class.dims(),
                self.dims
            )));
        }
        let state = LocalOp::state(&class.name, &self.parties).map_err(CliError::input)?;
        Ok((class, state))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub party: usize,
    pub symmetries: Vec<usize>,
    pub p: Vec<f64>,
    pub h: LocalOp,
}

impl WitnessFile {
    pub fn from_witness(w: &Witness) -> Self {
        Self {
            party: w.party,
            symmetries: w.symmetries.clone(),
            p: w.p.clone(),
            h: LocalOp::from_matrix(&w.h),
        }
    }

    pub fn witness(&self) -> Witness {
        Witness {
            symmetries: self.symmetries.clone(),
            p: self.p.clone(),
            h: self.h.to_matrix(),
            party: self.party,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub class: ClassRef,
    pub tree: ProtocolTree,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_state(path: &Path, tol: f64) -> Result<(StateFile, ClassSpec, StateInClass), CliError> {
    let file: StateFile = read_json(path)?;
    let (class, state) = file.load(tol).map_err(|e| e.context(&path.display().to_string()))?;
    Ok((file, class, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use locc_core::linalg::BlochVec;
    use locc_core::protocol::synth_two_step_l;

    fn roundtrip<T: Serialize + DeserializeOwned>(v: &T) -> T {
        serde_json::from_str(&serde_json::to_string_pretty(v).unwrap()).unwrap()
    }

    #[test]
    fn l_state_file_roundtrip() {
        let s = StateInClass::from_bloch(
            "L",
            &[
                BlochVec::from_array([0.1, 0.1, 0.2]),
                BlochVec::from_array([1.0 / 3.0, -0.1, 1e-17]),
                BlochVec::from_array([0.0; 3]),
                BlochVec::from_array([0.0; 3]),
            ],
        )
        .unwrap();
        let f = StateFile::from_state(ClassRef::Name("L".into()), &s);
        let back = roundtrip(&f);
        assert_eq!(back, f);
        let (_, loaded) = back.load(1e-9).unwrap();
        for (a, b) in loaded.ops().iter().zip(s.ops()) {
            // Bloch decoding may move the last bit
            assert!(a.distance(b) <= 1e-16);
        }
    }

    #[test]
    fn two_step_protocol_roundtrip() {
        let b = |v| BlochVec::from_array(v);
        let p = synth_two_step_l(b([0.1, 0.1, 0.2]), b([0.1, -0.1, 0.0]), b([0.1, 0.1, -0.2]), 1e-9).unwrap();
        let f = ProtocolFile {
            class: ClassRef::Name("L".into()),
            tree: p.tree,
        };
        assert_eq!(roundtrip(&f), f);
    }

    #[test]
    fn qudit_matrix_party_roundtrip() {
        let m = locc_core::linalg::CMatrix::identity(3).scale_real(1.0 / 3.0);
        let op = LocalOp::from_matrix(&m);
        assert!(matches!(op, LocalOp::Matrix(_)));
        assert_eq!(roundtrip(&op), op);
    }

    #[test]
    fn shape_errors_name_the_party() {
        let f = StateFile {
            n: 4,
            dims: vec![2, 2, 3, 2],
            class: ClassRef::Name("L".into()),
            parties: vec![LocalOp::Bloch([0.0; 3]); 4],
        };
        let CliError::Input(msg) = f.load(1e-9).unwrap_err() else { panic!() };
        assert!(msg.starts_with("party 2"), "{msg}");
    }
}
