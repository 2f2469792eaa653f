use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("operator is not positive (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("group closure exceeded {0} elements")]
    ClosureOverflow(usize),

    #[error("symmetry {index} does not fix the representative (residual {residual:.3e})")]
    NotStabilized { index: usize, residual: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("projection annihilated the state (norm {0:.3e})")]
    Annihilated(f64),

    #[error("basis expansion residual {0:.3e} above tolerance")]
    ExpansionResidual(f64),

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("branch probabilities at node {path} sum to {total} (deficit above tolerance)")]
    ProbabilityDeficit { path: String, total: f64 },

    #[error("conditioned operation at party {party} for outcome {outcome} is not unitary (residual {residual:.3e})")]
    NonUnitaryCorrection {
        party: usize,
        outcome: usize,
        residual: f64,
    },

    #[error("POVM completeness residual {0:.3e} above tolerance")]
    PovmResidual(f64),

    #[error("search budget must be positive")]
    InvalidBudget,

    #[error("{0} parties exceed the exhaustive-ordering cap of {1}")]
    TooManyParties(usize, usize),

    #[error("sample count must be positive")]
    NoSamples,

    #[error("normalizing volume must be positive (got {0})")]
    InvalidVolume(f64),
}
