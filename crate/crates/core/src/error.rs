use thiserror::Error;

use crate::bn::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("assignment is missing node `{0}`")]
    MissingAssignment(String),

    #[error("state {state} out of range for node `{node}` with {num_states} states")]
    StateOutOfRange {
        node: String,
        state: usize,
        num_states: usize,
    },

    #[error("target `{0}` is also part of the evidence")]
    TargetInEvidence(String),

    #[error("impossible evidence: total probability of the observation is zero")]
    ImpossibleEvidence,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("a variable needs at least 2 states, got {0}")]
    TooFewStates(usize),

    #[error("rotation angle undefined: both probability masses are zero")]
    ZeroMass,

    #[error("insufficient ancillas: need {needed}, {available} available")]
    InsufficientAncillas { needed: usize, available: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("gate `{0}` is not in the basis set {{ry, rz, x, cx}}")]
    NonBasisGate(String),

    #[error("{0} qubits exceeds the simulator limit of {max}", max = crate::qsim::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("non-finite rotation angle")]
    NonFiniteAngle,

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("empty qubit subset")]
    EmptySubset,

    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),

    #[error("no good-state samples among {shots} shots")]
    NoGoodSamples { shots: u64 },

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid good-state definition: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Short machine-readable category, used by the CLI error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidNetwork(_) | Error::InvalidModel(_) | Error::InvalidDistribution(_) => {
                "validation"
            }
            Error::UnknownNode(_)
            | Error::MissingAssignment(_)
            | Error::StateOutOfRange { .. }
            | Error::TargetInEvidence(_) => "evidence",
            Error::ImpossibleEvidence | Error::NoGoodSamples { .. } => "inference",
            Error::DimensionMismatch { .. } | Error::LengthMismatch(..) => "dimension",
            Error::TooFewStates(_)
            | Error::ZeroMass
            | Error::InsufficientAncillas { .. }
            | Error::InvalidGate(_)
            | Error::NonBasisGate(_)
            | Error::InvalidSpec(_) => "compile",
            Error::TooManyQubits(_)
            | Error::QubitOutOfRange { .. }
            | Error::NonFiniteAngle
            | Error::EmptySubset
            | Error::ZeroShots
            | Error::InvalidNoise(_) => "simulation",
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
