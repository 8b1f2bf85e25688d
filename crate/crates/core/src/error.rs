use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("malformed circuit document: {0}")]
    Malformed(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate {index} (`{name}`): {reason}")]
    GateArity {
        index: usize,
        name: String,
        reason: String,
    },
    #[error("gate {index}: qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange {
        index: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("invalid cut (qubit {qubit}, after gate {after_gate}): {reason}")]
    InvalidCut {
        qubit: usize,
        after_gate: usize,
        reason: String,
    },
    #[error("fragment {fragment} has {width} qubits, above the simulator limit of {limit}")]
    FragmentTooWide {
        fragment: usize,
        width: usize,
        limit: usize,
    },
    #[error("non-finite cut parameter at position {0}")]
    NonFiniteParameter(usize),
    #[error("parameters leave rows |-> / |-i> nonzero (residual {0:e})")]
    OutsideL4Subspace(f64),
    #[error("no estimate available for configuration {0}")]
    MissingEstimate(usize),
    #[error("expected {expected} coefficient tables, got {got}")]
    TableCountMismatch { expected: usize, got: usize },
    #[error("table for cut {cut} uses prep state {state} which the scheme does not prepare")]
    InactiveState { cut: usize, state: String },
    #[error("probability set has {got} entries, partition has {expected} configurations")]
    ConfigCountMismatch { expected: usize, got: usize },
    #[error("nothing to estimate: {0}")]
    EmptyEstimate(String),
    #[error("configuration {config} has f_e = {f:e} > 0 but no shots")]
    UnsampledConfiguration { config: usize, f: f64 },
    #[error("all variance coefficients are zero; fall back to even allocation")]
    DegenerateModel,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite loss at parameters {0:?}")]
    NonFiniteLoss(Vec<f64>),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<CutError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CutError {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        CutError::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Whether the failure comes from bad user input rather than a runtime problem.
    pub fn is_input_error(&self) -> bool {
        match self {
            CutError::Stage { source, .. } => source.is_input_error(),
            CutError::Malformed(_)
            | CutError::UnknownGate(_)
            | CutError::GateArity { .. }
            | CutError::QubitOutOfRange { .. }
            | CutError::InvalidCut { .. }
            | CutError::FragmentTooWide { .. }
            | CutError::InvalidArgument(_)
            | CutError::Json(_)
            | CutError::Io(_) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, CutError>;
