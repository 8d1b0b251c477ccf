use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("empty vector or matrix")]
    Empty,
    #[error("rows of unequal length")]
    Ragged,
    #[error("non-finite entry")]
    NonFinite,
    #[error("{op}: dimension mismatch {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("matrix is not Hermitian (max |A - A^H| = {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not symmetric (max |A - A^T| = {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("singular system (condition estimate {condition_estimate:e})")]
    Singular { condition_estimate: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what} has shape {actual:?}, expected {expected:?}")]
    Shape { what: String, expected: (usize, usize), actual: (usize, usize) },
    #[error("{what} is not positive semidefinite (min eigenvalue bound {bound:e})")]
    NotPsd { what: String, bound: f64 },
    #[error("non-finite Jacobian entry in {partial} at ({row}, {col})")]
    NonFiniteJacobian { partial: &'static str, row: usize, col: usize },
    #[error("node {node} has no observation model")]
    UnknownNode { node: usize },
    #[error("model is not strictly linear: {0}")]
    NotStrictlyLinear(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown node {node} (network has {count} nodes)")]
    UnknownNode { node: usize, count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("network must contain at least one node")]
    Empty,
    #[error("topology line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("observation for node {node} has length {actual}, expected {expected}")]
    ObservationLength { node: usize, expected: usize, actual: usize },
    #[error("neighbourhood noise covariance is not positive semidefinite; violating pair ({a}, {b})")]
    NotPsd { a: usize, b: usize },
    #[error("weights for node {node} sum to {sum}, expected 1")]
    NotStochastic { node: usize, sum: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("step {step}, node {node}: innovation solve failed: {source}")]
    Solve { step: usize, node: usize, source: LinalgError },
    #[error("step {step}, node {node}: {source}")]
    Model { step: usize, node: usize, source: ModelError },
    #[error("step {step}: {source}")]
    Network { step: usize, source: NetworkError },
    #[error("step {step}: expected {expected} node observations, got {actual}")]
    MissingObservations { step: usize, expected: usize, actual: usize },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("need at least {required} samples, got {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Network(NetworkError::Parse { .. }) => 1,
            HarnessError::Signal(SignalError::InvalidScenario(_)) => 1,
            _ => 2,
        }
    }
}
