use thiserror::Error;

/// Validation failures for target states and their file formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit count must be between 1 and {max}, got {n}")]
    InvalidQubitCount { n: usize, max: usize },
    #[error("basis index {index} appears more than once")]
    DuplicateIndex { index: u64 },
    #[error("amplitude {value} at index {index} is negative")]
    NegativeAmplitude { index: u64, value: f64 },
    #[error("amplitude at index {index} is not finite")]
    NonFiniteAmplitude { index: u64 },
    #[error("state has no nonzero amplitude")]
    EmptySupport,
    #[error("basis index {index} does not fit in {n} qubits")]
    IndexOutOfRange { index: u64, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Errors from the control-pattern algebra.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("invalid trit {0:?}, expected '0', '1' or 'e'")]
    InvalidTrit(char),
    #[error("patterns longer than {max} trits are not supported (got {len})")]
    TooLong { len: usize, max: usize },
    #[error("length mismatch: pattern has {pattern} trits, bit string has {bits}")]
    LengthMismatch { pattern: usize, bits: usize },
    #[error("position {position} is out of range for a pattern of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("position {position} carries no control")]
    NotControlled { position: usize },
}

/// Structural problems in a layered circuit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("layer {k}: pattern {pattern} has length {len}")]
    PatternLength { k: usize, pattern: String, len: usize },
    #[error("layer {k}: pattern {pattern} appears twice")]
    DuplicatePattern { k: usize, pattern: String },
    #[error("layer {k}: regions of {first} and {second} overlap")]
    RegionOverlap { k: usize, first: String, second: String },
    #[error("layer index {k} is out of range for {n} qubits")]
    LayerOutOfRange { k: usize, n: usize },
    #[error("layer {k} is listed twice")]
    DuplicateLayer { k: usize },
    #[error("layer {k}: angle {theta} of {pattern} is outside [0, pi]")]
    InvalidAngle { k: usize, pattern: String, theta: f64 },
    #[error("circuit has {circuit} qubits, expected {expected}")]
    QubitMismatch { circuit: usize, expected: usize },
    #[error("malformed circuit JSON: {0}")]
    Json(String),
}

/// Bad optimizer or experiment parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("minimum overlap must lie in (0, 1], got {0}")]
    FMinOutOfRange(f64),
    #[error("number of threshold intervals must be at least 1")]
    NoIntervals,
    #[error("support size {d} is out of range for {n} qubits")]
    SupportSize { d: u64, n: usize },
    #[error("sparsity {sparsity} gives no support at {n} qubits")]
    Sparsity { sparsity: f64, n: usize },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("sweep over {0} is empty")]
    EmptySweep(&'static str),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("layer {layer} is out of range for {n} qubits")]
    LayerOutOfRange { layer: usize, n: usize },
    #[error("clusters live on different layers ({0} and {1})")]
    CrossLayer(usize, usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category, used by the CLI for its error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::State(StateError::Parse { .. }) => "parse",
            Error::State(_) => "invalid-state",
            Error::Pattern(_) => "invalid-pattern",
            Error::Circuit(CircuitError::Json(_)) => "parse",
            Error::Circuit(_) => "invalid-circuit",
            Error::Config(_) => "invalid-config",
            Error::DimensionMismatch(..) => "dimension-mismatch",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
