use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..=24")]
    QubitCountOutOfRange(usize),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },

    #[error("controlled gate requires distinct control and target (both {0})")]
    ControlEqualsTarget(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("training data contains a single class (label {0})")]
    SingleClass(i32),

    #[error("class {0} has no training points")]
    EmptyClass(i32),

    #[error("labels must be binary, found {0} distinct values")]
    NotBinary(usize),

    #[error("SMO did not converge within {0} iterations")]
    ConvergenceFailure(usize),

    #[error("precomputed kernel violates PSD beyond tolerance (min eigenvalue {0:.3e})")]
    KernelNotPsd(f64),

    #[error("requested {k} components but data has only {d} features")]
    TooManyComponents { k: usize, d: usize },

    #[error("hyperplane distance requires a linear model with nonzero weights")]
    NotLinearModel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("modular inverse of {a} mod {m} does not exist")]
    NoModularInverse { a: u64, m: u64 },

    #[error("feature value {value} quantizes to {quantized}, outside [0, {m})")]
    PrngRangeExceeded { value: f64, quantized: i64, m: u64 },

    #[error("{path}:{line}: {reason}")]
    MalformedRow {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("test fraction {0} must lie strictly between 0 and 1")]
    BadTestFraction(f64),

    #[error("split produced an empty partition (n = {n}, test fraction {fraction})")]
    EmptyPartition { n: usize, fraction: f64 },

    #[error("unknown algorithm {0:?}; registered: {1:?}")]
    UnknownAlgorithm(String, Vec<String>),

    #[error("feature dimension {d} exceeds the QSVM limit of {limit}")]
    QsvmDimensionLimit { d: usize, limit: usize },

    #[error("block inversion failed (energy at a pole of the clean system)")]
    SingularBlock,

    #[error("need at least {need} points for {what}, got {got}")]
    TooFewPoints {
        need: usize,
        got: usize,
        what: &'static str,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
