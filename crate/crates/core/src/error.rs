use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("configuration is in the query state but no oracle bit was supplied")]
    MissingOracleBit,

    #[error("oracle bit supplied to a configuration that is not in the query state")]
    UnexpectedOracleBit,

    #[error("machine did not halt within {limit} steps")]
    StepBudgetExceeded { limit: usize },

    #[error("step {step} reads cell {cell}, which is not assigned")]
    UnassignedDependency { step: usize, cell: usize },

    #[error("cell {cell} is already assigned")]
    CellAlreadyAssigned { cell: usize },

    #[error("cell {cell} does not decode as a machine step record")]
    InvalidCellEncoding { cell: usize },

    #[error("query has length {got}, oracle expects {expected}")]
    BadQueryLength { expected: usize, got: usize },

    #[error("input has length {got}, expected {expected}")]
    BadInputLength { expected: usize, got: usize },

    #[error("{what}: {size} exceeds the enumeration limit {limit}")]
    TooLargeToEnumerate {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid oracle: {0}")]
    InvalidOracle(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("the stochastic protocol requires 1-bit cells, program has width {0}")]
    UnsupportedCellWidth(u32),

    #[error("machine control flow depends on oracle answers; cannot compile a fixed trace")]
    OracleDependentControl,

    #[error("unknown adversary family `{0}`")]
    UnknownFamily(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{count} counterexample(s); first: {first} (seed {seed})")]
    CounterexampleFound { count: usize, first: String, seed: u64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
