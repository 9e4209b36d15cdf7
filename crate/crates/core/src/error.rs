use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a diagram needs distinct root and leaf nodes, got node count {0}")]
    TooFewNodes(usize),

    #[error("edge {edge}: node {node} out of range (node count {node_count})")]
    NodeOutOfRange {
        edge: usize,
        node: usize,
        node_count: usize,
    },

    #[error("edge {edge}: label {label} outside ground set of size {ground_size}")]
    LabelOutOfRange {
        edge: usize,
        label: u32,
        ground_size: usize,
    },

    #[error("edge {edge}: label {label} listed twice")]
    RepeatedLabel { edge: usize, label: u32 },

    #[error("set {set}: element {element} outside ground set of size {ground_size}")]
    ElementOutOfRange {
        set: usize,
        element: u32,
        ground_size: usize,
    },

    #[error("family contains the set {0:?} more than once")]
    DuplicateSet(Vec<u32>),

    #[error("family is empty")]
    EmptyFamily,

    #[error("diagram has more than {cap} root-to-leaf paths")]
    PathCapExceeded { cap: usize },

    #[error("invalid element order: {0}")]
    InvalidOrder(String),

    #[error("row {row}: coefficient {value} is not binary")]
    NonBinaryCoefficient { row: usize, value: f64 },

    #[error("row {row}: coefficient {value} is not an integer")]
    NonIntegerCoefficient { row: usize, value: f64 },

    #[error("diagram language does not match the constraint rows")]
    LanguageMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("variable {0} is not continuous; relax the system first")]
    NonContinuous(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot draw {m} distinct instances from a cube of dimension {n}")]
    TooManyInstances { m: usize, n: usize },

    #[error("restricted subproblem is infeasible; the flow polytope should never be empty")]
    SubproblemInfeasible,

    #[error("subproblem solver stopped after {steps} steps with flow residual {residual:e}")]
    SubproblemNotConverged { steps: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 2 for numerical failures, 1 for everything the
    /// caller can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SubproblemInfeasible
            | Error::SubproblemNotConverged { .. }
            | Error::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
