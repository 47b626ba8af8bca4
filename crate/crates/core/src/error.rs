use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("vertex index {0} is out of range")]
    VertexOutOfRange(usize),

    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),

    #[error("vertex `{0}` belongs to no hyperedge")]
    IsolatedVertex(String),

    #[error("edge #{edge} ({members}): {reason}")]
    InvalidEdge {
        edge: usize,
        members: String,
        reason: String,
    },

    #[error("vertices `{x}` and `{y}` are at infinite distance")]
    InfiniteDistance { x: String, y: String },

    #[error("hypergraph is not connected")]
    NotConnected,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid face selection: {0}")]
    InvalidSelection(String),

    #[error("pair ({p}, {q}) is not maximal: d(p,q) = {distance} but 2/K = {bound}")]
    NonMaximalPair {
        p: String,
        q: String,
        distance: u32,
        bound: f64,
    },

    #[error("{solver} did not converge within {iterations} iterations (last certificate {certificate:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        certificate: f64,
    },

    #[error("oracle cap exceeded: {what} = {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } => 2,
            _ => 1,
        }
    }
}
