use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid degree distribution: {0}")]
    InvalidDegrees(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("ensemble not integral: {0}")]
    Integrality(String),

    #[error("invalid ensemble parameters: {0}")]
    InvalidEnsemble(String),

    #[error("multi-Poisson construction ran out of free sockets in round {round}")]
    SocketExhaustion { round: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("output symbol has zero probability under input 0")]
    ImpossibleOutput,

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("population is not symmetric (moment k={k} off by {sigmas:.1} standard errors)")]
    NonSymmetricInput { k: u32, sigmas: f64 },

    #[error("no nontrivial fixed-point branch crosses zero for this ensemble")]
    NoBadBranch,

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("Bethe term requires the logarithm of zero")]
    InconsistentInfinity,

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
