use thiserror::Error;

/// Errors raised while building graphs, evaluating answers or planning questions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("directed cycle through node `{0}`")]
    CycleDetected(String),
    #[error("edge references undeclared node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` declared more than once")]
    DuplicateNode(String),
    #[error("graph does not have the required structure: expected {expected}")]
    WrongStructure { expected: &'static str },
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("answers are inconsistent: {0}")]
    InconsistentAnswers(String),
    #[error("{what}: size {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("budget {k} is outside the closed-form regime (limit {limit})")]
    BudgetTooLarge { k: usize, limit: usize },
    #[error("no solver applies to a {structure} with {n} nodes")]
    NoSolverApplicable { structure: String, n: usize },
    #[error("invalid target set: {0}")]
    InvalidTargets(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
