use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid user type: {0}")]
    InvalidType(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid game configuration: {0}")]
    Configuration(String),

    #[error("expected {expected} engines, got {actual}")]
    EngineCountMismatch { expected: usize, actual: usize },

    #[error("satisfaction probability {value} of engine {engine} is outside [0, 1]")]
    Domain { engine: usize, value: f64 },

    #[error("markov chain has no unique stationary distribution at q = {q:?}: closed classes {classes:?}")]
    Reducible { q: Vec<f64>, classes: Vec<Vec<usize>> },

    #[error("operation requires a singleton game: {0}")]
    WrongGame(String),

    #[error("problem too large: {what} has {count} elements (limit {limit})")]
    TooLarge {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no equilibrium supplied")]
    NoEquilibrium,

    #[error("scenario `{name}`: {condition}")]
    ScenarioRange { name: String, condition: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown selection rule `{0}`")]
    UnknownRule(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        let text = e.to_string();
        let msg = text.split(" at line ").next().unwrap_or(&text);
        Error::Parse(format!("line {} column {}: {msg}", e.line(), e.column()))
    }
}
