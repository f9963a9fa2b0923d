use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("feature {feature} is outside 1..={n}")]
    FeatureOutOfRange { feature: usize, n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid FBDD: {0}")]
    InvalidFbdd(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("desk-scale limit exceeded for {what}: n = {n} > {limit}")]
    DeskScale { what: &'static str, n: usize, limit: usize },

    #[error("budget exceeded for {what} (budget {budget})")]
    Budget { what: &'static str, budget: u64 },

    #[error("deadline reached during {0}")]
    Timeout(&'static str),

    #[error("{query} is not supported for {model} with method {method}")]
    Unsupported { query: String, model: String, method: String },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
