use thiserror::Error;

/// Errors raised by the coefficient engine and the analysis routines built on it.
#[derive(Debug, Error)]
pub enum LfoldError {
    #[error("requested size {requested} exceeds the configured maximum {max}")]
    ResourceLimit { requested: usize, max: usize },

    #[error("index {index} is outside the table (size {size})")]
    Index { index: u64, size: usize },

    #[error("Deligne bound violated: |lambda(p)| = {value} > 2")]
    DeligneViolation { value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not a normalized eigenform: a(1) = {0}")]
    NotNormalized(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("cache format error at line {line}: {msg}")]
    CacheFormat { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LfoldError {
    /// Short machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            LfoldError::ResourceLimit { .. } => "resource_limit",
            LfoldError::Index { .. } => "index",
            LfoldError::DeligneViolation { .. } => "deligne_violation",
            LfoldError::Domain(_) => "domain",
            LfoldError::NotNormalized(_) => "not_normalized",
            LfoldError::IllConditioned(_) => "ill_conditioned",
            LfoldError::CacheFormat { .. } => "cache_format",
            LfoldError::Config(_) => "config",
            LfoldError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, LfoldError>;
