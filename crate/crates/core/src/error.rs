use thiserror::Error;

pub type Result<T> = std::result::Result<T, IdsError>;

#[derive(Debug, Error)]
pub enum IdsError {
    /// Invalid or inconsistent configuration (exit code 2 in the CLI).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("factorization broke down at shift {shift:e} after {attempts} attempts")]
    Factorization { shift: f64, attempts: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("energy {energy} outside the computed range [{lo}, {hi}]")]
    Range { energy: f64, lo: f64, hi: f64 },

    #[error("sample {index} (seed {seed}) failed: {source}")]
    Sample {
        seed: u64,
        index: u64,
        #[source]
        source: Box<IdsError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IdsError {
    pub fn config(msg: impl Into<String>) -> Self {
        IdsError::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        IdsError::Domain(msg.into())
    }

    pub fn is_config(&self) -> bool {
        matches!(self, IdsError::Config(_))
    }
}
