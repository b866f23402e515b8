//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("conditioning block is singular beyond jitter (indices {indices:?})")]
    DegenerateBlock { indices: Vec<usize> },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("matrix of dimension {dim} is not positive definite (pivot {pivot} at {at})")]
    NotPositiveDefinite { dim: usize, pivot: f64, at: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("every mixture component has zero likelihood{}", sample_context(.sample_index))]
    DegenerateMixture { sample_index: Option<usize> },

    #[error("operation requires a {required} model, got {got}")]
    UnsupportedModel { required: &'static str, got: String },

    #[error("exhaustive search over {count} subsets exceeds budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("selector failed after choosing {partial:?}: {source}")]
    PartialSelection {
        partial: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn sample_context(idx: &Option<usize>) -> String {
    match idx {
        Some(i) => format!(" (joint sample {i})"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit code mandated by the CLI contract: 1 for configuration
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::BudgetExceeded { .. }
            | Error::UnsupportedModel { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
