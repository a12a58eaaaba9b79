use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid input (bad configuration, malformed model, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The data carry no information for the requested fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("optimizer did not converge after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    /// The pivoted CP elimination broke down on the given path.
    #[error("CP decomposition infeasible at step {step} (pivot {pivot}): {reason}")]
    CpInfeasible {
        step: usize,
        pivot: usize,
        reason: String,
    },

    #[error("CP ensemble budget exhausted: {successes} successes in {attempts} attempts (failure rate {failure_rate:.3})")]
    BudgetExhausted {
        attempts: usize,
        successes: usize,
        failure_rate: f64,
    },

    /// Failure inside one replicate, cluster or sweep point, annotated with its index.
    #[error("{context} {index}: {source}")]
    Indexed {
        context: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(self, context: &'static str, index: usize) -> Self {
        Error::Indexed {
            context,
            index,
            source: Box::new(self),
        }
    }

    /// The innermost error behind any index annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Indexed { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for numerical breakdowns as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NonConvergence { .. } | Error::CpInfeasible { .. } | Error::BudgetExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
