use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size limit exceeded: {what} is {actual}, limit {limit}")]
    SizeLimit {
        what: &'static str,
        actual: u128,
        limit: u128,
    },

    #[error("load error ({context}): {message}")]
    Load {
        context: &'static str,
        message: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid generating set: {}", format_violations(.0))]
    InvalidGamma(Vec<GammaViolation>),

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("solver did not converge after {iterations} iterations (best residuals {residuals:?})")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("stale or corrupted cache: {0}")]
    StaleCache(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn load(context: &'static str, message: impl Into<String>) -> Self {
        Error::Load {
            context,
            message: message.into(),
        }
    }

    /// True for failures that indicate a numerical or internal inconsistency
    /// rather than bad user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Consistency(_) | Error::NoConvergence { .. } | Error::StaleCache(_)
        )
    }
}

/// One violated condition of a candidate generating set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GammaViolation {
    ContainsIdentity,
    /// `element` is present but its inverse is not.
    MissingInverse { element: usize, inverse: usize },
    /// `conjugate = by * element * by^-1` is missing.
    NotConjugationClosed {
        element: usize,
        by: usize,
        conjugate: usize,
    },
    Empty,
}

fn format_violations(v: &[GammaViolation]) -> String {
    v.iter()
        .map(|v| match v {
            GammaViolation::ContainsIdentity => "identity present".to_string(),
            GammaViolation::MissingInverse { element, inverse } => {
                format!("inversion closure fails at element {element} (inverse {inverse} missing)")
            }
            GammaViolation::NotConjugationClosed {
                element,
                by,
                conjugate,
            } => format!(
                "conjugation closure fails at pair ({element}, {by}): {conjugate} missing"
            ),
            GammaViolation::Empty => "empty set".to_string(),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
