//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A structural constraint on the problem parameters is violated.
    /// `constraint` names the inequality, e.g. `"N ≥ K"`.
    #[error("constraint violated: {constraint} ({detail})")]
    Constraint { constraint: String, detail: String },

    /// The singular coefficient lies outside the admissible range.
    #[error("inadmissible mu = {mu}: {bound}")]
    Admissibility { mu: f64, bound: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear solve broke down: {0}")]
    LinearSolve(String),

    /// The fiber map has no interior maximizer for this field.
    #[error("retraction infeasible: {0}")]
    RetractionInfeasible(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero mass")]
    ZeroMass,

    /// The mass threshold precondition does not hold.
    #[error("threshold violated: left-hand value {lhs} ≥ 1")]
    Threshold { lhs: f64 },

    #[error("blow-up guard tripped at t = {t}: max density {density} exceeds {bound}")]
    BlowUp { t: f64, density: f64, bound: f64 },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<crate::solver::SolveResult>,
    },
}

impl Error {
    pub(crate) fn constraint(constraint: &str, detail: impl Into<String>) -> Self {
        Error::Constraint {
            constraint: constraint.to_string(),
            detail: detail.into(),
        }
    }
}
