use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid construction parameters (rules, profiles, corpora, solvers).
    #[error("configuration error: {0}")]
    Config(String),

    /// An integrand or profile produced a non-finite value.
    #[error("evaluation error at r = {node:e}: {what}")]
    Evaluation { node: f64, what: String },

    /// A weighted integral diverges at the origin: the integrand behaves
    /// like `r^exponent` with `exponent <= -1`.
    #[error("divergent integral in {term}: integrand ~ r^{exponent} near 0")]
    Divergence { term: String, exponent: f64 },

    /// The requested operation needs data the representation does not carry
    /// (derivative depth, harmonic degree beyond the table, ...).
    #[error("capability error: {0}")]
    Capability(String),

    /// A side condition of an inequality is violated by the input.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// Parameter outside the domain of a closed-form curve.
    #[error("domain error: {0}")]
    Domain(String),

    /// Iterative eigen-solver did not reach its residual target.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    /// Matrix assembly produced something structurally wrong.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// A profile with no usable signal was passed where one is required.
    #[error("degenerate profile: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub(crate) fn constraint(msg: impl Into<String>) -> Self {
        Error::Constraint(msg.into())
    }

    /// Attach the name of the term being computed to a divergence error.
    pub fn in_term(self, term: &str) -> Self {
        match self {
            Error::Divergence { exponent, .. } => Error::Divergence { term: term.to_string(), exponent },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
