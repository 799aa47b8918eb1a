//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building models or evolving states.
///
/// Variants split into input problems (bad dimensions, bad parameters, bad
/// scenario files) and numerical failures (non-convergence, trace drift,
/// positivity loss). The CLI maps the former to exit code 2 and the latter
/// to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("operator is not Hermitian: max |A - A^dag| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("not a valid density matrix: {0}")]
    NotDensity(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigNoConvergence { sweeps: usize, off_norm: f64 },

    #[error(
        "propagator series did not converge: residual {residual:e} after {terms} terms \
         (shrink the sub-step or raise k_max)"
    )]
    SeriesNoConvergence { residual: f64, terms: usize },

    #[error(
        "trace drift {drift:e} exceeds {bound:e} at step {step}; \
         the integrator step is too large"
    )]
    TraceDrift { drift: f64, bound: f64, step: usize },

    #[error("positivity violated: min eigenvalue {min_eig:e} below -{bound:e}")]
    Positivity { min_eig: f64, bound: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error("in scenario `{context}`: {source}")]
    WithContext {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach scenario context to an error bubbling out of a run.
    pub fn in_context(self, context: impl Into<String>) -> Self {
        Error::WithContext { context: context.into(), source: Box::new(self) }
    }

    /// True for errors that indicate a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EigNoConvergence { .. }
            | Error::SeriesNoConvergence { .. }
            | Error::TraceDrift { .. }
            | Error::Positivity { .. } => true,
            Error::WithContext { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
