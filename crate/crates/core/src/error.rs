use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite numeric input: {0}")]
    NonFinite(&'static str),

    #[error("no attractor for plain LMS")]
    NoAttractor,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size {mu} outside the stable range (0, {mu_max})")]
    Stability { mu: f64, mu_max: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameter(String),

    #[error("closed forms disagree: {what} ({a} vs {b}, relative gap {rel:e})")]
    InconsistentForms {
        what: &'static str,
        a: f64,
        b: f64,
        rel: f64,
    },

    #[error("degenerate spectrum ({0}); use the difference-equation recursion instead")]
    DegenerateSpectrum(String),

    #[error("ill-conditioned initial-value system (condition number {0:e})")]
    IllConditioned(f64),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("series not converged: log-MSD slope {slope:e} per iteration over the final {window} samples")]
    NotConverged { slope: f64, window: usize },

    #[error("all {trials} trials diverged (earliest at iteration {first_iteration})")]
    Diverged {
        trials: usize,
        first_iteration: usize,
    },
}
