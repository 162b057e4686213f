use thiserror::Error;

/// Errors emitted by the numerical routines.
///
/// Variants split into three families used by callers to classify failures:
/// input validation (bad matrices, violated preconditions), numerical
/// failures (iterations that did not converge, over/underflow, exploding
/// trajectories), and I/O or parse errors from the matrix file routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {deviation:.3e} above tolerance)")]
    NotSymmetric { deviation: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix has non-finite entries")]
    NonFiniteInput,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("eigenvalue sum deviates from trace by {deviation:.3e} (relative)")]
    SpectrumInconsistent { deviation: f64 },

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("norms below underflow threshold; shrink the time horizon")]
    Underflow,

    #[error("target {target} not strictly bracketed by ({alpha0}, {alpha1})")]
    TargetNotBracketed { alpha0: f64, alpha1: f64, target: f64 },

    #[error("discriminant {value:.3e} is negative beyond the clamping guard")]
    NegativeDiscriminant { value: f64 },

    #[error("eigenvalue ladder is degenerate (min gap {gap:.3e})")]
    DegenerateLadder { gap: f64 },

    #[error("time {t} is below the threshold t_alpha = {t_alpha}")]
    TimeBelowThreshold { t: f64, t_alpha: f64 },

    #[error("trajectory blew up (path {path}, step {step})")]
    NonFinite { path: usize, step: usize },

    #[error("analytic gradient disagrees with finite differences (max relative error {max_rel:.3e})")]
    GradientMismatch { max_rel: f64 },

    #[error("integration box too small (boundary/max density ratio {boundary_ratio:.3e})")]
    BoxTooSmall { boundary_ratio: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by invalid input rather than numerics or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NonFiniteInput
                | Error::TargetNotBracketed { .. }
                | Error::DegenerateLadder { .. }
                | Error::DimensionMismatch { .. }
                | Error::GradientMismatch { .. }
                | Error::Invalid(_)
                | Error::Parse(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
