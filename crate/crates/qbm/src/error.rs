//! Crate-wide error type.
//!
//! Every fallible routine returns [`Result`]. Variants are grouped by the
//! kind of failure rather than by module, so callers can match on the
//! mathematical situation (a pole, a divergent integral, a lost digit
//! budget) independent of which routine hit it.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<V> = core::result::Result<V, Error>;

/// All failure modes of the numerical engine.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A special function was evaluated at one of its poles.
    #[error("pole at {location}: {context}")]
    Pole { location: String, context: String },

    /// A special function was evaluated on its branch cut.
    #[error("branch cut at {location}: {context}")]
    BranchCut { location: String, context: String },

    /// A series or iteration exhausted its truncation budget before reaching
    /// the requested tolerance.
    #[error("no convergence after {terms} terms (residual {residual:e}, tolerance {tolerance:e})")]
    Convergence {
        terms: usize,
        residual: f64,
        tolerance: f64,
    },

    /// An unscaled value exceeds the representable range; a scaled variant of
    /// the routine exists and should be used instead.
    #[error("overflow in {context}; use the scaled form")]
    Overflow { context: String },

    /// A quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: {context} (estimated error {error:e})")]
    Quadrature { context: String, error: f64 },

    /// A requested quantity is a divergent integral for this model.
    #[error("divergent quantity: {context}")]
    Divergence { context: String },

    /// A tabulated model was queried outside its grid.
    #[error("interpolation outside tabulated range: {context}")]
    Interpolation { context: String },

    /// A candidate damping kernel induces a spectral density that is negative
    /// somewhere.
    #[error("induced spectral density negative at omega={omega}: {context}")]
    NonPositiveSpectrum { omega: f64, context: String },

    /// The numerical Laplace inversion fallback could not certify the
    /// requested accuracy.
    #[error("inverse Laplace accuracy not certified: estimated error {error:e} > {tolerance:e}")]
    FallbackAccuracy { error: f64, tolerance: f64 },

    /// The phase-space propagator is numerically singular and cannot be
    /// inverted to form a two-time transition matrix.
    #[error("singular propagator at t={t}: |det| = {det:e} below threshold")]
    SingularTransition { t: f64, det: f64 },

    /// Polynomial root polishing failed to reach the residual target.
    #[error("root finding stalled: residual {residual:e} > {tolerance:e}")]
    RootFinding { residual: f64, tolerance: f64 },

    /// Parameters sit on (or numerically near) the boundary between dynamical
    /// regimes, where the classification is ill-defined.
    #[error("degenerate regime boundary: {context}")]
    DegenerateBoundary { context: String },

    /// The model has no stationary state, so late-time coefficients or
    /// covariances do not exist.
    #[error("no stationary limit: {context}")]
    NoStationaryLimit { context: String },

    /// A covariance-growth bound was violated.
    #[error("growth bound violated at t={t}: |rate| {rate:e} exceeds bound {bound:e}")]
    BoundViolation { t: f64, rate: f64, bound: f64 },

    /// A state failed a physicality requirement (positive covariance,
    /// uncertainty relation).
    #[error("non-physical state: {context}")]
    NonPhysicalState { context: String },

    /// A cumulant order beyond the supported range was requested.
    #[error("cumulant order {order} unsupported (max {max})")]
    OrderUnsupported { order: usize, max: usize },

    /// A time grid is too coarse to resolve the requested feature.
    #[error("grid too coarse: {context}")]
    GridTooCoarse { context: String },

    /// The integro-differential solver detected numerical instability.
    #[error("integration unstable: residual {residual:e} exceeds {bound:e}")]
    Stability { residual: f64, bound: f64 },

    /// A noise covariance matrix could not be factorized even after the
    /// documented regularization.
    #[error("factorization failed: {context}")]
    Factorization { context: String },

    /// Invalid constructor input or configuration value.
    #[error("invalid input: {context}")]
    InvalidInput { context: String },

    /// File or parse failure while reading tabulated data.
    #[error("I/O or parse failure: {context}")]
    Io { context: String },
}

impl Error {
    pub(crate) fn invalid(context: impl Into<String>) -> Self {
        Error::InvalidInput {
            context: context.into(),
        }
    }

    pub(crate) fn divergence(context: impl Into<String>) -> Self {
        Error::Divergence {
            context: context.into(),
        }
    }
}
