//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input to a curve evaluation is not a finite nonnegative real, or an
    /// evaluation produced a non-finite value.
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    /// Base point lies outside the admissible chart.
    #[error("point with |q| = {norm:.6} is outside the chart of radius {radius:.6}")]
    OutsideChart { norm: f64, radius: f64 },

    /// A finite-difference stencil would leave the admissible chart.
    #[error("stencil of extent {extent:.3e} around |q| = {norm:.6} leaves the chart of radius {radius:.6}")]
    StencilOutsideChart { norm: f64, extent: f64, radius: f64 },

    /// One of the strict positivity constraints on the structure coefficients
    /// fails.
    #[error("positivity violated: {what} = {value:.6e} must be > 0")]
    PositivityViolation { what: &'static str, value: f64 },

    /// The shared denominator of the integrable-coefficient formulas is too
    /// close to its breakdown locus.
    #[error("singular denominator: |D| = {value:.3e} <= {threshold:.1e}")]
    SingularDenominator { value: f64, threshold: f64 },

    /// The proportionality factors of the metric are outside their domain.
    #[error("proportionality domain violated: {what} = {value:.6e} must be > 0")]
    ProportionalityDomain { what: &'static str, value: f64 },

    /// A coefficient record was evaluated at a different energy density than
    /// the chart point it is paired with.
    #[error("coefficients evaluated at t = {coeff_t:.12e} but the point has t = {point_t:.12e}")]
    CoefficientMismatch { coeff_t: f64, point_t: f64 },

    /// A matrix expected to be positive definite is not.
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    /// The change-of-basis matrix cannot be inverted.
    #[error("change-of-basis matrix is singular")]
    SingularFrame,

    /// Two frame tensors cannot be combined.
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    /// Sampling rejected too large a fraction of candidate points.
    #[error("sampling exhausted: accepted {accepted} of {attempts} attempts")]
    ExhaustedSampling { accepted: usize, attempts: usize },

    /// A falsification run did not push the targeted check above its floor.
    #[error("perturbation too small: {check} residual {residual:.3e} is below the floor {floor:.3e}")]
    PerturbationTooSmall {
        check: String,
        residual: f64,
        floor: f64,
    },

    /// Configuration is structurally valid JSON but semantically wrong.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
