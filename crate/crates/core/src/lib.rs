//! Natural-lift Kähler geometry on cotangent bundles, verified numerically.
//!
//! Over a base manifold of constant sectional curvature the crate assembles
//! the lifted almost complex structure `J`, the lifted Riemannian metric `G`
//! and the fundamental 2-form `Ω` from pointwise coefficient functions of the
//! energy density, then checks each level of the structure chain
//!
//! > almost complex → integrable → Hermitian → almost Kähler → Kähler
//!
//! with independent residuals: exact algebra where the theory gives algebra
//! (`J² = −I`, `JᵀGJ = G`, coefficient identities) and central-difference
//! oracles where it gives differential conditions (the Nijenhuis tensor,
//! `dΩ`, `∇J`).
//!
//! All numerics are generic over the scalar type through [`num::Real`];
//! `f64` aliases for the main types live at the crate root.

pub mod bundle_calculus;
pub mod config;
pub mod error;
pub mod lift_algebra;
pub mod num;
pub mod scalar_curves;
pub mod space_forms;
pub mod verifier;

pub use error::{Error, Result};
pub use num::Real;

pub type ScalarCurve64 = scalar_curves::ScalarCurve<f64>;
pub type CurveJet64 = scalar_curves::CurveJet<f64>;
pub type SpaceForm64 = space_forms::SpaceForm<f64>;
pub type ChartPoint64 = bundle_calculus::ChartPoint<f64>;
pub type FrameTensor64 = bundle_calculus::FrameTensor<f64>;
pub type LiftCoefficients64 = lift_algebra::LiftCoefficients<f64>;
pub type MetricCoefficients64 = lift_algebra::MetricCoefficients<f64>;
pub type RunConfig64 = config::RunConfig<f64>;
pub type VerificationReport64 = verifier::VerificationReport<f64>;

pub type ScalarCurve32 = scalar_curves::ScalarCurve<f32>;
pub type SpaceForm32 = space_forms::SpaceForm<f32>;
pub type ChartPoint32 = bundle_calculus::ChartPoint<f32>;
pub type FrameTensor32 = bundle_calculus::FrameTensor<f32>;
pub type LiftCoefficients32 = lift_algebra::LiftCoefficients<f32>;
