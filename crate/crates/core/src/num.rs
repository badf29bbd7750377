//! Scalar abstraction: every kernel in this crate is generic over the
//! floating-point type.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Working scalar for all tensor kernels.
///
/// `f64` is the verification-grade choice; `f32` trades the tight algebraic
/// tolerances for speed. The bound combines `num_traits` conversions with
/// `nalgebra`'s field operations so dense linear algebra works out of the box.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync> Real for T {}

/// Converts an `f64` literal into the working scalar.
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

/// Lossy view of a scalar as `f64`, used for error payloads and reports.
pub fn approx_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
