//! Coefficient functions of the energy density with exact derivatives.
//!
//! The integrability formulas consume first derivatives and the cross-checks
//! consume second derivatives, so curves are restricted to families closed
//! under differentiation (polynomials and `A·exp(k·t)`). Derivatives are
//! always analytic inside the engine; finite differences appear only as test
//! oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{approx_f64, real, Real};

/// A smooth coefficient function of the energy density `t`.
///
/// Config form: `{"family": "poly", "coeffs": [..]}` (ascending degree),
/// `{"family": "exp", "A": .., "k": ..}` or `{"family": "const", "value": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ScalarCurve<T> {
    #[serde(rename = "poly")]
    Polynomial { coeffs: Vec<T> },
    #[serde(rename = "exp")]
    Exponential {
        #[serde(rename = "A")]
        amplitude: T,
        k: T,
    },
    #[serde(rename = "const")]
    Constant { value: T },
}

/// Value and first two derivatives of a curve at a given `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> ScalarCurve<T> {
    pub fn poly(coeffs: Vec<T>) -> Self {
        ScalarCurve::Polynomial { coeffs }
    }

    pub fn exponential(amplitude: T, k: T) -> Self {
        ScalarCurve::Exponential { amplitude, k }
    }

    pub fn constant(value: T) -> Self {
        ScalarCurve::Constant { value }
    }

    /// All curve parameters are finite reals.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: T| v.is_finite();
        let ok = match self {
            ScalarCurve::Polynomial { coeffs } => coeffs.iter().all(|&c| finite(c)),
            ScalarCurve::Exponential { amplitude, k } => finite(*amplitude) && finite(*k),
            ScalarCurve::Constant { value } => finite(*value),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFiniteInput("curve parameter is not finite".into()))
        }
    }

    /// Evaluates the curve together with its first and second derivatives.
    ///
    /// Polynomial derivatives come from coefficient shifts, exponentials from
    /// the closed form.
    pub fn eval_jet(&self, t: T) -> Result<CurveJet<T>> {
        if !t.is_finite() || t < T::zero() {
            return Err(Error::NonFiniteInput(format!(
                "t = {} must be a finite nonnegative real",
                approx_f64(t)
            )));
        }
        self.validate()?;
        let jet = match self {
            ScalarCurve::Constant { value } => CurveJet {
                value: *value,
                d1: T::zero(),
                d2: T::zero(),
            },
            ScalarCurve::Polynomial { coeffs } => poly_jet(coeffs, t),
            ScalarCurve::Exponential { amplitude, k } => {
                let value = *amplitude * (*k * t).exp();
                CurveJet {
                    value,
                    d1: *k * value,
                    d2: *k * *k * value,
                }
            }
        };
        if jet.value.is_finite() && jet.d1.is_finite() && jet.d2.is_finite() {
            Ok(jet)
        } else {
            Err(Error::NonFiniteInput(format!(
                "curve evaluation overflowed at t = {}",
                approx_f64(t)
            )))
        }
    }
}

fn poly_jet<T: Real>(coeffs: &[T], t: T) -> CurveJet<T> {
    // Horner on the shifted coefficient arrays [c_i], [i c_i], [i(i-1) c_i].
    let mut value = T::zero();
    let mut d1 = T::zero();
    let mut d2 = T::zero();
    for (i, &c) in coeffs.iter().enumerate().rev() {
        let deg = real::<T>(i as f64);
        value = value * t + c;
        if i >= 1 {
            d1 = d1 * t + deg * c;
        }
        if i >= 2 {
            d2 = d2 * t + deg * (deg - T::one()) * c;
        }
    }
    CurveJet { value, d1, d2 }
}

/// Compares the analytic derivatives of `curve` against central differences
/// of its value, normalized by `1 + |value|`.
pub fn check_derivative_consistency<T: Real>(curve: &ScalarCurve<T>, t: T, h: T) -> Result<T> {
    if !h.is_finite() || h <= T::zero() || t < h {
        return Err(Error::InvalidConfig(format!(
            "derivative check requires t >= h > 0, got t = {}, h = {}",
            approx_f64(t),
            approx_f64(h)
        )));
    }
    let center = curve.eval_jet(t)?;
    let plus = curve.eval_jet(t + h)?;
    let minus = curve.eval_jet(t - h)?;
    let two = real::<T>(2.0);
    let d1_fd = (plus.value - minus.value) / (two * h);
    let d2_fd = (plus.value - two * center.value + minus.value) / (h * h);
    let scale = T::one() + center.value.abs();
    Ok(((center.d1 - d1_fd).abs().max((center.d2 - d2_fd).abs())) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_jet() {
        let c = ScalarCurve::poly(vec![1.0]);
        let jet = c.eval_jet(2.0).unwrap();
        assert_eq!((jet.value, jet.d1, jet.d2), (1.0, 0.0, 0.0));
    }

    #[test]
    fn linear_curve_jet() {
        let c = ScalarCurve::poly(vec![1.0, 1.0]);
        let jet = c.eval_jet(0.5).unwrap();
        assert_eq!((jet.value, jet.d1, jet.d2), (1.5, 1.0, 0.0));
    }

    #[test]
    fn exponential_jet_at_zero() {
        // Analytic derivatives of exp(2t) at t = 0; the central-difference
        // cross-check runs below over a grid.
        let c: ScalarCurve<f64> = ScalarCurve::exponential(1.0, 2.0);
        let jet = c.eval_jet(0.0).unwrap();
        assert!((jet.value - 1.0).abs() < 1e-15);
        assert!((jet.d1 - 2.0).abs() < 1e-15);
        assert!((jet.d2 - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_t() {
        let c = ScalarCurve::poly(vec![1.0]);
        assert!(matches!(c.eval_jet(-1.0), Err(Error::NonFiniteInput(_))));
        assert!(matches!(
            c.eval_jet(f64::NAN),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn derivative_consistency_examples() {
        let constant = ScalarCurve::constant(3.0);
        assert!(check_derivative_consistency(&constant, 1.0, 1e-4).unwrap() <= 1e-10);

        let linear = ScalarCurve::poly(vec![1.0, 1.0]);
        assert!(check_derivative_consistency(&linear, 1.0, 1e-4).unwrap() <= 1e-8);

        let exp2 = ScalarCurve::exponential(1.0, 2.0);
        assert!(check_derivative_consistency(&exp2, 0.5, 1e-4).unwrap() <= 1e-6);
    }

    #[test]
    fn derivative_consistency_over_grid() {
        let curves: Vec<ScalarCurve<f64>> = vec![
            ScalarCurve::constant(2.5),
            ScalarCurve::poly(vec![1.0, 1.0]),
            ScalarCurve::poly(vec![0.3, -1.2, 0.7, 0.05]),
            ScalarCurve::exponential(1.0, 0.3),
            ScalarCurve::exponential(2.0, -0.8),
        ];
        for curve in &curves {
            for i in 1..=40 {
                let t = 4.0 * (i as f64) / 40.0;
                let r = check_derivative_consistency(curve, t, 1e-4).unwrap();
                assert!(r <= 1e-6, "residual {r:.3e} at t = {t} for {curve:?}");
            }
        }
    }

    #[test]
    fn poly_at_zero_is_constant_coefficient() {
        let c = ScalarCurve::poly(vec![0.123456789f64, 7.0, -3.0]);
        assert_eq!(c.eval_jet(0.0).unwrap().value, 0.123456789);
    }

    #[test]
    fn overflowing_evaluation_is_an_error() {
        let c = ScalarCurve::exponential(1.0f64, 500.0);
        assert!(matches!(c.eval_jet(2.0), Err(Error::NonFiniteInput(_))));
    }

    #[test]
    fn non_finite_parameters_rejected() {
        let c = ScalarCurve::poly(vec![1.0, f64::INFINITY]);
        assert!(c.validate().is_err());
        assert!(c.eval_jet(1.0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let c: ScalarCurve<f64> =
            serde_json::from_str(r#"{"family": "exp", "A": 1.5, "k": -0.25}"#).unwrap();
        assert_eq!(c, ScalarCurve::exponential(1.5, -0.25));
        let p: ScalarCurve<f64> =
            serde_json::from_str(r#"{"family": "poly", "coeffs": [1.0, 2.0]}"#).unwrap();
        assert_eq!(p, ScalarCurve::poly(vec![1.0, 2.0]));
    }

    #[test]
    fn f32_jets_work() {
        let c: ScalarCurve<f32> = ScalarCurve::exponential(1.0, 2.0);
        let jet = c.eval_jet(0.0f32).unwrap();
        assert!((jet.d2 - 4.0).abs() < 1e-6);
    }
}
