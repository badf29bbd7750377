//! Pointwise coefficient algebra of the natural lifts.
//!
//! Everything here is scalar algebra at a fixed energy density `t`: completing
//! the almost-complex coefficient set, computing the integrable family,
//! building metric coefficients by proportionality, and evaluating the
//! algebraic residuals that the structure theorems predict to vanish.

use crate::error::{Error, Result};
use crate::num::{approx_f64, real, Real};
use crate::scalar_curves::{CurveJet, ScalarCurve};

/// Gate below which the shared denominator of the integrable family counts as
/// singular.
pub const SINGULAR_DENOMINATOR_THRESHOLD: f64 = 1e-8;

/// Coefficients `(a1..a4, b1..b4)` of the almost complex structure at a fixed
/// energy density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftCoefficients<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub a4: T,
    pub b1: T,
    pub b2: T,
    pub b3: T,
    pub b4: T,
    pub t: T,
}

/// Coefficients `(c1..c3, d1..d3)` of the lifted metric together with the
/// proportionality factors that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoefficients<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub lambda: T,
    pub mu: T,
    pub t: T,
}

/// Integrable-family coefficients `(b1, b2, b3)` and the shared denominator
/// they were divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrableB<T> {
    pub b1: T,
    pub b2: T,
    pub b3: T,
    pub denominator: T,
}

/// Residuals of the proof identities that characterize the integrable family.
///
/// `d_a2_bracket` divides by `a3 + t·b3` and is reported as `None` when that
/// denominator degenerates; the remaining entries are always defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyResiduals<T> {
    /// Residual of the bracket route to `a2'`; `None` when `a3 + t·b3 ≈ 0`.
    pub d_a2_bracket: Option<T>,
    /// Residual of the forced expression for `a1'`.
    pub d_a1: T,
    /// Residual of the forced expression for `a3'`.
    pub d_a3: T,
    /// Residual of the reduced expression for `a2'`.
    pub d_a2: T,
    /// Residual of the product rule tying `a1 a2' + a1' a2` to `2 a3 a3'`.
    pub product_rule: T,
}

impl<T: Real> ConsistencyResiduals<T> {
    /// Largest residual among the applicable entries.
    pub fn max_applicable(&self) -> T {
        let mut worst = self.d_a1.max(self.d_a3).max(self.d_a2).max(self.product_rule);
        if let Some(b) = self.d_a2_bracket {
            worst = worst.max(b);
        }
        worst
    }
}

/// Positivity gate that also rejects non-finite values.
pub(crate) fn not_positive<T: Real>(value: T) -> bool {
    !value.is_finite() || value <= T::zero()
}

/// Relative residual normalized by `1 + |reference|`.
fn rel_residual<T: Real>(lhs: T, rhs: T) -> T {
    (lhs - rhs).abs() / (T::one() + rhs.abs())
}

impl<T: Real> LiftCoefficients<T> {
    /// Both defining identities of a valid almost complex structure, as
    /// relative residuals: `a1·a2 = 1 + a3²` and
    /// `(a1+2t·b1)(a2+2t·b2) = 1 + (a3+2t·b3)²`.
    pub fn structure_residuals(&self) -> (T, T) {
        let two_t = real::<T>(2.0) * self.t;
        let first = rel_residual(self.a1 * self.a2, T::one() + self.a3 * self.a3);
        let shifted = self.a3 + two_t * self.b3;
        let second = rel_residual(
            (self.a1 + two_t * self.b1) * (self.a2 + two_t * self.b2),
            T::one() + shifted * shifted,
        );
        (first, second)
    }

    pub fn validate(&self) -> Result<()> {
        let two_t = real::<T>(2.0) * self.t;
        let checks: [(&'static str, T); 4] = [
            ("a1", self.a1),
            ("a2", self.a2),
            ("a1 + 2t b1", self.a1 + two_t * self.b1),
            ("a2 + 2t b2", self.a2 + two_t * self.b2),
        ];
        for (what, value) in checks {
            if not_positive(value) {
                return Err(Error::PositivityViolation {
                    what,
                    value: approx_f64(value),
                });
            }
        }
        if self.a4 != -self.a3 || self.b4 != -self.b3 {
            return Err(Error::InvalidConfig(
                "antidiagonal coefficients must satisfy a4 = -a3, b4 = -b3".into(),
            ));
        }
        let (r1, r2) = self.structure_residuals();
        // 1e-12 relative for f64; wider scalar types fall back to a multiple
        // of their machine epsilon
        let tol = real::<T>(1e-12).max(T::default_epsilon() * real::<T>(100.0));
        if r1 > tol || r2 > tol {
            return Err(Error::InvalidConfig(format!(
                "coefficients do not define an almost complex structure (residuals {:.3e}, {:.3e})",
                approx_f64(r1),
                approx_f64(r2)
            )));
        }
        Ok(())
    }
}

/// Completes `(a1, a3, b1, b3)` to the full coefficient set of an almost
/// complex structure:
/// `a2 = (1+a3²)/a1`, `b2 = (2a3·b3 − a2·b1 + 2t·b3²)/(a1+2t·b1)`,
/// `a4 = −a3`, `b4 = −b3`.
pub fn complete_acs<T: Real>(a1: T, a3: T, b1: T, b3: T, t: T) -> Result<LiftCoefficients<T>> {
    if t < T::zero() || !t.is_finite() {
        return Err(Error::NonFiniteInput(format!(
            "t = {} must be nonnegative",
            approx_f64(t)
        )));
    }
    if not_positive(a1) {
        return Err(Error::PositivityViolation {
            what: "a1",
            value: approx_f64(a1),
        });
    }
    let two_t = real::<T>(2.0) * t;
    let shifted_a1 = a1 + two_t * b1;
    if not_positive(shifted_a1) {
        return Err(Error::PositivityViolation {
            what: "a1 + 2t b1",
            value: approx_f64(shifted_a1),
        });
    }
    let a2 = (T::one() + a3 * a3) / a1;
    let b2 = (real::<T>(2.0) * a3 * b3 - a2 * b1 + two_t * b3 * b3) / shifted_a1;
    let lc = LiftCoefficients {
        a1,
        a2,
        a3,
        a4: -a3,
        b1,
        b2,
        b3,
        b4: -b3,
        t,
    };
    lc.validate()?;
    Ok(lc)
}

/// Value and derivative of `a2 = (1+a3²)/a1`, derived analytically from the
/// jets of `a1` and `a3`.
pub(crate) fn a2_jet<T: Real>(a1: &CurveJet<T>, a3: &CurveJet<T>) -> (T, T) {
    let two = real::<T>(2.0);
    let a2 = (T::one() + a3.value * a3.value) / a1.value;
    let d_a2 = (two * a3.value * a3.d1 * a1.value - (T::one() + a3.value * a3.value) * a1.d1)
        / (a1.value * a1.value);
    (a2, d_a2)
}

/// Shared denominator `D = a1 − 2t·a1' − 2ct·a2 − 4ct²·a2'` of the integrable
/// family, without the singularity gate (sweeps report it raw).
pub fn integrable_denominator<T: Real>(
    a1: &ScalarCurve<T>,
    a3: &ScalarCurve<T>,
    c: T,
    t: T,
) -> Result<T> {
    let j1 = a1.eval_jet(t)?;
    let j3 = a3.eval_jet(t)?;
    let (a2, d_a2) = a2_jet(&j1, &j3);
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    Ok(j1.value - two * t * j1.d1 - two * c * t * a2 - four * c * t * t * d_a2)
}

/// Coefficients `(b1, b2, b3)` that make the almost complex structure
/// integrable over a base of constant curvature `c`.
pub fn integrable_b<T: Real>(
    a1: &ScalarCurve<T>,
    a3: &ScalarCurve<T>,
    c: T,
    t: T,
) -> Result<IntegrableB<T>> {
    let j1 = a1.eval_jet(t)?;
    let j3 = a3.eval_jet(t)?;
    if not_positive(j1.value) {
        return Err(Error::PositivityViolation {
            what: "a1",
            value: approx_f64(j1.value),
        });
    }
    let (a2, d_a2) = a2_jet(&j1, &j3);
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    let four = real::<T>(4.0);
    let d = j1.value - two * t * j1.d1 - two * c * t * a2 - four * c * t * t * d_a2;
    let threshold = real::<T>(SINGULAR_DENOMINATOR_THRESHOLD);
    if d.abs() <= threshold {
        return Err(Error::SingularDenominator {
            value: approx_f64(d.abs()),
            threshold: SINGULAR_DENOMINATOR_THRESHOLD,
        });
    }
    let b1 = (two * c * c * t * a2 * a2 + two * c * t * j1.value * d_a2 + j1.value * j1.d1 - c
        + three * c * j3.value * j3.value)
        / d;
    let b2 = (two * t * j3.d1 * j3.d1 - two * t * j1.d1 * d_a2
        + c * a2 * a2
        + two * c * t * a2 * d_a2
        + j1.value * d_a2)
        / d;
    let b3 = (j1.value * j3.d1 + two * c * a2 * j3.value + four * c * t * d_a2 * j3.value
        - two * c * t * a2 * j3.d1)
        / d;
    Ok(IntegrableB {
        b1,
        b2,
        b3,
        denominator: d,
    })
}

/// Residuals of the proof identities at the integrable coefficients.
pub fn integrability_consistency<T: Real>(
    a1: &ScalarCurve<T>,
    a3: &ScalarCurve<T>,
    c: T,
    t: T,
) -> Result<ConsistencyResiduals<T>> {
    let ib = integrable_b(a1, a3, c, t)?;
    integrability_consistency_with(a1, a3, c, t, ib.b1, ib.b2, ib.b3)
}

/// Same residuals with caller-supplied `(b1, b2, b3)`, used to show that
/// perturbed coefficients break the identities.
pub fn integrability_consistency_with<T: Real>(
    a1: &ScalarCurve<T>,
    a3: &ScalarCurve<T>,
    c: T,
    t: T,
    b1: T,
    b2: T,
    b3: T,
) -> Result<ConsistencyResiduals<T>> {
    let j1 = a1.eval_jet(t)?;
    let j3 = a3.eval_jet(t)?;
    let (a2, d_a2) = a2_jet(&j1, &j3);
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    let four = real::<T>(4.0);
    let shifted_a1 = j1.value + two * t * b1;

    let bracket_den = j3.value + t * b3;
    let d_a2_bracket = if bracket_den.abs() > real::<T>(SINGULAR_DENOMINATOR_THRESHOLD) {
        let rhs = (a2 * j3.d1 + two * j3.value * b2 - a2 * b3) / (two * bracket_den);
        Some((d_a2 - rhs).abs())
    } else {
        None
    };

    let d_a1_rhs = (j1.value * b1
        + c * (T::one() - three * j3.value * j3.value - four * t * j3.value * b3))
        / shifted_a1;
    let d_a3_rhs = (j1.value * b3 - two * c * a2 * (j3.value + t * b3)) / shifted_a1;
    let d_a2_rhs = (two * j3.value * b3 - a2 * b1 - c * a2 * a2) / shifted_a1;

    Ok(ConsistencyResiduals {
        d_a2_bracket,
        d_a1: (j1.d1 - d_a1_rhs).abs(),
        d_a3: (j3.d1 - d_a3_rhs).abs(),
        d_a2: (d_a2 - d_a2_rhs).abs(),
        product_rule: (j1.value * d_a2 + j1.d1 * a2 - two * j3.value * j3.d1).abs(),
    })
}

/// Builds metric coefficients by proportionality:
/// `c_i = λ·a_i`, `d_i = λ·b_i + μ·(a_i + 2t·b_i)`.
pub fn metric_coefficients<T: Real>(
    lc: &LiftCoefficients<T>,
    lambda: T,
    mu: T,
) -> Result<MetricCoefficients<T>> {
    let two_t = real::<T>(2.0) * lc.t;
    if not_positive(lambda) {
        return Err(Error::ProportionalityDomain {
            what: "lambda",
            value: approx_f64(lambda),
        });
    }
    let shifted = lambda + two_t * mu;
    if not_positive(shifted) {
        return Err(Error::ProportionalityDomain {
            what: "lambda + 2t mu",
            value: approx_f64(shifted),
        });
    }
    let mc = MetricCoefficients {
        c1: lambda * lc.a1,
        c2: lambda * lc.a2,
        c3: lambda * lc.a3,
        d1: lambda * lc.b1 + mu * (lc.a1 + two_t * lc.b1),
        d2: lambda * lc.b2 + mu * (lc.a2 + two_t * lc.b2),
        d3: lambda * lc.b3 + mu * (lc.a3 + two_t * lc.b3),
        lambda,
        mu,
        t: lc.t,
    };
    mc.assert_positive_definite()?;
    Ok(mc)
}

impl<T: Real> MetricCoefficients<T> {
    /// The positive-definiteness conditions on the coefficient level:
    /// `c1+2t·d1 > 0`, `c2+2t·d2 > 0` and
    /// `(c1+2t·d1)(c2+2t·d2) − (c3+2t·d3)² > 0`.
    pub fn assert_positive_definite(&self) -> Result<()> {
        let two_t = real::<T>(2.0) * self.t;
        let e1 = self.c1 + two_t * self.d1;
        let e2 = self.c2 + two_t * self.d2;
        let e3 = self.c3 + two_t * self.d3;
        let checks: [(&'static str, T); 3] = [
            ("c1 + 2t d1", e1),
            ("c2 + 2t d2", e2),
            ("(c1+2t d1)(c2+2t d2) - (c3+2t d3)^2", e1 * e2 - e3 * e3),
        ];
        for (what, value) in checks {
            if not_positive(value) {
                return Err(Error::PositivityViolation {
                    what,
                    value: approx_f64(value),
                });
            }
        }
        Ok(())
    }
}

/// Max absolute residual of the homogeneous linear system whose nontrivial
/// solutions are exactly the triples proportional to `(a1, a2, a3)`.
pub fn hermitian_system_residual<T: Real>(lc: &LiftCoefficients<T>, c1: T, c2: T, c3: T) -> T {
    let two = real::<T>(2.0);
    let (a1, a2, a3) = (lc.a1, lc.a2, lc.a3);
    let e1 = (a3 * a3 - T::one()) * c1 + a1 * a1 * c2 - two * a1 * a3 * c3;
    let e2 = a2 * a2 * c1 + (a3 * a3 - T::one()) * c2 - two * a2 * a3 * c3;
    let e3 = a2 * a3 * c1 + a1 * a3 * c2 - two * a1 * a2 * c3;
    e1.abs().max(e2.abs()).max(e3.abs())
}

/// The value of `μ` that closes the fundamental 2-form: `μ = λ'(t)`.
pub fn kahler_mu<T: Real>(lambda: &ScalarCurve<T>, t: T) -> Result<T> {
    let jet = lambda.eval_jet(t)?;
    if not_positive(jet.value) {
        return Err(Error::ProportionalityDomain {
            what: "lambda",
            value: approx_f64(jet.value),
        });
    }
    let shifted = jet.value + real::<T>(2.0) * t * jet.d1;
    if not_positive(shifted) {
        return Err(Error::ProportionalityDomain {
            what: "lambda + 2t lambda'",
            value: approx_f64(shifted),
        });
    }
    Ok(jet.d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_curves::ScalarCurve;
    use proptest::prelude::*;

    fn curve(coeffs: &[f64]) -> ScalarCurve<f64> {
        ScalarCurve::poly(coeffs.to_vec())
    }

    #[test]
    fn canonical_completion() {
        let lc = complete_acs(1.0, 0.0, 0.0, 0.0, 1.7).unwrap();
        assert_eq!((lc.a2, lc.b2, lc.a4, lc.b4), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn completion_direct_substitution() {
        let lc = complete_acs(2.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(lc.a2, 1.0);
        assert_eq!(lc.b2, 0.0);
        assert_eq!(lc.a4, -1.0);
    }

    #[test]
    fn completion_with_b1() {
        let lc = complete_acs(1.0f64, 0.0, 1.0, 0.0, 0.5).unwrap();
        assert_eq!(lc.a2, 1.0);
        assert!((lc.b2 - (-0.5)).abs() < 1e-15);
        let (r1, r2) = lc.structure_residuals();
        assert!(r1 <= 1e-15 && r2 <= 1e-15);
    }

    #[test]
    fn completion_rejects_bad_positivity() {
        assert!(matches!(
            complete_acs(-1.0, 0.0, 0.0, 0.0, 1.0),
            Err(Error::PositivityViolation { what: "a1", .. })
        ));
        assert!(matches!(
            complete_acs(1.0, 0.0, -2.0, 0.0, 1.0),
            Err(Error::PositivityViolation { .. })
        ));
    }

    #[test]
    fn integrable_flat_canonical_vanishes() {
        let ib = integrable_b(&curve(&[1.0]), &curve(&[0.0]), 0.0, 1.3).unwrap();
        assert_eq!((ib.b1, ib.b2, ib.b3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn integrable_diagonal_examples() {
        let a1 = curve(&[1.0, 1.0]);
        let a3 = curve(&[0.0]);
        let ib = integrable_b(&a1, &a3, 0.0, 0.0).unwrap();
        assert!((ib.b1 - 1.0).abs() < 1e-15);
        assert!((ib.b2 + 1.0).abs() < 1e-15);
        assert_eq!(ib.b3, 0.0);

        let ib = integrable_b(&a1, &a3, 0.0, 0.5).unwrap();
        assert!((ib.b1 - 3.0).abs() < 1e-14);
        assert!((ib.b2 + 1.0 / 2.25).abs() < 1e-14);
    }

    #[test]
    fn integrable_b_requires_positive_a1() {
        let a1 = curve(&[-1.0]);
        let a3 = curve(&[0.0]);
        assert!(matches!(
            integrable_b(&a1, &a3, 1.0, 0.5),
            Err(Error::PositivityViolation { what: "a1", .. })
        ));
    }

    #[test]
    fn singular_denominator_detected() {
        // D = 1 - t for a1 = 1+t, c = 0: singular at t = 1.
        let a1 = curve(&[1.0, 1.0]);
        let a3 = curve(&[0.0]);
        assert!(matches!(
            integrable_b(&a1, &a3, 0.0, 1.0),
            Err(Error::SingularDenominator { .. })
        ));
        let d = integrable_denominator(&a1, &a3, 0.0, 0.25).unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn consistency_flat_canonical() {
        let res = integrability_consistency(&curve(&[1.0]), &curve(&[0.0]), 0.0, 1.0).unwrap();
        assert!(res.d_a2_bracket.is_none()); // a3 + t b3 = 0
        assert_eq!(res.d_a1, 0.0);
        assert_eq!(res.d_a3, 0.0);
        assert_eq!(res.d_a2, 0.0);
        assert_eq!(res.product_rule, 0.0);
    }

    #[test]
    fn consistency_integrable_family() {
        let res =
            integrability_consistency(&curve(&[1.0, 1.0]), &curve(&[0.0, 1.0]), 1.0, 0.3).unwrap();
        assert!(res.max_applicable() <= 1e-10, "{res:?}");
        assert!(res.d_a2_bracket.is_some());
    }

    #[test]
    fn consistency_detects_perturbation() {
        let a1 = curve(&[1.0]);
        let a3 = curve(&[0.0]);
        let ib = integrable_b(&a1, &a3, 1.0, 0.2).unwrap();
        assert!((ib.b1 + 1.0).abs() < 1e-15);
        let res =
            integrability_consistency_with(&a1, &a3, 1.0, 0.2, ib.b1 + 0.05, ib.b2, ib.b3)
                .unwrap();
        assert!(res.max_applicable() > 1e-3, "{res:?}");
    }

    #[test]
    fn metric_coefficient_examples() {
        let lc = complete_acs(1.0, 0.0, 0.0, 0.0, 0.7).unwrap();
        let mc = metric_coefficients(&lc, 1.0, 0.0).unwrap();
        assert_eq!((mc.c1, mc.c2, mc.c3), (1.0, 1.0, 0.0));
        assert_eq!((mc.d1, mc.d2, mc.d3), (0.0, 0.0, 0.0));

        let lc = complete_acs(2.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let mc = metric_coefficients(&lc, 3.0, 0.5).unwrap();
        assert_eq!((mc.c1, mc.c2, mc.c3), (6.0, 3.0, 3.0));
        assert_eq!((mc.d1, mc.d2, mc.d3), (1.0, 0.5, 0.5));

        assert!(matches!(
            metric_coefficients(&lc, 1.0, -0.6),
            Err(Error::ProportionalityDomain { .. })
        ));
    }

    #[test]
    fn hermitian_system_examples() {
        let lc = complete_acs(1.0f64, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(
            hermitian_system_residual(&lc, 2.5 * lc.a1, 2.5 * lc.a2, 2.5 * lc.a3) <= 1e-12
        );
        let r = hermitian_system_residual(&lc, 1.1, 1.0, 0.0);
        assert!((r - 0.1).abs() < 1e-12);

        let lc = complete_acs(2.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(hermitian_system_residual(&lc, 2.0, 1.0, 1.0) <= 1e-12);
        assert!(hermitian_system_residual(&lc, 4.0, 2.0, 2.0) <= 1e-12);
    }

    #[test]
    fn kahler_mu_examples() {
        assert_eq!(kahler_mu(&curve(&[1.0]), 2.0).unwrap(), 0.0);
        assert_eq!(kahler_mu(&curve(&[1.0, 1.0]), 2.0).unwrap(), 1.0);
        let mu = kahler_mu(&ScalarCurve::exponential(1.0f64, 0.3), 1.0).unwrap();
        assert!((mu - 0.404_957_642_272_800_96).abs() < 1e-12);
        // lambda <= 0 is out of domain
        assert!(matches!(
            kahler_mu(&curve(&[-1.0]), 0.5),
            Err(Error::ProportionalityDomain { .. })
        ));
    }

    #[test]
    fn integrable_b2_matches_completion_route() {
        for &(c, t) in &[(1.0, 0.3), (-1.0, 0.4), (0.0, 0.8), (1.0, 0.1)] {
            let a1 = curve(&[1.0, 1.0]);
            let a3 = curve(&[0.0, 1.0]);
            let ib = integrable_b(&a1, &a3, c, t).unwrap();
            let lc = complete_acs(
                a1.eval_jet(t).unwrap().value,
                a3.eval_jet(t).unwrap().value,
                ib.b1,
                ib.b3,
                t,
            )
            .unwrap();
            let rel = (ib.b2 - lc.b2).abs() / (1.0 + lc.b2.abs());
            assert!(rel <= 1e-10, "b2 routes disagree: {} vs {}", ib.b2, lc.b2);
        }
    }

    proptest! {
        // Random valid draws satisfy both structure identities.
        #[test]
        fn completion_satisfies_structure_identities(
            a1 in 0.1f64..5.0,
            a3 in -3.0f64..3.0,
            b1 in -3.0f64..3.0,
            b3 in -3.0f64..3.0,
            t in 0.0f64..4.0,
        ) {
            prop_assume!(a1 + 2.0 * t * b1 > 1e-3);
            let lc = complete_acs(a1, a3, b1, b3, t).unwrap();
            let (r1, r2) = lc.structure_residuals();
            prop_assert!(r1 <= 1e-12 && r2 <= 1e-12, "residuals {r1:.3e} {r2:.3e}");
        }

        // The hermitian system is homogeneous: proportional triples solve it
        // for every positive scale.
        #[test]
        fn hermitian_residual_scale_invariant(
            a1 in 0.2f64..4.0,
            a3 in -2.0f64..2.0,
            lambda in 0.01f64..100.0,
        ) {
            let lc = complete_acs(a1, a3, 0.0, 0.0, 0.5).unwrap();
            let r = hermitian_system_residual(
                &lc, lambda * lc.a1, lambda * lc.a2, lambda * lc.a3,
            );
            prop_assert!(r <= 1e-12 * (1.0 + lambda * 10.0), "residual {r:.3e}");
        }

        // Integrable b2 always agrees with the completion route where the
        // denominator is healthy.
        #[test]
        fn integrable_b2_agreement(
            p0 in 0.5f64..2.0,
            p1 in -0.5f64..1.0,
            q1 in -1.0f64..1.0,
            c in -1.0f64..1.0,
            t in 0.0f64..1.0,
        ) {
            let a1 = curve(&[p0, p1]);
            let a3 = curve(&[0.0, q1]);
            let d = integrable_denominator(&a1, &a3, c, t).unwrap();
            prop_assume!(d.abs() > 1e-6);
            prop_assume!(a1.eval_jet(t).unwrap().value > 0.0);
            if let Ok(ib) = integrable_b(&a1, &a3, c, t) {
                // the completed structure may violate positivity for extreme
                // draws; only compare where it is a valid structure
                if let Ok(lc) = complete_acs(
                    a1.eval_jet(t).unwrap().value,
                    a3.eval_jet(t).unwrap().value,
                    ib.b1,
                    ib.b3,
                    t,
                ) {
                    let rel = (ib.b2 - lc.b2).abs() / (1.0 + lc.b2.abs());
                    prop_assert!(rel <= 1e-10, "b2 routes disagree by {rel:.3e}");
                }
            }
        }

        // Metric coefficients satisfy the coefficient-level positivity
        // conditions whenever the preconditions hold.
        #[test]
        fn metric_coefficients_positive(
            a1 in 0.2f64..4.0,
            a3 in -2.0f64..2.0,
            b1 in -0.5f64..1.0,
            b3 in -1.0f64..1.0,
            lambda in 0.1f64..3.0,
            mu in -0.05f64..1.0,
            t in 0.0f64..2.0,
        ) {
            prop_assume!(a1 + 2.0 * t * b1 > 1e-2);
            prop_assume!(lambda + 2.0 * t * mu > 1e-3);
            let lc = complete_acs(a1, a3, b1, b3, t).unwrap();
            let mc = metric_coefficients(&lc, lambda, mu).unwrap();
            prop_assert!(mc.assert_positive_definite().is_ok());
        }
    }

    #[test]
    fn diagonal_case_regression() {
        // At a3 ≡ 0 the integrable family reduces to
        // b1 = (a1 a1' − c)/(a1 − 2t a1'), b2 = (c − a1 a1')/(a1(a1² − 2ct)).
        let families: Vec<ScalarCurve<f64>> = vec![
            ScalarCurve::constant(2.0),
            curve(&[1.0, 1.0]),
            ScalarCurve::exponential(1.0, 0.3),
        ];
        let a3 = curve(&[0.0]);
        for &c in &[-1.0, 0.0, 1.0] {
            for a1 in &families {
                for i in 0..40 {
                    let t = 0.9 * (i as f64) / 39.0;
                    let jet = a1.eval_jet(t).unwrap();
                    let ib = integrable_b(a1, &a3, c, t).unwrap();
                    let rb1 = (jet.value * jet.d1 - c) / (jet.value - 2.0 * t * jet.d1);
                    let rb2 =
                        (c - jet.value * jet.d1) / (jet.value * (jet.value * jet.value - 2.0 * c * t));
                    assert!((ib.b1 - rb1).abs() / (1.0 + rb1.abs()) <= 1e-12);
                    assert!((ib.b2 - rb2).abs() / (1.0 + rb2.abs()) <= 1e-12);
                    assert_eq!(ib.b3, 0.0);
                }
            }
        }
    }
}
