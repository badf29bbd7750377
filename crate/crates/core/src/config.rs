//! Run configuration consumed by the verifier and serialized by the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{real, Real};
use crate::scalar_curves::ScalarCurve;
use crate::space_forms::SpaceForm;

/// Names of the suite checks, in report order.
pub const CHECK_NAMES: [&str; 6] = [
    "j_squared",
    "nijenhuis",
    "hermitian",
    "d_omega",
    "d_omega_cross",
    "nabla_j",
];

fn default_n() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::Deserialize<'de>"
))]
pub struct ManifoldConfig<T> {
    #[serde(default = "default_n")]
    pub n: usize,
    pub c: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_radius: Option<T>,
}

/// How the `(b1, b3)` coefficients are chosen: solved from the integrability
/// formulas, or supplied as explicit curves.
#[derive(Debug, Clone, PartialEq)]
pub enum BMode<T> {
    Integrable,
    Explicit {
        b1: ScalarCurve<T>,
        b3: ScalarCurve<T>,
    },
}

impl<T: Serialize> Serialize for BMode<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BMode::Integrable => s.serialize_str("integrable"),
            BMode::Explicit { b1, b3 } => {
                #[derive(Serialize)]
                struct Explicit<'a, T> {
                    b1: &'a ScalarCurve<T>,
                    b3: &'a ScalarCurve<T>,
                }
                Explicit { b1, b3 }.serialize(s)
            }
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for BMode<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Tag(String),
            Explicit {
                b1: ScalarCurve<T>,
                b3: ScalarCurve<T>,
            },
        }
        match Raw::deserialize(d)? {
            Raw::Tag(tag) if tag == "integrable" => Ok(BMode::Integrable),
            Raw::Tag(tag) => Err(serde::de::Error::custom(format!(
                "unknown b_mode \"{tag}\" (expected \"integrable\" or explicit curves)"
            ))),
            Raw::Explicit { b1, b3 } => Ok(BMode::Explicit { b1, b3 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsConfig<T> {
    pub a1: ScalarCurve<T>,
    pub a3: ScalarCurve<T>,
    pub b_mode: BMode<T>,
}

/// Either the closing choice `μ = λ'` or an explicit curve.
#[derive(Debug, Clone, PartialEq)]
pub enum MuPolicy<T> {
    Kahler,
    Curve(ScalarCurve<T>),
}

impl<T: Serialize> Serialize for MuPolicy<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MuPolicy::Kahler => s.serialize_str("kahler"),
            MuPolicy::Curve(c) => c.serialize(s),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for MuPolicy<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Tag(String),
            Curve(ScalarCurve<T>),
        }
        match Raw::deserialize(d)? {
            Raw::Tag(tag) if tag == "kahler" => Ok(MuPolicy::Kahler),
            Raw::Tag(tag) => Err(serde::de::Error::custom(format!(
                "unknown mu policy \"{tag}\" (expected \"kahler\" or a curve)"
            ))),
            Raw::Curve(c) => Ok(MuPolicy::Curve(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig<T> {
    pub lambda: ScalarCurve<T>,
    pub mu: MuPolicy<T>,
}

fn default_seed() -> u64 {
    42
}
fn default_count() -> usize {
    50
}
fn default_q_radius() -> f64 {
    0.4
}
fn default_p_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_q_radius")]
    pub q_radius: f64,
    #[serde(default = "default_p_radius")]
    pub p_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_margin: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: default_seed(),
            count: default_count(),
            q_radius: default_q_radius(),
            p_radius: default_p_radius(),
            boundary_margin: None,
        }
    }
}

fn tol_j_squared() -> f64 {
    1e-12
}
fn tol_nijenhuis() -> f64 {
    1e-5
}
fn tol_hermitian() -> f64 {
    1e-12
}
fn tol_d_omega() -> f64 {
    1e-6
}
fn tol_d_omega_cross() -> f64 {
    1e-6
}
fn tol_nabla_j() -> f64 {
    1e-4
}

/// Per-check tolerances: algebraic checks at 1e-12, one-layer
/// finite-difference checks at 1e-5/1e-6, the doubly differentiated ∇J at
/// 1e-4. The falsification floor is ten times the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "tol_j_squared")]
    pub j_squared: f64,
    #[serde(default = "tol_nijenhuis")]
    pub nijenhuis: f64,
    #[serde(default = "tol_hermitian")]
    pub hermitian: f64,
    #[serde(default = "tol_d_omega")]
    pub d_omega: f64,
    #[serde(default = "tol_d_omega_cross")]
    pub d_omega_cross: f64,
    #[serde(default = "tol_nabla_j")]
    pub nabla_j: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            j_squared: tol_j_squared(),
            nijenhuis: tol_nijenhuis(),
            hermitian: tol_hermitian(),
            d_omega: tol_d_omega(),
            d_omega_cross: tol_d_omega_cross(),
            nabla_j: tol_nabla_j(),
        }
    }
}

impl Tolerances {
    pub fn for_check(&self, name: &str) -> Option<f64> {
        match name {
            "j_squared" => Some(self.j_squared),
            "nijenhuis" => Some(self.nijenhuis),
            "hermitian" => Some(self.hermitian),
            "d_omega" => Some(self.d_omega),
            "d_omega_cross" => Some(self.d_omega_cross),
            "nabla_j" => Some(self.nabla_j),
            _ => None,
        }
    }
}

/// Full configuration of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<T> {
    pub manifold: ManifoldConfig<T>,
    pub coefficients: CoefficientsConfig<T>,
    pub metric: MetricConfig<T>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Optional subset of [`CHECK_NAMES`]; all checks run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
}

impl<T: Real> RunConfig<T> {
    /// Builds the base manifold and validates every cross-field invariant.
    pub fn space_form(&self) -> Result<SpaceForm<T>> {
        match self.manifold.chart_radius {
            Some(r) => SpaceForm::with_chart_radius(self.manifold.n, self.manifold.c, r),
            None => SpaceForm::new(self.manifold.n, self.manifold.c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sf = self.space_form()?;
        self.coefficients.a1.validate()?;
        self.coefficients.a3.validate()?;
        if let BMode::Explicit { b1, b3 } = &self.coefficients.b_mode {
            b1.validate()?;
            b3.validate()?;
        }
        self.metric.lambda.validate()?;
        if let MuPolicy::Curve(c) = &self.metric.mu {
            c.validate()?;
        }
        if self.sampling.count == 0 {
            return Err(Error::InvalidConfig("sampling count must be >= 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.sampling.q_radius) && positive(self.sampling.p_radius)) {
            return Err(Error::InvalidConfig("sampling radii must be positive".into()));
        }
        let margin = self.boundary_margin();
        if !positive(margin) {
            return Err(Error::InvalidConfig("boundary margin must be positive".into()));
        }
        let radius = crate::num::approx_f64(sf.chart_radius());
        if self.sampling.q_radius + margin >= radius {
            return Err(Error::InvalidConfig(format!(
                "q_radius {} + boundary margin {} must stay below the chart radius {}",
                self.sampling.q_radius, margin, radius
            )));
        }
        if let Some(names) = &self.checks {
            for name in names {
                if !CHECK_NAMES.contains(&name.as_str()) {
                    return Err(Error::InvalidConfig(format!(
                        "unknown check \"{name}\" (expected one of {CHECK_NAMES:?})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Boundary margin, defaulting to 1% of the chart radius.
    pub fn boundary_margin(&self) -> f64 {
        self.sampling.boundary_margin.unwrap_or_else(|| {
            let radius = self
                .space_form()
                .map(|sf| crate::num::approx_f64(sf.chart_radius()))
                .unwrap_or(1.0);
            0.01 * radius
        })
    }

    pub fn check_enabled(&self, name: &str) -> bool {
        match &self.checks {
            None => true,
            Some(list) => list.iter().any(|c| c == name),
        }
    }

    pub fn q_radius(&self) -> T {
        real(self.sampling.q_radius)
    }

    pub fn p_radius(&self) -> T {
        real(self.sampling.p_radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "manifold": {"n": 3, "c": 1.0},
        "coefficients": {
            "a1": {"family": "poly", "coeffs": [1.0, 1.0]},
            "a3": {"family": "poly", "coeffs": [0.0, 1.0]},
            "b_mode": "integrable"
        },
        "metric": {
            "lambda": {"family": "poly", "coeffs": [1.0, 1.0]},
            "mu": "kahler"
        }
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig<f64> = serde_json::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sampling.seed, 42);
        assert_eq!(cfg.sampling.count, 50);
        assert_eq!(cfg.sampling.q_radius, 0.4);
        assert_eq!(cfg.sampling.p_radius, 1.0);
        assert_eq!(cfg.coefficients.b_mode, BMode::Integrable);
        assert_eq!(cfg.metric.mu, MuPolicy::Kahler);
    }

    #[test]
    fn explicit_b_mode_and_mu_curve_parse() {
        let json = r#"{
            "manifold": {"n": 3, "c": 0.0},
            "coefficients": {
                "a1": {"family": "const", "value": 1.0},
                "a3": {"family": "const", "value": 0.0},
                "b_mode": {"b1": {"family": "const", "value": 0.0},
                           "b3": {"family": "const", "value": 0.0}}
            },
            "metric": {
                "lambda": {"family": "const", "value": 1.0},
                "mu": {"family": "const", "value": 0.0}
            }
        }"#;
        let cfg: RunConfig<f64> = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert!(matches!(cfg.coefficients.b_mode, BMode::Explicit { .. }));
        assert!(matches!(cfg.metric.mu, MuPolicy::Curve(_)));
    }

    #[test]
    fn n_below_three_is_rejected() {
        let json = MINIMAL.replace(r#""n": 3"#, r#""n": 2"#);
        let cfg: RunConfig<f64> = serde_json::from_str(&json).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn unknown_check_is_rejected() {
        let mut cfg: RunConfig<f64> = serde_json::from_str(MINIMAL).unwrap();
        cfg.checks = Some(vec!["banana".into()]);
        assert!(cfg.validate().is_err());
        cfg.checks = Some(vec!["nijenhuis".into()]);
        assert!(cfg.validate().is_ok());
        assert!(cfg.check_enabled("nijenhuis"));
        assert!(!cfg.check_enabled("hermitian"));
    }

    #[test]
    fn chart_radius_and_margin_overrides() {
        let mut cfg: RunConfig<f64> = serde_json::from_str(MINIMAL).unwrap();
        cfg.manifold.chart_radius = Some(2.0);
        assert_eq!(cfg.space_form().unwrap().chart_radius(), 2.0);
        cfg.sampling.boundary_margin = Some(0.25);
        assert_eq!(cfg.boundary_margin(), 0.25);
        cfg.validate().unwrap();
        // margin pushing past the chart radius is rejected
        cfg.sampling.boundary_margin = Some(1.7);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn omitted_n_defaults_to_three() {
        let json = MINIMAL.replace(r#""n": 3, "#, "");
        let cfg: RunConfig<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg.manifold.n, 3);
    }

    #[test]
    fn config_echo_round_trips() {
        let cfg: RunConfig<f64> = serde_json::from_str(MINIMAL).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let reparsed: RunConfig<f64> = serde_json::from_str(&echoed).unwrap();
        assert_eq!(cfg, reparsed);
    }
}
