//! Suite orchestration: sampling, the Kähler check chain, verdicts and
//! falsification runs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle_calculus::{
    acs_matrix, acs_square_residual, adapted_frame, covariant_derivative_j, d_omega_closed_form,
    d_omega_numeric, hermitian_residual, max_abs3, metric_matrix, nijenhuis, omega_matrix,
    to_coordinate_frame, ChartPoint, FdOptions,
};
use crate::config::{BMode, MuPolicy, RunConfig, CHECK_NAMES};
use crate::error::{Error, Result};
use crate::lift_algebra::{
    complete_acs, integrable_b, metric_coefficients, LiftCoefficients, MetricCoefficients,
};
use crate::num::{approx_f64, real, Real};
use crate::scalar_curves::{CurveJet, ScalarCurve};
use crate::space_forms::SpaceForm;

/// Deterministic sampling recipe for chart points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingPolicy<T> {
    pub seed: u64,
    pub count: usize,
    pub q_radius: T,
    pub p_radius: T,
    pub boundary_margin: T,
}

impl<T: Real> SamplingPolicy<T> {
    pub fn new(seed: u64, count: usize, q_radius: T, p_radius: T, boundary_margin: T) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("sampling count must be >= 1".into()));
        }
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !(positive(q_radius) && positive(p_radius) && positive(boundary_margin)) {
            return Err(Error::InvalidConfig(
                "sampling radii and boundary margin must be positive".into(),
            ));
        }
        Ok(SamplingPolicy {
            seed,
            count,
            q_radius,
            p_radius,
            boundary_margin,
        })
    }
}

/// Accepted points together with the rejection count.
#[derive(Debug, Clone)]
pub struct Samples<T> {
    pub points: Vec<ChartPoint<T>>,
    pub rejected: usize,
}

fn ball_vector<T: Real>(rng: &mut ChaCha8Rng, n: usize, radius: T) -> DVector<T> {
    // Direction from a normalized Gaussian, length from the n-th root of a
    // uniform draw: uniform in the ball with no rejection step.
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let u: f64 = rng.random::<f64>();
        let scale = u.powf(1.0 / n as f64) / norm;
        return DVector::from_iterator(n, g.iter().map(|v| radius * real::<T>(v * scale)));
    }
}

/// Draws `policy.count` points uniformly from the `q`- and `p`-balls,
/// rejecting (and counting) points the `validity` predicate refuses.
/// Errors with `ExhaustedSampling` once the rejection rate exceeds 90%.
pub fn sample_points<T, F>(
    sf: &SpaceForm<T>,
    policy: &SamplingPolicy<T>,
    validity: F,
) -> Result<Samples<T>>
where
    T: Real,
    F: Fn(&ChartPoint<T>) -> bool,
{
    if policy.q_radius + policy.boundary_margin >= sf.chart_radius() {
        return Err(Error::InvalidConfig(format!(
            "q_radius {} + boundary margin {} must stay below the chart radius {}",
            approx_f64(policy.q_radius),
            approx_f64(policy.boundary_margin),
            approx_f64(sf.chart_radius())
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let max_attempts = policy.count.saturating_mul(10);
    let mut points = Vec::with_capacity(policy.count);
    let mut rejected = 0usize;
    let mut attempts = 0usize;
    while points.len() < policy.count {
        if attempts >= max_attempts {
            return Err(Error::ExhaustedSampling {
                accepted: points.len(),
                attempts,
            });
        }
        attempts += 1;
        let q = ball_vector(&mut rng, sf.n(), policy.q_radius);
        let p = ball_vector(&mut rng, sf.n(), policy.p_radius);
        let pt = ChartPoint { q, p };
        if validity(&pt) {
            points.push(pt);
        } else {
            rejected += 1;
        }
    }
    Ok(Samples { points, rejected })
}

/// Outcome of one named check aggregated over the sample.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: nalgebra::Scalar + Serialize"))]
pub struct CheckResult<T> {
    pub name: String,
    pub max_residual: T,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Option<ChartPoint<T>>,
    #[serde(rename = "skipped")]
    pub skipped_points: usize,
    /// More than half of the points were skipped; the verdict machinery
    /// refuses to conclude anything from this check.
    pub inconclusive: bool,
}

impl<T: Real> CheckResult<T> {
    /// A check supports a positive verdict only when it passed conclusively.
    pub fn conclusive_pass(&self) -> bool {
        self.passed && !self.inconclusive
    }
}

/// Verdict for each level of the structure chain. `None` means the inputs the
/// verdict needs were not part of the selected checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdicts {
    pub almost_complex: Option<bool>,
    pub integrable: Option<bool>,
    pub hermitian: Option<bool>,
    pub almost_kahler: Option<bool>,
    pub kahler: Option<bool>,
}

/// Full report: the configuration echo, one result per selected check, and
/// the composed verdicts.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: nalgebra::Scalar + Serialize"))]
pub struct VerificationReport<T> {
    pub config: RunConfig<T>,
    pub checks: Vec<CheckResult<T>>,
    pub verdicts: Verdicts,
}

impl<T: Real> VerificationReport<T> {
    pub fn check(&self, name: &str) -> Option<&CheckResult<T>> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.conclusive_pass())
    }
}

/// Falsification targets: a knob to push off the structure equations, plus
/// the delta to push it by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation<T> {
    /// Add a delta to `b1`; `b2` is recompleted so the structure stays almost
    /// complex but stops being integrable.
    B1(T),
    /// Same for `b3`.
    B3(T),
    /// Scale `c1`, breaking the proportionality behind the Hermitian
    /// condition.
    C1Scale(T),
    /// Offset `μ` away from the policy value, opening the 2-form.
    MuOffset(T),
}

impl<T: Real> Perturbation<T> {
    /// The check this perturbation is expected to break.
    pub fn target_check(&self) -> &'static str {
        match self {
            Perturbation::B1(_) | Perturbation::B3(_) => "nijenhuis",
            Perturbation::C1Scale(_) => "hermitian",
            Perturbation::MuOffset(_) => "d_omega",
        }
    }

    /// Checks that are logically independent of the perturbed quantity and
    /// must keep passing.
    pub fn independent_checks(&self) -> &'static [&'static str] {
        match self {
            Perturbation::B1(_) | Perturbation::B3(_) => {
                &["j_squared", "hermitian", "d_omega", "d_omega_cross"]
            }
            Perturbation::C1Scale(_) => &["j_squared", "nijenhuis", "d_omega"],
            Perturbation::MuOffset(_) => &["j_squared", "nijenhuis", "hermitian", "d_omega_cross"],
        }
    }
}

/// Pointwise structure provider: curves, curvature constant and any active
/// perturbation, resolved into coefficient records and frame tensors.
struct Structure<'a, T: Real> {
    sf: SpaceForm<T>,
    config: &'a RunConfig<T>,
    b1_offset: T,
    b3_offset: T,
    c1_scale: T,
    mu_offset: T,
    fd: FdOptions<T>,
}

impl<'a, T: Real> Structure<'a, T> {
    fn new(config: &'a RunConfig<T>, perturbation: Option<&Perturbation<T>>) -> Result<Self> {
        config.validate()?;
        let mut s = Structure {
            sf: config.space_form()?,
            config,
            b1_offset: T::zero(),
            b3_offset: T::zero(),
            c1_scale: T::one(),
            mu_offset: T::zero(),
            fd: FdOptions::default(),
        };
        match perturbation {
            None => {}
            Some(Perturbation::B1(d)) => s.b1_offset = *d,
            Some(Perturbation::B3(d)) => s.b3_offset = *d,
            Some(Perturbation::C1Scale(f)) => s.c1_scale = *f,
            Some(Perturbation::MuOffset(d)) => s.mu_offset = *d,
        }
        Ok(s)
    }

    fn a1(&self) -> &ScalarCurve<T> {
        &self.config.coefficients.a1
    }

    fn a3(&self) -> &ScalarCurve<T> {
        &self.config.coefficients.a3
    }

    fn curvature_constant(&self) -> T {
        self.config.manifold.c
    }

    fn lift_at(&self, t: T) -> Result<LiftCoefficients<T>> {
        let (b1, b3) = match &self.config.coefficients.b_mode {
            BMode::Integrable => {
                let ib = integrable_b(self.a1(), self.a3(), self.curvature_constant(), t)?;
                (ib.b1, ib.b3)
            }
            BMode::Explicit { b1, b3 } => (b1.eval_jet(t)?.value, b3.eval_jet(t)?.value),
        };
        complete_acs(
            self.a1().eval_jet(t)?.value,
            self.a3().eval_jet(t)?.value,
            b1 + self.b1_offset,
            b3 + self.b3_offset,
            t,
        )
    }

    fn lambda_mu_at(&self, t: T) -> Result<(CurveJet<T>, T)> {
        let jet = self.config.metric.lambda.eval_jet(t)?;
        let mu = match &self.config.metric.mu {
            MuPolicy::Kahler => jet.d1,
            MuPolicy::Curve(c) => c.eval_jet(t)?.value,
        } + self.mu_offset;
        if crate::lift_algebra::not_positive(jet.value) {
            return Err(Error::ProportionalityDomain {
                what: "lambda",
                value: approx_f64(jet.value),
            });
        }
        let shifted = jet.value + real::<T>(2.0) * t * mu;
        if crate::lift_algebra::not_positive(shifted) {
            return Err(Error::ProportionalityDomain {
                what: "lambda + 2t mu",
                value: approx_f64(shifted),
            });
        }
        Ok((jet, mu))
    }

    fn metric_at(&self, t: T) -> Result<MetricCoefficients<T>> {
        let lc = self.lift_at(t)?;
        let (jet, mu) = self.lambda_mu_at(t)?;
        let mut mc = metric_coefficients(&lc, jet.value, mu)?;
        mc.c1 *= self.c1_scale;
        Ok(mc)
    }

    fn point_valid(&self, pt: &ChartPoint<T>) -> bool {
        // The integrable family must also keep a healthy denominator margin
        // above the evaluator's own gate, so that stencil shifts stay valid.
        let Ok(t) = self.sf.energy_density(&pt.q, &pt.p) else {
            return false;
        };
        if let BMode::Integrable = self.config.coefficients.b_mode {
            match integrable_b(self.a1(), self.a3(), self.curvature_constant(), t) {
                Ok(ib) => {
                    if ib.denominator.abs() <= real::<T>(1e-6) {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
        self.metric_at(t).is_ok()
    }

    fn j_coord(&self, pt: &ChartPoint<T>) -> Result<DMatrix<T>> {
        let t = self.sf.energy_density(&pt.q, &pt.p)?;
        let j = acs_matrix(&self.sf, pt, &self.lift_at(t)?)?;
        let a = adapted_frame(&self.sf, pt)?;
        Ok(to_coordinate_frame(&j, &a)?.components)
    }

    fn g_coord(&self, pt: &ChartPoint<T>) -> Result<DMatrix<T>> {
        let t = self.sf.energy_density(&pt.q, &pt.p)?;
        let g = metric_matrix(&self.sf, pt, &self.metric_at(t)?)?;
        let a = adapted_frame(&self.sf, pt)?;
        Ok(to_coordinate_frame(&g, &a)?.components)
    }

    fn omega_coord(&self, pt: &ChartPoint<T>) -> Result<DMatrix<T>> {
        let t = self.sf.energy_density(&pt.q, &pt.p)?;
        let (jet, mu) = self.lambda_mu_at(t)?;
        let om = omega_matrix(&self.sf, pt, jet.value, mu)?;
        let a = adapted_frame(&self.sf, pt)?;
        Ok(to_coordinate_frame(&om, &a)?.components)
    }
}

/// Residuals of every selected check at one point; `None` marks a skip
/// (singular denominator, stencil leaving the chart, positivity breakdown).
#[derive(Debug, Clone)]
struct PointChecks<T> {
    j_squared: Option<T>,
    nijenhuis: Option<T>,
    hermitian: Option<T>,
    d_omega: Option<T>,
    d_omega_cross: Option<T>,
    nabla_j: Option<T>,
}

impl<T> Default for PointChecks<T> {
    fn default() -> Self {
        PointChecks {
            j_squared: None,
            nijenhuis: None,
            hermitian: None,
            d_omega: None,
            d_omega_cross: None,
            nabla_j: None,
        }
    }
}

impl<T: Real> PointChecks<T> {
    fn get(&self, name: &str) -> Option<T> {
        match name {
            "j_squared" => self.j_squared,
            "nijenhuis" => self.nijenhuis,
            "hermitian" => self.hermitian,
            "d_omega" => self.d_omega,
            "d_omega_cross" => self.d_omega_cross,
            "nabla_j" => self.nabla_j,
            _ => None,
        }
    }
}

fn point_checks<T: Real>(structure: &Structure<'_, T>, pt: &ChartPoint<T>) -> PointChecks<T> {
    let mut out = PointChecks::default();
    let enabled = |name: &str| structure.config.check_enabled(name);
    let Ok(t) = structure.sf.energy_density(&pt.q, &pt.p) else {
        return out;
    };

    let j_adapted = || -> Result<crate::bundle_calculus::FrameTensor<T>> {
        acs_matrix(&structure.sf, pt, &structure.lift_at(t)?)
    };
    if enabled("j_squared") {
        out.j_squared = j_adapted().ok().map(|j| acs_square_residual(&j));
    }
    if enabled("hermitian") {
        out.hermitian = (|| -> Result<T> {
            let g = metric_matrix(&structure.sf, pt, &structure.metric_at(t)?)?;
            hermitian_residual(&j_adapted()?, &g)
        })()
        .ok();
    }

    if enabled("nijenhuis") {
        out.nijenhuis = nijenhuis(&structure.sf, &|p| structure.j_coord(p), pt, &structure.fd)
            .ok()
            .map(|n| max_abs3(&n));
    }

    if enabled("d_omega") || enabled("d_omega_cross") {
        if let Ok(numeric) =
            d_omega_numeric(&structure.sf, &|p| structure.omega_coord(p), pt, &structure.fd)
        {
            if enabled("d_omega") {
                out.d_omega = Some(max_abs3(&numeric));
            }
            if enabled("d_omega_cross") {
                out.d_omega_cross = structure
                    .lambda_mu_at(t)
                    .and_then(|(jet, mu)| d_omega_closed_form(&structure.sf, pt, &jet, mu))
                    .ok()
                    .map(|closed| {
                        numeric
                            .iter()
                            .zip(closed.iter())
                            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
                    });
            }
        }
    }

    if enabled("nabla_j") {
        out.nabla_j = covariant_derivative_j(
            &structure.sf,
            &|p| structure.j_coord(p),
            &|p| structure.g_coord(p),
            pt,
            &structure.fd,
        )
        .ok();
    }

    out
}

fn aggregate_check<T: Real>(
    name: &str,
    tolerance: f64,
    points: &[ChartPoint<T>],
    results: &[PointChecks<T>],
) -> CheckResult<T> {
    let mut max_residual = T::zero();
    let mut worst: Option<usize> = None;
    let mut skipped = 0usize;
    for (idx, res) in results.iter().enumerate() {
        match res.get(name) {
            Some(r) => {
                if worst.is_none() || r > max_residual {
                    max_residual = r;
                    worst = Some(idx);
                }
            }
            None => skipped += 1,
        }
    }
    if worst.is_none() {
        // every point was skipped: no residual exists, and NaN <= tol is false
        max_residual = real(f64::NAN);
    }
    CheckResult {
        name: name.to_string(),
        max_residual,
        tolerance,
        passed: approx_f64(max_residual) <= tolerance,
        worst_point: worst.map(|idx| points[idx].clone()),
        skipped_points: skipped,
        inconclusive: skipped * 2 > results.len(),
    }
}

fn compose_verdicts<T: Real>(report_checks: &[CheckResult<T>]) -> Verdicts {
    let status = |name: &str| -> Option<bool> {
        report_checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.conclusive_pass())
    };
    let jsq = status("j_squared");
    let nij = status("nijenhuis");
    let herm = status("hermitian");
    let dom = status("d_omega");
    let and = |a: Option<bool>, b: Option<bool>| match (a, b) {
        (Some(x), Some(y)) => Some(x && y),
        _ => None,
    };
    let integrable = and(jsq, nij);
    let almost_kahler = and(herm, dom);
    Verdicts {
        almost_complex: jsq,
        integrable,
        hermitian: herm,
        almost_kahler,
        kahler: and(integrable, almost_kahler),
    }
}

fn policy_for_config<T: Real>(config: &RunConfig<T>) -> Result<SamplingPolicy<T>> {
    SamplingPolicy::new(
        config.sampling.seed,
        config.sampling.count,
        config.q_radius(),
        config.p_radius(),
        real(config.boundary_margin()),
    )
}

/// Draws the exact sample `run_suite` would use, exposing the rejection
/// count (sweeps report it per row).
pub fn sample_for_config<T: Real>(config: &RunConfig<T>) -> Result<Samples<T>> {
    let structure = Structure::new(config, None)?;
    let policy = policy_for_config(config)?;
    sample_points(&structure.sf, &policy, |pt| structure.point_valid(pt))
}

fn run_with_structure<T: Real>(structure: &Structure<'_, T>) -> Result<VerificationReport<T>> {
    let config = structure.config;
    let policy = policy_for_config(config)?;
    let samples = sample_points(&structure.sf, &policy, |pt| structure.point_valid(pt))?;

    let results: Vec<PointChecks<T>> = samples
        .points
        .par_iter()
        .map(|pt| point_checks(structure, pt))
        .collect();

    let checks: Vec<CheckResult<T>> = CHECK_NAMES
        .iter()
        .filter(|name| config.check_enabled(name))
        .map(|name| {
            let tol = config.tolerances.for_check(name).unwrap_or(0.0);
            aggregate_check(name, tol, &samples.points, &results)
        })
        .collect();

    let verdicts = compose_verdicts(&checks);
    Ok(VerificationReport {
        config: config.clone(),
        checks,
        verdicts,
    })
}

/// Runs the full check chain over a fresh sample and composes the verdicts.
pub fn run_suite<T: Real>(config: &RunConfig<T>) -> Result<VerificationReport<T>> {
    let structure = Structure::new(config, None)?;
    run_with_structure(&structure)
}

fn with_thread_cap<T: Send>(
    threads: Option<usize>,
    run: impl Fn() -> Result<T> + Send + Sync,
) -> Result<T> {
    match threads {
        None => run(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(run)
        }
    }
}

/// Same as [`run_suite`] with the worker count capped (used by the CLI to
/// honor `KLIFT_THREADS`).
pub fn run_suite_with_threads<T: Real>(
    config: &RunConfig<T>,
    threads: Option<usize>,
) -> Result<VerificationReport<T>> {
    with_thread_cap(threads, || run_suite(config))
}

/// Multiplier on the tolerance above which a targeted falsification residual
/// counts as a genuine failure.
pub const FALSIFICATION_FLOOR_FACTOR: f64 = 10.0;

/// [`falsify`] with the worker count capped.
pub fn falsify_with_threads<T: Real>(
    config: &RunConfig<T>,
    perturbation: &Perturbation<T>,
    threads: Option<usize>,
) -> Result<VerificationReport<T>> {
    with_thread_cap(threads, || falsify(config, perturbation))
}

/// Runs the suite against a deliberately broken configuration and demands
/// that the targeted check fails hard.
pub fn falsify<T: Real>(
    config: &RunConfig<T>,
    perturbation: &Perturbation<T>,
) -> Result<VerificationReport<T>> {
    let structure = Structure::new(config, Some(perturbation))?;
    let report = run_with_structure(&structure)?;
    let target = perturbation.target_check();
    let Some(result) = report.check(target) else {
        return Err(Error::InvalidConfig(format!(
            "falsification target \"{target}\" is not among the selected checks"
        )));
    };
    let floor = result.tolerance * FALSIFICATION_FLOOR_FACTOR;
    if approx_f64(result.max_residual) < floor {
        return Err(Error::PerturbationTooSmall {
            check: target.to_string(),
            residual: approx_f64(result.max_residual),
            floor,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_canonical() -> RunConfig<f64> {
        serde_json::from_str(
            r#"{
            "manifold": {"n": 3, "c": 0.0},
            "coefficients": {
                "a1": {"family": "const", "value": 1.0},
                "a3": {"family": "const", "value": 0.0},
                "b_mode": {"b1": {"family": "const", "value": 0.0},
                           "b3": {"family": "const", "value": 0.0}}
            },
            "metric": {"lambda": {"family": "const", "value": 1.0}, "mu": "kahler"},
            "sampling": {"seed": 42, "count": 20, "q_radius": 0.4, "p_radius": 1.0}
        }"#,
        )
        .unwrap()
    }

    fn integrable_config(mu_kahler: bool) -> RunConfig<f64> {
        let mu = if mu_kahler {
            r#""kahler""#.to_string()
        } else {
            r#"{"family": "const", "value": 0.0}"#.to_string()
        };
        serde_json::from_str(&format!(
            r#"{{
            "manifold": {{"n": 3, "c": 1.0}},
            "coefficients": {{
                "a1": {{"family": "poly", "coeffs": [1.0, 1.0]}},
                "a3": {{"family": "poly", "coeffs": [0.0, 1.0]}},
                "b_mode": "integrable"
            }},
            "metric": {{"lambda": {{"family": "poly", "coeffs": [1.0, 1.0]}}, "mu": {mu}}},
            "sampling": {{"seed": 42, "count": 30, "q_radius": 0.4, "p_radius": 0.7}}
        }}"#,
        ))
        .unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let sf = SpaceForm::new(3, 0.0).unwrap();
        let policy = SamplingPolicy::new(7, 25, 0.5, 1.0, 0.01).unwrap();
        let a = sample_points(&sf, &policy, |_| true).unwrap();
        let b = sample_points(&sf, &policy, |_| true).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.rejected, 0);
    }

    #[test]
    fn count_zero_rejected_at_construction() {
        assert!(matches!(
            SamplingPolicy::<f64>::new(7, 0, 0.5, 1.0, 0.01),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn flat_integrable_family_samples_without_rejections() {
        // D = 1 − t stays positive for t <= p_radius²/2 < 1
        let cfg: RunConfig<f64> = serde_json::from_str(
            r#"{
            "manifold": {"n": 3, "c": 0.0},
            "coefficients": {
                "a1": {"family": "poly", "coeffs": [1.0, 1.0]},
                "a3": {"family": "const", "value": 0.0},
                "b_mode": "integrable"
            },
            "metric": {"lambda": {"family": "const", "value": 1.0}, "mu": "kahler"},
            "sampling": {"seed": 42, "count": 50, "q_radius": 0.5, "p_radius": 1.0}
        }"#,
        )
        .unwrap();
        let structure = Structure::new(&cfg, None).unwrap();
        let policy = SamplingPolicy::new(42, 50, 0.5, 1.0, 0.01).unwrap();
        let samples = sample_points(&structure.sf, &policy, |pt| structure.point_valid(pt)).unwrap();
        assert_eq!(samples.rejected, 0);
        assert_eq!(samples.points.len(), 50);
    }

    #[test]
    fn exhausted_sampling_reported() {
        let sf = SpaceForm::new(3, 0.0).unwrap();
        let policy = SamplingPolicy::new(7, 10, 0.5, 1.0, 0.01).unwrap();
        assert!(matches!(
            sample_points(&sf, &policy, |_| false),
            Err(Error::ExhaustedSampling { .. })
        ));
    }

    #[test]
    fn flat_canonical_suite_is_kahler() {
        let report = run_suite(&flat_canonical()).unwrap();
        assert!(report.all_passed(), "{:#?}", report.checks);
        assert_eq!(report.verdicts.kahler, Some(true));
        assert_eq!(report.verdicts.almost_complex, Some(true));
        assert_eq!(report.verdicts.integrable, Some(true));
        assert_eq!(report.verdicts.hermitian, Some(true));
        assert_eq!(report.verdicts.almost_kahler, Some(true));
    }

    #[test]
    fn integrable_kahler_config_passes() {
        let report = run_suite(&integrable_config(true)).unwrap();
        assert!(report.all_passed(), "{:#?}", report.checks);
        assert_eq!(report.verdicts.kahler, Some(true));
    }

    #[test]
    fn wrong_mu_fails_only_the_form_closure() {
        let report = run_suite(&integrable_config(false)).unwrap();
        assert_eq!(report.verdicts.almost_complex, Some(true));
        assert_eq!(report.verdicts.integrable, Some(true));
        assert_eq!(report.verdicts.hermitian, Some(true));
        assert_eq!(report.verdicts.almost_kahler, Some(false));
        assert_eq!(report.verdicts.kahler, Some(false));
        assert!(!report.check("d_omega").unwrap().passed);
        // the closed-form factor tracks the numeric derivative regardless
        assert!(report.check("d_omega_cross").unwrap().passed);
    }

    #[test]
    fn verdict_composition_invariant() {
        for report in [
            run_suite(&flat_canonical()).unwrap(),
            run_suite(&integrable_config(true)).unwrap(),
            run_suite(&integrable_config(false)).unwrap(),
        ] {
            let v = report.verdicts;
            assert_eq!(
                v.kahler,
                match (v.integrable, v.almost_kahler) {
                    (Some(a), Some(b)) => Some(a && b),
                    _ => None,
                }
            );
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = run_suite(&integrable_config(true)).unwrap();
        let b = run_suite(&integrable_config(true)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn thread_cap_does_not_change_the_report() {
        let base = run_suite(&integrable_config(true)).unwrap();
        let capped = run_suite_with_threads(&integrable_config(true), Some(1)).unwrap();
        assert_eq!(
            serde_json::to_string(&base).unwrap(),
            serde_json::to_string(&capped).unwrap()
        );
    }

    #[test]
    fn check_subset_limits_report_and_verdicts() {
        let mut cfg = integrable_config(true);
        cfg.checks = Some(vec!["j_squared".into(), "nijenhuis".into()]);
        let report = run_suite(&cfg).unwrap();
        assert_eq!(report.checks.len(), 2);
        assert_eq!(report.verdicts.integrable, Some(true));
        assert_eq!(report.verdicts.hermitian, None);
        assert_eq!(report.verdicts.kahler, None);
    }

    #[test]
    fn falsify_b1_breaks_nijenhuis_only() {
        let report = falsify(&integrable_config(true), &Perturbation::B1(0.05)).unwrap();
        assert!(!report.check("nijenhuis").unwrap().passed);
        for name in Perturbation::B1(0.05).independent_checks() {
            assert!(
                report.check(name).unwrap().conclusive_pass(),
                "{name} should stay green: {:#?}",
                report.check(name).unwrap()
            );
        }
        assert!(report.check("j_squared").unwrap().max_residual <= 1e-12);
    }

    #[test]
    fn falsify_c1_scale_breaks_hermitian() {
        let report = falsify(&integrable_config(true), &Perturbation::C1Scale(1.1)).unwrap();
        assert!(!report.check("hermitian").unwrap().passed);
        for name in Perturbation::C1Scale(1.1).independent_checks() {
            assert!(report.check(name).unwrap().conclusive_pass(), "{name}");
        }
    }

    #[test]
    fn falsify_mu_offset_breaks_form_closure() {
        let report = falsify(&integrable_config(true), &Perturbation::MuOffset(0.1)).unwrap();
        assert!(!report.check("d_omega").unwrap().passed);
        for name in Perturbation::MuOffset(0.1).independent_checks() {
            assert!(report.check(name).unwrap().conclusive_pass(), "{name}");
        }
    }

    #[test]
    fn tiny_perturbation_is_rejected() {
        let err = falsify(&integrable_config(true), &Perturbation::B1(1e-15)).unwrap_err();
        assert!(matches!(err, Error::PerturbationTooSmall { .. }));
    }
}
