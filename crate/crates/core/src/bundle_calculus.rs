//! Tensor assembly on the cotangent bundle and the differential oracles.
//!
//! All structures are assembled as `2n×2n` component arrays in the adapted
//! frame `{δ/δq^i, ∂/∂p_i}` where their block formulas live, then converted to
//! the coordinate frame `{∂/∂q^i, ∂/∂p_i}` whenever anything gets
//! differentiated: coordinate vector fields commute, which is what makes the
//! componentwise Nijenhuis and exterior-derivative formulas valid.
//!
//! Block index order is horizontal-then-vertical throughout: rows/columns
//! `0..n` pair with `δ/δq^i` (or `∂/∂q^i`), rows/columns `n..2n` with
//! `∂/∂p_i`.

use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lift_algebra::{LiftCoefficients, MetricCoefficients};
use crate::num::{approx_f64, real, Real};
use crate::scalar_curves::CurveJet;
use crate::space_forms::SpaceForm;

/// A point of the cotangent bundle in an induced chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<T> {
    pub q: DVector<T>,
    pub p: DVector<T>,
}

impl<T: Real> ChartPoint<T> {
    pub fn new(q: DVector<T>, p: DVector<T>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidConfig(format!(
                "q has length {} but p has length {}",
                q.len(),
                p.len()
            )));
        }
        if !(q.iter().all(|v| v.is_finite()) && p.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFiniteInput("chart point entries".into()));
        }
        Ok(ChartPoint { q, p })
    }

    pub fn from_slices(q: &[T], p: &[T]) -> Result<Self> {
        Self::new(DVector::from_row_slice(q), DVector::from_row_slice(p))
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Coordinate in the flattened `(q, p)` order used for stencils.
    fn coordinate(&self, d: usize) -> T {
        if d < self.n() {
            self.q[d]
        } else {
            self.p[d - self.n()]
        }
    }

    fn shifted(&self, d: usize, h: T) -> ChartPoint<T> {
        let mut out = self.clone();
        if d < self.n() {
            out.q[d] += h;
        } else {
            out.p[d - self.n()] += h;
        }
        out
    }
}

impl<T: nalgebra::Scalar + Serialize> Serialize for ChartPoint<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ChartPoint", 2)?;
        s.serialize_field("q", &self.q.as_slice())?;
        s.serialize_field("p", &self.p.as_slice())?;
        s.end()
    }
}

/// What a frame tensor represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TensorKind {
    Acs,
    Metric,
    TwoForm,
}

/// Which basis the components refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Frame {
    Adapted,
    Coordinate,
}

/// `2n×2n` component array of one of the three structures in a declared frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor<T> {
    pub kind: TensorKind,
    pub frame: Frame,
    pub components: DMatrix<T>,
}

/// Step policy for the central-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions<T> {
    /// Scale of the per-direction step `h_d = base_step · (1 + |x_d|)`.
    pub base_step: T,
    /// One extrapolation level on top of the second-order scheme.
    pub richardson: bool,
}

impl<T: Real> Default for FdOptions<T> {
    fn default() -> Self {
        FdOptions {
            base_step: real(5e-5),
            richardson: false,
        }
    }
}

impl<T: Real> FdOptions<T> {
    pub fn with_step(base_step: T) -> Self {
        FdOptions {
            base_step,
            richardson: false,
        }
    }
}

fn check_point<T: Real>(sf: &SpaceForm<T>, pt: &ChartPoint<T>) -> Result<()> {
    if pt.n() != sf.n() {
        return Err(Error::InvalidConfig(format!(
            "chart point has base dimension {} but the space form has n = {}",
            pt.n(),
            sf.n()
        )));
    }
    sf.check_inside(&pt.q)
}

/// `Γ⁰_ih = p_k Γ^k_ih` as a symmetric `n×n` matrix.
fn gamma_zero<T: Real>(sf: &SpaceForm<T>, pt: &ChartPoint<T>) -> Result<DMatrix<T>> {
    let gamma = sf.christoffel(&pt.q)?;
    let n = sf.n();
    Ok(DMatrix::from_fn(n, n, |i, h| {
        let mut v = T::zero();
        for k in 0..n {
            v += pt.p[k] * gamma[[k, i, h]];
        }
        v
    }))
}

/// Change-of-basis matrix expressing the adapted frame in the coordinate
/// frame. Block triangular with identity diagonal blocks, so its determinant
/// is one.
pub fn adapted_frame<T: Real>(sf: &SpaceForm<T>, pt: &ChartPoint<T>) -> Result<DMatrix<T>> {
    check_point(sf, pt)?;
    let n = sf.n();
    let g0 = gamma_zero(sf, pt)?;
    let mut a = DMatrix::identity(2 * n, 2 * n);
    // column i carries δ/δq^i = ∂/∂q^i + Γ⁰_ih ∂/∂p_h
    for h in 0..n {
        for i in 0..n {
            a[(n + h, i)] = g0[(i, h)];
        }
    }
    Ok(a)
}

fn check_coefficient_t<T: Real>(sf: &SpaceForm<T>, pt: &ChartPoint<T>, coeff_t: T) -> Result<T> {
    let t = sf.energy_density(&pt.q, &pt.p)?;
    let tol = real::<T>(1e-12).max(T::default_epsilon() * real::<T>(100.0));
    if (t - coeff_t).abs() > tol {
        return Err(Error::CoefficientMismatch {
            coeff_t: approx_f64(coeff_t),
            point_t: approx_f64(t),
        });
    }
    Ok(t)
}

/// Almost complex structure in the adapted frame, blocks
/// `J1_ij = a1 g_ij + b1 p_i p_j`, `J4^j_i = a4 δ + b4 g^{0j} p_i`,
/// `J3^i_j = a3 δ + b3 g^{0i} p_j`, `J2^{ij} = a2 g^{ij} + b2 g^{0i} g^{0j}`.
pub fn acs_matrix<T: Real>(
    sf: &SpaceForm<T>,
    pt: &ChartPoint<T>,
    coeffs: &LiftCoefficients<T>,
) -> Result<FrameTensor<T>> {
    check_point(sf, pt)?;
    check_coefficient_t(sf, pt, coeffs.t)?;
    let n = sf.n();
    let g = sf.metric(&pt.q)?;
    let g_inv = sf.metric_inverse(&pt.q)?;
    let g0 = &g_inv * &pt.p;
    let mut m = DMatrix::from_element(2 * n, 2 * n, T::zero());
    for j in 0..n {
        for i in 0..n {
            // horizontal output of a horizontal input
            m[(j, i)] = coeffs.b4 * g0[j] * pt.p[i] + if i == j { coeffs.a4 } else { T::zero() };
            // horizontal output of a vertical input
            m[(j, n + i)] = -(coeffs.a2 * g_inv[(j, i)] + coeffs.b2 * (g0[j] * g0[i]));
            // vertical output of a horizontal input
            m[(n + j, i)] = coeffs.a1 * g[(j, i)] + coeffs.b1 * (pt.p[j] * pt.p[i]);
            // vertical output of a vertical input
            m[(n + j, n + i)] =
                coeffs.b3 * pt.p[j] * g0[i] + if i == j { coeffs.a3 } else { T::zero() };
        }
    }
    Ok(FrameTensor {
        kind: TensorKind::Acs,
        frame: Frame::Adapted,
        components: m,
    })
}

/// Lifted metric in the adapted frame, blocks
/// `G1_ij = c1 g_ij + d1 p_i p_j`, `G2^{ij} = c2 g^{ij} + d2 g^{0i} g^{0j}`,
/// `G3_i^j = c3 δ + d3 p_i g^{0j}`. Errors if the assembled matrix is not
/// positive definite.
pub fn metric_matrix<T: Real>(
    sf: &SpaceForm<T>,
    pt: &ChartPoint<T>,
    mc: &MetricCoefficients<T>,
) -> Result<FrameTensor<T>> {
    check_point(sf, pt)?;
    check_coefficient_t(sf, pt, mc.t)?;
    let n = sf.n();
    let g = sf.metric(&pt.q)?;
    let g_inv = sf.metric_inverse(&pt.q)?;
    let g0 = &g_inv * &pt.p;
    let mut m = DMatrix::from_element(2 * n, 2 * n, T::zero());
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = mc.c1 * g[(i, j)] + mc.d1 * (pt.p[i] * pt.p[j]);
            m[(n + i, n + j)] = mc.c2 * g_inv[(i, j)] + mc.d2 * (g0[i] * g0[j]);
            let cross = mc.d3 * pt.p[i] * g0[j] + if i == j { mc.c3 } else { T::zero() };
            m[(i, n + j)] = cross;
            m[(n + j, i)] = cross;
        }
    }
    let min_eig = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap_or_else(T::one), |acc, &e| acc.min(e));
    if crate::lift_algebra::not_positive(min_eig) {
        return Err(Error::NotPositiveDefinite {
            min_eig: approx_f64(min_eig),
        });
    }
    Ok(FrameTensor {
        kind: TensorKind::Metric,
        frame: Frame::Adapted,
        components: m,
    })
}

/// Fundamental 2-form in the adapted frame:
/// `Ω(∂/∂p_i, δ/δq^j) = λ δ^i_j + μ g^{0i} p_j`, all other blocks zero.
pub fn omega_matrix<T: Real>(
    sf: &SpaceForm<T>,
    pt: &ChartPoint<T>,
    lambda: T,
    mu: T,
) -> Result<FrameTensor<T>> {
    check_point(sf, pt)?;
    let n = sf.n();
    let g_inv = sf.metric_inverse(&pt.q)?;
    let g0 = &g_inv * &pt.p;
    let mut m = DMatrix::from_element(2 * n, 2 * n, T::zero());
    for i in 0..n {
        for j in 0..n {
            let v = mu * g0[i] * pt.p[j] + if i == j { lambda } else { T::zero() };
            m[(n + i, j)] = v;
            m[(j, n + i)] = -v;
        }
    }
    Ok(FrameTensor {
        kind: TensorKind::TwoForm,
        frame: Frame::Adapted,
        components: m,
    })
}

fn invert_frame<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    a.clone().try_inverse().ok_or(Error::SingularFrame)
}

/// Converts adapted components to coordinate components with the variance
/// transform matching the tensor kind: `A·T·A⁻¹` for the (1,1) structure,
/// `A⁻ᵀ·T·A⁻¹` for the bilinear forms.
pub fn to_coordinate_frame<T: Real>(
    tensor: &FrameTensor<T>,
    a: &DMatrix<T>,
) -> Result<FrameTensor<T>> {
    if tensor.frame != Frame::Adapted {
        return Err(Error::FrameMismatch(
            "tensor is already in the coordinate frame".into(),
        ));
    }
    let a_inv = invert_frame(a)?;
    let components = match tensor.kind {
        TensorKind::Acs => a * &tensor.components * &a_inv,
        TensorKind::Metric | TensorKind::TwoForm => {
            a_inv.transpose() * &tensor.components * &a_inv
        }
    };
    Ok(FrameTensor {
        kind: tensor.kind,
        frame: Frame::Coordinate,
        components,
    })
}

/// Inverse of [`to_coordinate_frame`].
pub fn to_adapted_frame<T: Real>(
    tensor: &FrameTensor<T>,
    a: &DMatrix<T>,
) -> Result<FrameTensor<T>> {
    if tensor.frame != Frame::Coordinate {
        return Err(Error::FrameMismatch(
            "tensor is already in the adapted frame".into(),
        ));
    }
    let a_inv = invert_frame(a)?;
    let components = match tensor.kind {
        TensorKind::Acs => &a_inv * &tensor.components * a,
        TensorKind::Metric | TensorKind::TwoForm => a.transpose() * &tensor.components * a,
    };
    Ok(FrameTensor {
        kind: tensor.kind,
        frame: Frame::Adapted,
        components,
    })
}

/// `‖J² + I‖∞` of an almost-complex component matrix.
pub fn acs_square_residual<T: Real>(j: &FrameTensor<T>) -> T {
    let m = &j.components;
    let dim = m.nrows();
    (m * m + DMatrix::<T>::identity(dim, dim)).amax()
}

/// `‖JᵀGJ − G‖∞` for tensors expressed in the same frame at the same point.
pub fn hermitian_residual<T: Real>(j: &FrameTensor<T>, g: &FrameTensor<T>) -> Result<T> {
    if j.kind != TensorKind::Acs || g.kind != TensorKind::Metric {
        return Err(Error::FrameMismatch(
            "hermitian residual expects an ACS and a metric tensor".into(),
        ));
    }
    if j.frame != g.frame {
        return Err(Error::FrameMismatch(
            "tensors are expressed in different frames".into(),
        ));
    }
    if j.components.nrows() != g.components.nrows() {
        return Err(Error::FrameMismatch("tensor dimensions differ".into()));
    }
    let m = &j.components;
    Ok((m.transpose() * &g.components * m - &g.components).amax())
}

/// `‖Ω − G·J‖∞`: the fundamental 2-form is the metric contracted with the
/// structure.
pub fn fundamental_form_residual<T: Real>(
    omega: &FrameTensor<T>,
    g: &FrameTensor<T>,
    j: &FrameTensor<T>,
) -> Result<T> {
    if omega.frame != g.frame || g.frame != j.frame {
        return Err(Error::FrameMismatch(
            "tensors are expressed in different frames".into(),
        ));
    }
    Ok((&g.components * &j.components - &omega.components).amax())
}

/// Per-direction steps and the stencil guard: the point must keep a margin of
/// twice the largest base-direction step from the chart boundary.
fn stencil_guard<T: Real>(sf: &SpaceForm<T>, pt: &ChartPoint<T>, fd: &FdOptions<T>) -> Result<()> {
    check_point(sf, pt)?;
    let n = sf.n();
    let mut h_max = T::zero();
    for d in 0..n {
        h_max = h_max.max(fd.base_step * (T::one() + pt.coordinate(d).abs()));
    }
    let norm = pt.q.norm();
    let margin = real::<T>(2.0) * h_max;
    if norm + margin >= sf.chart_radius() {
        return Err(Error::StencilOutsideChart {
            norm: approx_f64(norm),
            extent: approx_f64(margin),
            radius: approx_f64(sf.chart_radius()),
        });
    }
    Ok(())
}

/// Central differences of a matrix-valued field along every chart direction.
fn central_diff_matrices<T, F>(
    sf: &SpaceForm<T>,
    field: &F,
    pt: &ChartPoint<T>,
    fd: &FdOptions<T>,
) -> Result<Vec<DMatrix<T>>>
where
    T: Real,
    F: Fn(&ChartPoint<T>) -> Result<DMatrix<T>>,
{
    stencil_guard(sf, pt, fd)?;
    let dims = 2 * sf.n();
    let two = real::<T>(2.0);
    let mut out = Vec::with_capacity(dims);
    for d in 0..dims {
        let h = fd.base_step * (T::one() + pt.coordinate(d).abs());
        let diff = |step: T| -> Result<DMatrix<T>> {
            let plus = field(&pt.shifted(d, step))?;
            let minus = field(&pt.shifted(d, -step))?;
            Ok((plus - minus) / (two * step))
        };
        let first = diff(h)?;
        if fd.richardson {
            let second = diff(h / two)?;
            let four = real::<T>(4.0);
            let three = real::<T>(3.0);
            out.push((second * four - first) / three);
        } else {
            out.push(first);
        }
    }
    Ok(out)
}

/// Nijenhuis tensor components
/// `N^c_ab = J^d_a ∂_d J^c_b − J^d_b ∂_d J^c_a − J^c_d (∂_a J^d_b − ∂_b J^d_a)`
/// with the partials taken by central differences of the coordinate-frame
/// components. Indexed `[c, a, b]`; antisymmetry in `(a, b)` is exact by
/// construction.
pub fn nijenhuis<T, F>(
    sf: &SpaceForm<T>,
    j_field: &F,
    pt: &ChartPoint<T>,
    fd: &FdOptions<T>,
) -> Result<Array3<T>>
where
    T: Real,
    F: Fn(&ChartPoint<T>) -> Result<DMatrix<T>>,
{
    let j0 = j_field(pt)?;
    let dj = central_diff_matrices(sf, j_field, pt, fd)?;
    let dims = 2 * sf.n();
    let mut nt = Array3::from_elem((dims, dims, dims), T::zero());
    for a in 0..dims {
        for b in (a + 1)..dims {
            for c in 0..dims {
                let mut v = T::zero();
                for d in 0..dims {
                    v += j0[(d, a)] * dj[d][(c, b)] - j0[(d, b)] * dj[d][(c, a)]
                        - j0[(c, d)] * (dj[a][(d, b)] - dj[b][(d, a)]);
                }
                nt[[c, a, b]] = v;
                nt[[c, b, a]] = -v;
            }
        }
    }
    Ok(nt)
}

/// Numerical exterior derivative
/// `(dΩ)_abc = ∂_a Ω_bc + ∂_b Ω_ca + ∂_c Ω_ab` on coordinate-frame
/// components, returned fully antisymmetric and indexed `[a, b, c]`.
pub fn d_omega_numeric<T, F>(
    sf: &SpaceForm<T>,
    omega_field: &F,
    pt: &ChartPoint<T>,
    fd: &FdOptions<T>,
) -> Result<Array3<T>>
where
    T: Real,
    F: Fn(&ChartPoint<T>) -> Result<DMatrix<T>>,
{
    let dm = central_diff_matrices(sf, omega_field, pt, fd)?;
    let dims = 2 * sf.n();
    let mut out = Array3::from_elem((dims, dims, dims), T::zero());
    for a in 0..dims {
        for b in (a + 1)..dims {
            for c in (b + 1)..dims {
                let v = dm[a][(b, c)] + dm[b][(c, a)] + dm[c][(a, b)];
                out[[a, b, c]] = v;
                out[[b, c, a]] = v;
                out[[c, a, b]] = v;
                out[[a, c, b]] = -v;
                out[[b, a, c]] = -v;
                out[[c, b, a]] = -v;
            }
        }
    }
    Ok(out)
}

/// Closed-form exterior derivative of the fundamental 2-form,
/// `dΩ = ½(λ' − μ) p_k (g^{kh} δ^i_j − g^{ki} δ^h_j) Dp_h ∧ Dp_i ∧ dq^j`,
/// evaluated through the adapted coframe and returned as coordinate-frame
/// components `[a, b, c]`. Identically zero when `μ = λ'`.
pub fn d_omega_closed_form<T: Real>(
    sf: &SpaceForm<T>,
    pt: &ChartPoint<T>,
    lambda_jet: &CurveJet<T>,
    mu: T,
) -> Result<Array3<T>> {
    check_point(sf, pt)?;
    let n = sf.n();
    let dims = 2 * n;
    let g_inv = sf.metric_inverse(&pt.q)?;
    let g0 = &g_inv * &pt.p;
    let gamma0 = gamma_zero(sf, pt)?;

    // coordinate components of the adapted coframe 1-forms
    let mut dq = vec![DVector::from_element(dims, T::zero()); n];
    let mut dp_abs = vec![DVector::from_element(dims, T::zero()); n];
    for (j, row) in dq.iter_mut().enumerate() {
        row[j] = T::one();
    }
    for i in 0..n {
        dp_abs[i][n + i] = T::one();
        for h in 0..n {
            dp_abs[i][h] = -gamma0[(i, h)];
        }
    }

    let factor = (lambda_jet.d1 - mu) / real::<T>(2.0);
    let mut out = Array3::from_elem((dims, dims, dims), T::zero());
    if factor == T::zero() {
        return Ok(out);
    }
    for h in 0..n {
        for i in 0..n {
            for (j, w) in dq.iter().enumerate() {
                let mut s = T::zero();
                if i == j {
                    s += g0[h];
                }
                if h == j {
                    s -= g0[i];
                }
                let s = factor * s;
                if s == T::zero() {
                    continue;
                }
                let (u, v) = (&dp_abs[h], &dp_abs[i]);
                for a in 0..dims {
                    for b in (a + 1)..dims {
                        for c in (b + 1)..dims {
                            let det = u[a] * (v[b] * w[c] - v[c] * w[b])
                                - u[b] * (v[a] * w[c] - v[c] * w[a])
                                + u[c] * (v[a] * w[b] - v[b] * w[a]);
                            let add = s * det;
                            out[[a, b, c]] += add;
                            out[[b, c, a]] += add;
                            out[[c, a, b]] += add;
                            out[[a, c, b]] -= add;
                            out[[b, a, c]] -= add;
                            out[[c, b, a]] -= add;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `‖∇J‖∞` for the Levi-Civita connection of `G`, both fields differentiated
/// numerically in the coordinate frame. Zero (up to two stacked
/// finite-difference layers) exactly for Kähler configurations.
pub fn covariant_derivative_j<T, FJ, FG>(
    sf: &SpaceForm<T>,
    j_field: &FJ,
    g_field: &FG,
    pt: &ChartPoint<T>,
    fd: &FdOptions<T>,
) -> Result<T>
where
    T: Real,
    FJ: Fn(&ChartPoint<T>) -> Result<DMatrix<T>>,
    FG: Fn(&ChartPoint<T>) -> Result<DMatrix<T>>,
{
    let dims = 2 * sf.n();
    let j0 = j_field(pt)?;
    let g0 = g_field(pt)?;
    let sym = (&g0 + g0.transpose()) / real::<T>(2.0);
    let chol = Cholesky::new(sym).ok_or_else(|| {
        let min_eig = g0
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &e| acc.min(approx_f64(e)));
        Error::NotPositiveDefinite { min_eig }
    })?;
    let g_inv = chol.inverse();
    let dj = central_diff_matrices(sf, j_field, pt, fd)?;
    let dg = central_diff_matrices(sf, g_field, pt, fd)?;

    // Christoffel symbols of G, indexed gamma[c][(a, b)]
    let half = real::<T>(0.5);
    let mut gamma = Vec::with_capacity(dims);
    for c in 0..dims {
        let mut m = DMatrix::from_element(dims, dims, T::zero());
        for a in 0..dims {
            for b in a..dims {
                let mut v = T::zero();
                for d in 0..dims {
                    v += half * g_inv[(c, d)] * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]);
                }
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        gamma.push(m);
    }

    let mut worst = T::zero();
    for a in 0..dims {
        for b in 0..dims {
            for c in 0..dims {
                let mut v = dj[a][(c, b)];
                for d in 0..dims {
                    v += gamma[c][(a, d)] * j0[(d, b)] - gamma[d][(a, b)] * j0[(c, d)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Max absolute entry of a rank-3 component array.
pub fn max_abs3<T: Real>(arr: &Array3<T>) -> T {
    arr.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}
