//! Constant-curvature base manifolds in a global conformal chart.
//!
//! The chart realizes curvature `c` through `g_ij = δ_ij / f(x)²` with
//! `f(x) = 1 + (c/4)|x|²`, which covers `c > 0`, `c = 0` and `c < 0` with one
//! formula and keeps Christoffel symbols and curvature analytic. For `c < 0`
//! the chart is only admissible while `f > 0`, i.e. `|x|² < 4/|c|`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use crate::error::{Error, Result};
use crate::num::{approx_f64, real, Real};

/// Base Riemannian manifold of constant sectional curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceForm<T> {
    n: usize,
    c: T,
    chart_radius: T,
}

/// Metric data of the base manifold bundled at one chart point.
#[derive(Debug, Clone)]
pub struct BasePointData<T> {
    pub x: DVector<T>,
    pub g: DMatrix<T>,
    pub g_inv: DMatrix<T>,
    /// Christoffel symbols, indexed `[k, i, j]` as `Γ^k_ij`.
    pub gamma: Array3<T>,
}

impl<T: Real> SpaceForm<T> {
    /// Builds a space form with a derived chart radius: `0.9·2/√|c|` for
    /// negative curvature, a large sentinel otherwise (the chart is global).
    pub fn new(n: usize, c: T) -> Result<Self> {
        let radius = if c < T::zero() {
            real::<T>(1.8) / (-c).sqrt()
        } else {
            real::<T>(1e6)
        };
        Self::with_chart_radius(n, c, radius)
    }

    pub fn with_chart_radius(n: usize, c: T, chart_radius: T) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "base dimension must satisfy n >= 3, got n = {n}"
            )));
        }
        if !c.is_finite() {
            return Err(Error::InvalidConfig("curvature must be finite".into()));
        }
        if !chart_radius.is_finite() || chart_radius <= T::zero() {
            return Err(Error::InvalidConfig("chart radius must be positive".into()));
        }
        if c < T::zero() {
            let limit = real::<T>(4.0) / (-c);
            if chart_radius * chart_radius >= limit {
                return Err(Error::InvalidConfig(format!(
                    "chart radius {} is too large for curvature {}: radius² must stay below 4/|c|",
                    approx_f64(chart_radius),
                    approx_f64(c)
                )));
            }
        }
        Ok(SpaceForm {
            n,
            c,
            chart_radius,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn curvature_constant(&self) -> T {
        self.c
    }

    pub fn chart_radius(&self) -> T {
        self.chart_radius
    }

    /// Conformal factor `f(x) = 1 + (c/4)|x|²`.
    pub fn conformal_factor(&self, x: &DVector<T>) -> T {
        T::one() + self.c / real::<T>(4.0) * x.dot(x)
    }

    pub fn check_inside(&self, x: &DVector<T>) -> Result<()> {
        let norm = x.norm();
        if norm < self.chart_radius {
            Ok(())
        } else {
            Err(Error::OutsideChart {
                norm: approx_f64(norm),
                radius: approx_f64(self.chart_radius),
            })
        }
    }

    fn check_dim(&self, x: &DVector<T>) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidConfig(format!(
                "coordinate vector has length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Metric components `g_ij(x) = δ_ij / f(x)²`.
    pub fn metric(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(x)?;
        self.check_inside(x)?;
        let f = self.conformal_factor(x);
        Ok(DMatrix::from_diagonal_element(
            self.n,
            self.n,
            T::one() / (f * f),
        ))
    }

    /// Inverse metric `g^{ij}(x) = f(x)² δ^{ij}`, analytic.
    pub fn metric_inverse(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(x)?;
        self.check_inside(x)?;
        let f = self.conformal_factor(x);
        Ok(DMatrix::from_diagonal_element(self.n, self.n, f * f))
    }

    /// Logarithmic gradient `s_i = ∂_i f / f` of the conformal factor.
    fn log_gradient(&self, x: &DVector<T>) -> DVector<T> {
        let f = self.conformal_factor(x);
        x * (self.c / (real::<T>(2.0) * f))
    }

    /// Christoffel symbols `Γ^k_ij = −(δ^k_i s_j + δ^k_j s_i − δ_ij s_k)`,
    /// indexed `[k, i, j]`; symmetric in `(i, j)` exactly.
    pub fn christoffel(&self, x: &DVector<T>) -> Result<Array3<T>> {
        self.check_dim(x)?;
        self.check_inside(x)?;
        let n = self.n;
        let s = self.log_gradient(x);
        let mut gamma = Array3::from_elem((n, n, n), T::zero());
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = T::zero();
                    if k == i {
                        v -= s[j];
                    }
                    if k == j {
                        v -= s[i];
                    }
                    if i == j {
                        v += s[k];
                    }
                    gamma[[k, i, j]] = v;
                }
            }
        }
        Ok(gamma)
    }

    /// Analytic derivatives `∂_l Γ^k_ij`, indexed `[k, i, j, l]`.
    fn christoffel_derivatives(&self, x: &DVector<T>) -> Array4<T> {
        let n = self.n;
        let f = self.conformal_factor(x);
        let s = self.log_gradient(x);
        // ∂_l s_i = (c/2) δ_il / f − s_i s_l
        let half_c = self.c / real::<T>(2.0);
        let mut dgamma = Array4::from_elem((n, n, n, n), T::zero());
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let ds = |a: usize, b: usize| {
                            let kron = if a == b { half_c / f } else { T::zero() };
                            kron - s[a] * s[b]
                        };
                        let mut v = T::zero();
                        if k == i {
                            v -= ds(j, l);
                        }
                        if k == j {
                            v -= ds(i, l);
                        }
                        if i == j {
                            v += ds(k, l);
                        }
                        dgamma[[k, i, j, l]] = v;
                    }
                }
            }
        }
        dgamma
    }

    /// Curvature tensor `R^h_kij` from the Christoffel symbols and their
    /// analytic derivatives, indexed `[h, k, i, j]`.
    pub fn curvature(&self, x: &DVector<T>) -> Result<Array4<T>> {
        let gamma = self.christoffel(x)?;
        let dgamma = self.christoffel_derivatives(x);
        let n = self.n;
        let mut r = Array4::from_elem((n, n, n, n), T::zero());
        for h in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = dgamma[[h, j, k, i]] - dgamma[[h, i, k, j]];
                        for l in 0..n {
                            v += gamma[[h, i, l]] * gamma[[l, j, k]]
                                - gamma[[h, j, l]] * gamma[[l, i, k]];
                        }
                        r[[h, k, i, j]] = v;
                    }
                }
            }
        }
        Ok(r)
    }

    /// Max componentwise deviation of the curvature from the space-form
    /// identity `R^h_kij = c (δ^h_i g_kj − δ^h_j g_ki)`.
    pub fn curvature_identity_residual(&self, x: &DVector<T>) -> Result<T> {
        let r = self.curvature(x)?;
        let g = self.metric(x)?;
        let n = self.n;
        let mut worst = T::zero();
        for h in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut ident = T::zero();
                        if h == i {
                            ident += self.c * g[(k, j)];
                        }
                        if h == j {
                            ident -= self.c * g[(k, i)];
                        }
                        worst = worst.max((r[[h, k, i, j]] - ident).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Energy density `t = ½ g^{ik}(q) p_i p_k`.
    pub fn energy_density(&self, q: &DVector<T>, p: &DVector<T>) -> Result<T> {
        self.check_dim(q)?;
        self.check_dim(p)?;
        self.check_inside(q)?;
        let f = self.conformal_factor(q);
        Ok(f * f * p.dot(p) / real::<T>(2.0))
    }

    pub fn base_point(&self, x: &DVector<T>) -> Result<BasePointData<T>> {
        Ok(BasePointData {
            x: x.clone(),
            g: self.metric(x)?,
            g_inv: self.metric_inverse(x)?,
            gamma: self.christoffel(x)?,
        })
    }
}
