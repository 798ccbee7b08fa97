//! Higher-order refinements of the first-order likelihood pivots for gamma
//! models: the modified signed root
//!
//! ```text
//! z = z_p + (1/z_p) log(m/z_p),   z_p = sign(φ̂ − φ) √d_p,
//! ```
//!
//! and the corrected deviance
//!
//! ```text
//! d = d_p + log(m) / (2 d_p).
//! ```
//!
//! Both are indeterminate at the MLE. Inside a small window around it the
//! corrected value is replaced by a cubic through four nodes just outside
//! the window, and the result is flagged.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{
    deviance_term, fitted_means, kappa_second, precision_deviance, profile_precision,
    solve_precision, beta_deviance_from_precisions, GammaFit,
};
use crate::linear::Dataset;
use crate::numerics::{
    find_root_expanding, lower_regularized_gamma, normal_cdf_unchecked, upper_regularized_gamma,
    Interval, RealGrid,
};
use crate::pivot::ConfidenceDensity;

/// Half-width of the interpolation window on the signed-root scale.
pub const ROOT_WINDOW: f64 = 0.05;
/// Interpolation window on the deviance scale.
pub const DEVIANCE_WINDOW: f64 = ROOT_WINDOW * ROOT_WINDOW;
const ROOT_NODES: [f64; 4] = [0.10, 0.05, -0.05, -0.10];
const DEVIANCE_NODES: [f64; 2] = [0.0025, 0.01];
const NODE_TOL: f64 = 1e-14;
/// Finite-difference step as a fraction of the grid span.
const FD_SPAN_FRACTION: f64 = 1.0 / 2048.0;

/// How a corrected value was obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorrectionFlags {
    /// Inside the window around the MLE; value is interpolated.
    pub interpolated: bool,
    /// The correction factor was unusable; the first-order value is returned.
    pub unavailable: bool,
    /// A negative corrected deviance was clamped to zero.
    pub clamped: bool,
}

impl CorrectionFlags {
    pub fn any(&self) -> bool {
        self.interpolated || self.unavailable || self.clamped
    }
}

/// z = z_p + (1/z_p) log(m/z_p).
pub fn modified_root(z_p: f64, m: f64) -> f64 {
    z_p + (m / z_p).ln() / z_p
}

/// d = d_p + log(m)/(2 d_p).
pub fn corrected_deviance(d_p: f64, m: f64) -> f64 {
    d_p + m.ln() / (2.0 * d_p)
}

/// sign(φ̂ − φ) √d_p.
pub fn signed_root(d_p: f64, estimate: f64, value: f64) -> f64 {
    let s = d_p.max(0.0).sqrt();
    if estimate >= value {
        s
    } else {
        -s
    }
}

/// Known-mean correction factor m = {n k″(φ̂)}^{1/2} (φ̂ − φ).
pub fn known_mean_factor(n: usize, precision_hat: f64, precision: f64) -> f64 {
    (n as f64 * kappa_second(precision_hat)).sqrt() * (precision_hat - precision)
}

/// Quadratic form rᵀX (Xᵀ diag(y/μ) X)⁻¹ Xᵀr with r = (y − μ)/μ.
pub fn qq_quadratic_form(x: &DMatrix<f64>, y: &DVector<f64>, mu: &DVector<f64>) -> Result<f64> {
    let n = x.nrows();
    let r = DVector::from_iterator(n, (0..n).map(|i| (y[i] - mu[i]) / mu[i]));
    let w = DVector::from_iterator(n, (0..n).map(|i| y[i] / mu[i]));
    let mut info = x.transpose() * DMatrix::from_diagonal(&w) * x;
    info.fill_upper_triangle_with_lower_triangle();
    let xr = x.transpose() * r;
    let chol = info.cholesky().ok_or_else(|| {
        Error::DegenerateFit("Xᵀdiag(y/μ)X is not positive definite".into())
    })?;
    Ok(xr.dot(&chol.solve(&xr)))
}

/// m = n k″(φ̂) / {n k″(φ) − Q/φ} for the precision.
pub fn qq_factor(n: usize, precision_hat: f64, precision: f64, quad_form: f64) -> f64 {
    let n = n as f64;
    n * kappa_second(precision_hat) / (n * kappa_second(precision) - quad_form / precision)
}

/// m = |φ̂XᵀX| / |φ(β) Xᵀdiag(y/μ)X − XᵀrrᵀX / (n k″(φ(β)))| for the
/// coefficient vector, with μ = exp(Xβ) and r = (y − μ)/μ.
pub fn determinant_factor(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    precision_hat: f64,
    precision_beta: f64,
) -> f64 {
    let n = x.nrows();
    let numerator = (x.transpose() * x * precision_hat).determinant();
    let r = DVector::from_iterator(n, (0..n).map(|i| (y[i] - mu[i]) / mu[i]));
    let w = DVector::from_iterator(n, (0..n).map(|i| y[i] / mu[i]));
    let xr = x.transpose() * r;
    let scale = n as f64 * kappa_second(precision_beta);
    let denom_matrix =
        x.transpose() * DMatrix::from_diagonal(&w) * x * precision_beta - &xr * xr.transpose() / scale;
    numerator / denom_matrix.determinant()
}

/// Lagrange interpolation through four nodes.
fn cubic_through(nodes: &[(f64, f64); 4], t: f64) -> f64 {
    let mut total = 0.0;
    for (i, &(xi, yi)) in nodes.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(xj, _)) in nodes.iter().enumerate() {
            if i != j {
                basis *= (t - xj) / (xi - xj);
            }
        }
        total += yi * basis;
    }
    total
}

/// The corrected root of a scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedRoot {
    pub z_p: f64,
    pub m: f64,
    pub z: f64,
    pub flags: CorrectionFlags,
}

impl ModifiedRoot {
    /// Applies the modified-root formula; a nonpositive or non-finite m/z_p
    /// leaves z = z_p with the `unavailable` flag.
    pub fn from_parts(z_p: f64, m: f64) -> Self {
        let ratio = m / z_p;
        if ratio > 0.0 && ratio.is_finite() {
            Self {
                z_p,
                m,
                z: modified_root(z_p, m),
                flags: CorrectionFlags::default(),
            }
        } else {
            Self {
                z_p,
                m,
                z: z_p,
                flags: CorrectionFlags {
                    unavailable: true,
                    ..Default::default()
                },
            }
        }
    }

    /// Confidence P(Z* ≥ z) = 1 − Φ(z).
    pub fn upper_tail(&self) -> f64 {
        normal_cdf_unchecked(-self.z)
    }

    /// Φ(z).
    pub fn lower_tail(&self) -> f64 {
        normal_cdf_unchecked(self.z)
    }
}

/// The corrected deviance of a parameter of dimension `dims`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedDeviance {
    pub d_p: f64,
    pub m: f64,
    pub d: f64,
    pub dims: usize,
    /// sign(θ̂ − θ)√d for a scalar parameter.
    pub signed_root: Option<f64>,
    pub flags: CorrectionFlags,
}

impl CorrectedDeviance {
    /// Applies the corrected-deviance formula with clamping at zero; an
    /// unusable m leaves d = d_p with the `unavailable` flag.
    pub fn from_parts(d_p: f64, m: f64, dims: usize) -> Self {
        let mut flags = CorrectionFlags::default();
        let d = if m > 0.0 && m.is_finite() && d_p > 0.0 {
            let d = corrected_deviance(d_p, m);
            if d < 0.0 {
                flags.clamped = true;
                0.0
            } else {
                d
            }
        } else {
            flags.unavailable = true;
            d_p
        };
        Self {
            d_p,
            m,
            d,
            dims,
            signed_root: None,
            flags,
        }
    }

    /// P(D* ≥ d) = Γ(p/2, d/2)/Γ(p/2).
    pub fn upper_tail(&self) -> f64 {
        upper_regularized_gamma(0.5 * self.dims as f64, 0.5 * self.d).unwrap_or(f64::NAN)
    }

    /// Confidence of the ball {θ : D(θ) ≤ d} evaluated at this d.
    pub fn ball_confidence(&self) -> f64 {
        lower_regularized_gamma(0.5 * self.dims as f64, 0.5 * self.d).unwrap_or(f64::NAN)
    }

    /// Φ of the signed root, for scalar parameters.
    pub fn signed_confidence(&self) -> Option<f64> {
        self.signed_root.map(normal_cdf_unchecked)
    }
}

/// Profile of the gamma precision φ. The profile deviance depends only on
/// n and φ̂; the Skovgaard factor also needs the quadratic form Q, which is
/// zero in the known-mean model.
#[derive(Debug, Clone)]
pub struct PrecisionProfile {
    n: usize,
    precision_hat: f64,
    quad_form: f64,
    nodes: Arc<OnceLock<Option<[f64; 4]>>>,
}

impl PrecisionProfile {
    pub fn new(n: usize, precision_hat: f64, quad_form: f64) -> Result<Self> {
        if n == 0 || !(precision_hat > 0.0) || !precision_hat.is_finite() {
            return Err(Error::Domain(format!(
                "precision profile needs n >= 1 and a positive estimate (n = {n}, estimate = {precision_hat})"
            )));
        }
        Ok(Self {
            n,
            precision_hat,
            quad_form,
            nodes: Arc::new(OnceLock::new()),
        })
    }

    /// Known mean μ = 1: b_i = y_i − 1 − log y_i.
    pub fn known_mean(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if let Some(i) = sample.iter().position(|&y| !(y > 0.0) || !y.is_finite()) {
            return Err(Error::Domain(format!(
                "response must be strictly positive; row {i} has value {}",
                sample[i]
            )));
        }
        let n = sample.len();
        let mean_b = sample.iter().map(|&y| deviance_term(y, 1.0)).sum::<f64>() / n as f64;
        Self::new(n, solve_precision(mean_b)?, 0.0)
    }

    /// Gamma regression; Q is evaluated at the fitted means.
    pub fn from_fit(data: &Dataset, fit: &GammaFit) -> Result<Self> {
        let q = qq_quadratic_form(data.x(), data.y(), &fit.mu_hat)?;
        Self::new(fit.n, fit.precision_hat, q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn precision_hat(&self) -> f64 {
        self.precision_hat
    }

    pub fn quad_form(&self) -> f64 {
        self.quad_form
    }

    fn check(&self, precision: f64) -> Result<()> {
        if precision > 0.0 && precision.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("precision must be positive, got {precision}")))
        }
    }

    pub fn deviance(&self, precision: f64) -> f64 {
        precision_deviance(self.n, self.precision_hat, precision)
    }

    /// First-order signed root z_p.
    pub fn first_order_root(&self, precision: f64) -> Result<ModifiedRoot> {
        self.check(precision)?;
        let z_p = signed_root(self.deviance(precision), self.precision_hat, precision);
        Ok(ModifiedRoot {
            z_p,
            m: z_p,
            z: z_p,
            flags: CorrectionFlags::default(),
        })
    }

    fn raw_fraser(&self, precision: f64) -> ModifiedRoot {
        let z_p = signed_root(self.deviance(precision), self.precision_hat, precision);
        ModifiedRoot::from_parts(z_p, known_mean_factor(self.n, self.precision_hat, precision))
    }

    fn raw_skovgaard(&self, precision: f64) -> CorrectedDeviance {
        let d_p = self.deviance(precision);
        let m = qq_factor(self.n, self.precision_hat, precision, self.quad_form);
        let mut out = CorrectedDeviance::from_parts(d_p, m, 1);
        out.signed_root = Some(signed_root(out.d, self.precision_hat, precision));
        out
    }

    /// Parameter values where z_p equals +0.10, +0.05, −0.05, −0.10.
    fn window_nodes(&self) -> Option<[f64; 4]> {
        *self.nodes.get_or_init(|| {
            let t_hat = self.precision_hat.ln();
            let scale = (self.n as f64 * kappa_second(self.precision_hat)).sqrt() * self.precision_hat;
            let mut out = [0.0; 4];
            for (slot, &target) in out.iter_mut().zip(ROOT_NODES.iter()) {
                let step = target.abs() / scale;
                // z_p decreases in φ, so positive targets sit below φ̂
                let bracket = if target > 0.0 {
                    (t_hat - 2.0 * step, t_hat - 0.5 * step)
                } else {
                    (t_hat + 0.5 * step, t_hat + 2.0 * step)
                };
                let g = |t: f64| {
                    let phi = t.exp();
                    signed_root(self.deviance(phi), self.precision_hat, phi) - target
                };
                *slot = find_root_expanding(g, bracket, NODE_TOL, Interval::real_line())
                    .ok()?
                    .exp();
            }
            Some(out)
        })
    }

    fn in_window(&self, precision: f64) -> bool {
        self.deviance(precision) < DEVIANCE_WINDOW
    }

    /// Fraser's modified root at φ.
    pub fn fraser_root(&self, precision: f64) -> Result<ModifiedRoot> {
        self.check(precision)?;
        if !self.in_window(precision) {
            return Ok(self.raw_fraser(precision));
        }
        let raw = self.raw_fraser(precision);
        let nodes = self.window_nodes().ok_or_else(|| {
            Error::DegenerateFit("could not place interpolation nodes around the estimate".into())
        })?;
        let pts = nodes.map(|phi| (phi, self.raw_fraser(phi).z));
        Ok(ModifiedRoot {
            z: cubic_through(&pts, precision),
            flags: CorrectionFlags {
                interpolated: true,
                ..raw.flags
            },
            ..raw
        })
    }

    /// Skovgaard's corrected deviance for φ.
    pub fn skovgaard(&self, precision: f64) -> Result<CorrectedDeviance> {
        self.check(precision)?;
        let raw = self.raw_skovgaard(precision);
        if !self.in_window(precision) {
            return Ok(raw);
        }
        let nodes = self.window_nodes().ok_or_else(|| {
            Error::DegenerateFit("could not place interpolation nodes around the estimate".into())
        })?;
        let pts = nodes.map(|phi| {
            let r = self.raw_skovgaard(phi);
            (phi, r.signed_root.unwrap_or(0.0))
        });
        let r = cubic_through(&pts, precision);
        Ok(CorrectedDeviance {
            d: r * r,
            signed_root: Some(r),
            flags: CorrectionFlags {
                interpolated: true,
                ..raw.flags
            },
            ..raw
        })
    }
}

/// Fraser's modified root for the known-mean (μ = 1) gamma sample.
pub fn fraser_root_known_mu(sample: &[f64], precision: f64) -> Result<ModifiedRoot> {
    PrecisionProfile::known_mean(sample)?.fraser_root(precision)
}

/// Skovgaard's corrected deviance for the precision of a gamma regression.
pub fn skovgaard_precision(data: &Dataset, fit: &GammaFit, precision: f64) -> Result<CorrectedDeviance> {
    PrecisionProfile::from_fit(data, fit)?.skovgaard(precision)
}

/// Profile of the coefficient vector of a gamma regression.
#[derive(Debug, Clone)]
pub struct CoefficientProfile<'a> {
    data: &'a Dataset,
    fit: &'a GammaFit,
}

impl<'a> CoefficientProfile<'a> {
    pub fn new(data: &'a Dataset, fit: &'a GammaFit) -> Result<Self> {
        if data.n() != fit.n || data.p() != fit.p {
            return Err(Error::InvalidInput("fit does not belong to this dataset".into()));
        }
        Ok(Self { data, fit })
    }

    fn point(&self, beta: &DVector<f64>) -> Result<(f64, f64)> {
        let precision_beta = profile_precision(self.data, beta)?;
        let d_p = beta_deviance_from_precisions(self.fit.n, self.fit.precision_hat, precision_beta);
        Ok((d_p, precision_beta))
    }

    pub fn deviance(&self, beta: &DVector<f64>) -> Result<f64> {
        self.check(beta)?;
        Ok(self.point(beta)?.0)
    }

    fn check(&self, beta: &DVector<f64>) -> Result<()> {
        if beta.len() != self.fit.p {
            return Err(Error::InvalidInput("coefficient length does not match the fit".into()));
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// First-order deviance wrapped as a corrected deviance with m = 1.
    pub fn first_order(&self, beta: &DVector<f64>) -> Result<CorrectedDeviance> {
        let d_p = self.deviance(beta)?;
        Ok(CorrectedDeviance {
            d_p,
            m: 1.0,
            d: d_p,
            dims: self.fit.p,
            signed_root: None,
            flags: CorrectionFlags::default(),
        })
    }

    fn raw(&self, beta: &DVector<f64>) -> Result<CorrectedDeviance> {
        let (d_p, precision_beta) = self.point(beta)?;
        let mu = fitted_means(self.data.x(), beta);
        let m = determinant_factor(
            self.data.x(),
            self.data.y(),
            &mu,
            self.fit.precision_hat,
            precision_beta,
        );
        Ok(CorrectedDeviance::from_parts(d_p, m, self.fit.p))
    }

    /// Distance t along β̂ + t·u at which d_p reaches `target`.
    fn ray_node(&self, u: &DVector<f64>, target: f64) -> Result<f64> {
        let curvature = self.fit.precision_hat * (self.data.x() * u).norm_squared();
        let guess = (target / curvature).sqrt();
        let g = |t: f64| match self.point(&(&self.fit.beta_hat + u * t)) {
            Ok((d_p, _)) => d_p - target,
            Err(_) => f64::NAN,
        };
        find_root_expanding(g, (0.5 * guess, 2.0 * guess), NODE_TOL * guess, Interval::positive())
    }

    /// Skovgaard's corrected deviance for β.
    pub fn skovgaard(&self, beta: &DVector<f64>) -> Result<CorrectedDeviance> {
        self.check(beta)?;
        let raw = self.raw(beta)?;
        if raw.d_p >= DEVIANCE_WINDOW {
            return Ok(raw);
        }
        let offset = beta - &self.fit.beta_hat;
        let dist = offset.norm();
        let interpolated = CorrectionFlags {
            interpolated: true,
            ..Default::default()
        };
        if dist == 0.0 {
            return Ok(CorrectedDeviance {
                d: 0.0,
                flags: interpolated,
                ..raw
            });
        }
        let u = offset / dist;
        let neg = -&u;
        let mut pts = [(0.0, 0.0); 4];
        let mut flags = interpolated;
        let layout = [(&neg, DEVIANCE_NODES[1], -1.0), (&neg, DEVIANCE_NODES[0], -1.0),
            (&u, DEVIANCE_NODES[0], 1.0), (&u, DEVIANCE_NODES[1], 1.0)];
        for (slot, (dir, target, sign)) in pts.iter_mut().zip(layout) {
            let t = self.ray_node(dir, target)?;
            let node = self.raw(&(&self.fit.beta_hat + dir * t))?;
            flags.unavailable |= node.flags.unavailable;
            *slot = (sign * t, node.d);
        }
        let mut d = cubic_through(&pts, dist);
        if d < 0.0 {
            d = 0.0;
            flags.clamped = true;
        }
        Ok(CorrectedDeviance { d, flags, ..raw })
    }
}

/// Skovgaard's corrected deviance for the coefficient vector.
pub fn skovgaard_beta(data: &Dataset, fit: &GammaFit, beta: &DVector<f64>) -> Result<CorrectedDeviance> {
    CoefficientProfile::new(data, fit)?.skovgaard(beta)
}

/// Confidence density dΦ(z(φ))/dφ of a corrected (or first-order) root,
/// by a five-point finite difference with step span/2048. `domain` is the
/// parameter space, used to switch to one-sided stencils at its edge.
pub fn corrected_confidence_density<F>(
    root_fn: F,
    grid: &RealGrid,
    domain: Interval,
) -> Result<ConfidenceDensity>
where
    F: Fn(f64) -> Result<ModifiedRoot> + Send + Sync + 'static,
{
    let pts = grid.points();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    if pts.iter().any(|&t| !domain.contains(t)) {
        return Err(Error::Domain(format!(
            "grid [{}, {}] leaves the parameter space [{}, {}]",
            grid.lo(),
            grid.hi(),
            domain.lo,
            domain.hi
        )));
    }
    let zs: Vec<f64> = pts.iter().map(|&t| root_fn(t).map(|r| r.z)).collect::<Result<_>>()?;
    let decreasing = zs[zs.len() - 1] < zs[0];
    for i in 1..zs.len() {
        let ok = if decreasing { zs[i] < zs[i - 1] } else { zs[i] > zs[i - 1] };
        if !ok || !zs[i].is_finite() {
            return Err(Error::ContractViolation(format!(
                "corrected root is not monotone on [{}, {}] (z = {} then {})",
                pts[i - 1],
                pts[i],
                zs[i - 1],
                zs[i]
            )));
        }
    }
    let h = (grid.hi() - grid.lo()) * FD_SPAN_FRACTION;
    let cdf = move |t: f64| root_fn(t).map(|r| normal_cdf_unchecked(r.z)).unwrap_or(f64::NAN);
    let density = move |t: f64| {
        let g = |k: f64| cdf(t + k * h);
        let slope = if t - 2.0 * h <= domain.lo {
            (-25.0 * g(0.0) + 48.0 * g(1.0) - 36.0 * g(2.0) + 16.0 * g(3.0) - 3.0 * g(4.0))
                / (12.0 * h)
        } else if t + 2.0 * h >= domain.hi {
            (25.0 * g(0.0) - 48.0 * g(-1.0) + 36.0 * g(-2.0) - 16.0 * g(-3.0) + 3.0 * g(-4.0))
                / (12.0 * h)
        } else {
            (-g(2.0) + 8.0 * g(1.0) - 8.0 * g(-1.0) + g(-2.0)) / (12.0 * h)
        };
        slope.abs()
    };
    Ok(ConfidenceDensity::new(
        density,
        Interval {
            lo: grid.lo(),
            hi: grid.hi(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_pdf;

    #[test]
    fn formulas_reduce_exactly() {
        for &z_p in &[-2.5, -0.3, 0.7, 3.0] {
            assert_eq!(modified_root(z_p, z_p), z_p);
        }
        for &d_p in &[0.01, 1.0, 7.5] {
            assert_eq!(corrected_deviance(d_p, 1.0), d_p);
        }
    }

    #[test]
    fn unusable_factor_falls_back() {
        let r = ModifiedRoot::from_parts(1.0, -2.0);
        assert!(r.flags.unavailable);
        assert_eq!(r.z, 1.0);
        let d = CorrectedDeviance::from_parts(2.0, 0.0, 1);
        assert!(d.flags.unavailable);
        assert_eq!(d.d, 2.0);
        let c = CorrectedDeviance::from_parts(0.1, 1e-3, 1);
        assert!(c.flags.clamped);
        assert_eq!(c.d, 0.0);
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let nodes = [-1.0, 0.2, 1.5, 3.0].map(|t| (t, f(t)));
        for &t in &[-0.5, 0.0, 0.7, 2.2] {
            assert!((cubic_through(&nodes, t) - f(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn known_mean_window_is_continuous() {
        let sample = [0.6, 1.3, 0.8, 1.9, 0.4, 1.1, 0.95, 1.6, 0.7, 1.2];
        let prof = PrecisionProfile::known_mean(&sample).unwrap();
        let nodes = prof.window_nodes().unwrap();
        for &phi in &[nodes[1], nodes[2]] {
            let inside = prof.fraser_root(phi * (1.0 + 1e-12)).unwrap().z;
            let outside = prof.fraser_root(phi * (1.0 - 1e-12)).unwrap().z;
            assert!((inside - outside).abs() < 1e-6);
        }
        let at_mle = prof.fraser_root(prof.precision_hat()).unwrap();
        assert!(at_mle.flags.interpolated);
        assert_eq!(at_mle.z_p, 0.0);
        assert!(at_mle.z.abs() < 0.5);
    }

    #[test]
    fn linear_root_gives_normal_density() {
        let grid = RealGrid::linspace(-8.0, 10.0, 181).unwrap();
        let dens = corrected_confidence_density(
            |t| Ok(ModifiedRoot::from_parts(1.0 - t, 1.0 - t)),
            &grid,
            Interval::real_line(),
        )
        .unwrap();
        for &t in grid.points() {
            assert!((dens.eval(t) - normal_pdf(1.0 - t)).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn non_monotone_root_is_rejected() {
        let grid = RealGrid::linspace(-2.0, 2.0, 41).unwrap();
        let err = corrected_confidence_density(
            |t| Ok(ModifiedRoot::from_parts(t * t + 0.1, t * t + 0.1)),
            &grid,
            Interval::real_line(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }
}
