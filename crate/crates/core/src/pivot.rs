//! Pivots with known reference laws, their extended likelihood, confidence
//! statements and parameter-scale confidence densities.
//!
//! A pivot V(θ, Y) has a distribution F that does not depend on θ. At the
//! observed data its realization v = V(θ, y) is a fixed unknown, and the
//! density f(v) of the reference law is the extended likelihood of v. The
//! confidence of {θ : v(θ) ≤ b} is F(b), and for a scalar parameter with a
//! monotone pivot the transformation rule gives the confidence density
//! c(θ; y) = f(v(θ)) |dv/dθ|.
//!
//! Everything here reports *confidence* for an observed set. Coverage is a
//! property of the procedure and is measured by [`crate::harness`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    chisq_cdf, chisq_pdf, chisq_quantile, chisq_sf, f_cdf, f_pdf, f_quantile, find_root_expanding,
    integrate, normal_cdf_unchecked, normal_pdf, normal_quantile, t_cdf, t_pdf, t_quantile,
    Interval, RealGrid, ROOT_TOL,
};

/// Reference law of a pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PivotLaw {
    Normal,
    ChiSq { df: f64 },
    StudentT { df: f64 },
    F { df1: f64, df2: f64 },
    /// Standard normal law applied to a higher-order corrected root.
    CorrectedNormal,
    /// χ²_p law applied to a higher-order corrected deviance.
    CorrectedChiSq { dims: f64 },
}

impl PivotLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal => true,
            PivotLaw::ChiSq { df } | PivotLaw::StudentT { df } => df > 0.0 && df.is_finite(),
            PivotLaw::CorrectedChiSq { dims } => dims > 0.0 && dims.is_finite(),
            PivotLaw::F { df1, df2 } => {
                df1 > 0.0 && df2 > 0.0 && df1.is_finite() && df2.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid pivot law {self}")))
        }
    }

    /// Support of the reference law.
    pub fn support(&self) -> Interval {
        match self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal | PivotLaw::StudentT { .. } => {
                Interval::real_line()
            }
            _ => Interval::positive(),
        }
    }

    /// Density f(v); zero outside the support.
    pub fn density(&self, v: f64) -> f64 {
        if v.is_nan() || !self.support().contains(v) {
            return 0.0;
        }
        let value = match *self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal => Ok(normal_pdf(v)),
            PivotLaw::ChiSq { df } => chisq_pdf(v, df),
            PivotLaw::CorrectedChiSq { dims } => chisq_pdf(v, dims),
            PivotLaw::StudentT { df } => t_pdf(v, df),
            PivotLaw::F { df1, df2 } => f_pdf(v, df1, df2),
        };
        value.unwrap_or(f64::NAN)
    }

    /// Distribution function F(v), with F(−∞) = 0 and F(+∞) = 1.
    pub fn cdf(&self, v: f64) -> f64 {
        if v.is_nan() {
            return f64::NAN;
        }
        if v == f64::INFINITY {
            return 1.0;
        }
        if v == f64::NEG_INFINITY {
            return 0.0;
        }
        let value = match *self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal => Ok(normal_cdf_unchecked(v)),
            PivotLaw::ChiSq { df } => chisq_cdf(v, df),
            PivotLaw::CorrectedChiSq { dims } => chisq_cdf(v, dims),
            PivotLaw::StudentT { df } => t_cdf(v, df),
            PivotLaw::F { df1, df2 } => f_cdf(v, df1, df2),
        };
        value.unwrap_or(f64::NAN)
    }

    /// Upper tail 1 − F(v), computed directly where that avoids cancellation.
    pub fn sf(&self, v: f64) -> f64 {
        match *self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal if v.is_finite() => {
                normal_cdf_unchecked(-v)
            }
            PivotLaw::ChiSq { df } | PivotLaw::CorrectedChiSq { dims: df } if v.is_finite() => {
                chisq_sf(v, df).unwrap_or(f64::NAN)
            }
            _ => 1.0 - self.cdf(v),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        match *self {
            PivotLaw::Normal | PivotLaw::CorrectedNormal => normal_quantile(p),
            PivotLaw::ChiSq { df } => chisq_quantile(p, df),
            PivotLaw::CorrectedChiSq { dims } => chisq_quantile(p, dims),
            PivotLaw::StudentT { df } => t_quantile(p, df),
            PivotLaw::F { df1, df2 } => f_quantile(p, df1, df2),
        }
    }
}

impl fmt::Display for PivotLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PivotLaw::Normal => write!(f, "N(0,1)"),
            PivotLaw::ChiSq { df } => write!(f, "chisq({df})"),
            PivotLaw::StudentT { df } => write!(f, "t({df})"),
            PivotLaw::F { df1, df2 } => write!(f, "F({df1}, {df2})"),
            PivotLaw::CorrectedNormal => write!(f, "corrected N(0,1)"),
            PivotLaw::CorrectedChiSq { dims } => write!(f, "corrected chisq({dims})"),
        }
    }
}

/// Which side of a bound a pivot set lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// {v ≤ b}
    AtMost,
    /// {v ≥ b}
    AtLeast,
}

/// Which endpoint of a one-sided parameter interval is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// θ ≥ endpoint
    Lower,
    /// θ ≤ endpoint
    Upper,
}

/// Declared direction of v(θ) in the scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// Confidence of the pivot set on `side` of `bound`: F(b) or 1 − F(b).
pub fn confidence_of(law: &PivotLaw, bound: f64, side: Side) -> f64 {
    match side {
        Side::AtMost => law.cdf(bound),
        Side::AtLeast => law.sf(bound),
    }
}

/// Right-sided P-value 1 − F_θ(s_obs). Viewed as a function of θ at fixed
/// `s_obs` it is a confidence distribution function.
pub fn pvalue_pivot<F>(sufficient_cdf: F, s_obs: f64, theta: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    1.0 - sufficient_cdf(theta, s_obs)
}

/// f(v) at the realized pivot, with a flag when v falls outside the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedLikelihood {
    pub pivot_value: f64,
    pub value: f64,
    pub boundary: bool,
}

/// The set described by a confidence statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatementSet {
    /// θ ≥ endpoint
    OneSidedLower { endpoint: f64 },
    /// θ ≤ endpoint
    OneSidedUpper { endpoint: f64 },
    /// {θ : v(θ) ≤ bound}
    PivotBall { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStatement {
    pub set: StatementSet,
    pub confidence: f64,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A pivot over a scalar parameter, with the observed data captured inside
/// `value_fn`.
#[derive(Clone)]
pub struct ScalarPivot {
    law: PivotLaw,
    value_fn: ScalarFn,
    jacobian_fn: Option<ScalarFn>,
    monotonicity: Monotonicity,
    domain: Interval,
    center: f64,
}

impl fmt::Debug for ScalarPivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPivot")
            .field("law", &self.law)
            .field("monotonicity", &self.monotonicity)
            .field("domain", &self.domain)
            .field("center", &self.center)
            .field("has_jacobian", &self.jacobian_fn.is_some())
            .finish()
    }
}

impl ScalarPivot {
    /// `center` is a parameter value inside `domain` (usually the estimate)
    /// from which endpoint searches start.
    pub fn new<F>(
        law: PivotLaw,
        domain: Interval,
        monotonicity: Monotonicity,
        center: f64,
        value_fn: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        law.validate()?;
        if !(center > domain.lo && center < domain.hi) {
            return Err(Error::InvalidInput(format!(
                "pivot center {center} lies outside its domain [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        Ok(Self {
            law,
            value_fn: Arc::new(value_fn),
            jacobian_fn: None,
            monotonicity,
            domain,
            center,
        })
    }

    /// Attaches |dv/dθ|.
    pub fn with_jacobian<F>(mut self, jacobian_fn: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.jacobian_fn = Some(Arc::new(jacobian_fn));
        self
    }

    pub fn law(&self) -> PivotLaw {
        self.law
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn value(&self, theta: f64) -> f64 {
        (self.value_fn)(theta)
    }

    pub fn jacobian(&self, theta: f64) -> Option<f64> {
        self.jacobian_fn.as_ref().map(|j| j(theta))
    }

    /// L_e(v; y) = f(v) at v = v(θ).
    pub fn extended_likelihood(&self, theta: f64) -> ExtendedLikelihood {
        let v = self.value(theta);
        let inside = self.domain.contains(theta) && v.is_finite() && {
            let s = self.law.support();
            v > s.lo && v < s.hi
        };
        ExtendedLikelihood {
            pivot_value: v,
            value: if inside { self.law.density(v) } else { 0.0 },
            boundary: !inside,
        }
    }

    /// F(v(θ)), the confidence of {θ' : v(θ') ≤ v(θ)}.
    pub fn confidence_below(&self, theta: f64) -> f64 {
        self.law.cdf(self.value(theta))
    }

    /// Confidence of the parameter interval [a, b].
    pub fn confidence_of_interval(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let fa = self.law.cdf(self.value_clamped(a));
        let fb = self.law.cdf(self.value_clamped(b));
        (fb - fa).abs()
    }

    fn value_clamped(&self, theta: f64) -> f64 {
        // map domain ends to the law's limits so infinite endpoints work
        let s = self.law.support();
        let at_lo = theta <= self.domain.lo;
        let at_hi = theta >= self.domain.hi;
        match (at_lo, at_hi, self.monotonicity) {
            (true, _, Monotonicity::Increasing) | (_, true, Monotonicity::Decreasing) => s.lo,
            (true, _, Monotonicity::Decreasing) | (_, true, Monotonicity::Increasing) => s.hi,
            _ => self.value(theta),
        }
    }

    /// Checks that v is strictly monotone in the declared direction across
    /// the grid points that fall inside the domain.
    pub fn check_monotone(&self, grid: &RealGrid) -> Result<()> {
        let pts: Vec<f64> = grid
            .points()
            .iter()
            .copied()
            .filter(|t| *t > self.domain.lo && *t < self.domain.hi)
            .collect();
        let values: Vec<f64> = pts.iter().map(|&t| self.value(t)).collect();
        for i in 1..pts.len() {
            let ok = match self.monotonicity {
                Monotonicity::Increasing => values[i] > values[i - 1],
                Monotonicity::Decreasing => values[i] < values[i - 1],
            };
            if !ok {
                return Err(Error::ContractViolation(format!(
                    "pivot declared {:?} is not monotone on [{}, {}] (v = {} then {})",
                    self.monotonicity,
                    pts[i - 1],
                    pts[i],
                    values[i - 1],
                    values[i]
                )));
            }
        }
        Ok(())
    }

    /// Confidence density c(θ; y) = f(v(θ)) |dv/dθ| via the transformation rule.
    pub fn parameter_density(&self, grid: &RealGrid) -> Result<ConfidenceDensity> {
        let jac = self.jacobian_fn.clone().ok_or_else(|| {
            Error::Unsupported("this pivot has no Jacobian, so no parameter-scale density".into())
        })?;
        self.check_monotone(grid)?;
        let value_fn = self.value_fn.clone();
        let law = self.law;
        let domain = self.domain;
        let density = move |theta: f64| {
            if !(theta > domain.lo && theta < domain.hi) {
                return 0.0;
            }
            let v = value_fn(theta);
            if !v.is_finite() {
                return 0.0;
            }
            law.density(v) * jac(theta).abs()
        };
        Ok(ConfidenceDensity::new(density, self.domain))
    }

    /// Parameter value at which v(θ) equals `target`.
    pub fn solve_for(&self, target: f64) -> Result<f64> {
        let (lo, hi) = self.initial_bracket();
        let tol = ROOT_TOL * self.center.abs().max(1.0) * 1e-3;
        find_root_expanding(|t| self.value(t) - target, (lo, hi), tol, self.domain)
    }

    fn initial_bracket(&self) -> (f64, f64) {
        let c = self.center;
        match (self.domain.lo.is_finite(), self.domain.hi.is_finite()) {
            (true, _) => {
                let gap = c - self.domain.lo;
                (self.domain.lo + 0.5 * gap, c + gap)
            }
            (false, true) => {
                let gap = self.domain.hi - c;
                (c - gap, self.domain.hi - 0.5 * gap)
            }
            (false, false) => {
                let w = c.abs().max(1.0);
                (c - w, c + w)
            }
        }
    }

    /// Endpoint of the one-sided interval with the given confidence level:
    /// C(θ ≥ endpoint) = level for [`Bound::Lower`], C(θ ≤ endpoint) = level
    /// for [`Bound::Upper`].
    pub fn interval_endpoint(&self, level: f64, bound: Bound) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("confidence level must be in (0, 1), got {level}")));
        }
        // {θ ≥ t} is {v ≤ v(t)} for a decreasing pivot and {v ≥ v(t)} otherwise
        let lower_tail = matches!(
            (bound, self.monotonicity),
            (Bound::Lower, Monotonicity::Decreasing) | (Bound::Upper, Monotonicity::Increasing)
        );
        let p = if lower_tail { level } else { 1.0 - level };
        let target = self.law.quantile(p)?;
        self.solve_for(target)
    }

    pub fn one_sided_statement(&self, level: f64, bound: Bound) -> Result<ConfidenceStatement> {
        let endpoint = self.interval_endpoint(level, bound)?;
        let set = match bound {
            Bound::Lower => StatementSet::OneSidedLower { endpoint },
            Bound::Upper => StatementSet::OneSidedUpper { endpoint },
        };
        Ok(ConfidenceStatement {
            set,
            confidence: level,
        })
    }

    /// The parameter set {θ : v(θ) ≤ b} intersected with the domain.
    pub fn set_below(&self, b: f64) -> Result<Interval> {
        let support = self.law.support();
        if b >= support.hi {
            return Ok(self.domain);
        }
        if b <= support.lo {
            return Err(Error::Domain(format!("the set {{v <= {b}}} is empty")));
        }
        let t = self.solve_for(b)?;
        Ok(match self.monotonicity {
            Monotonicity::Decreasing => Interval {
                lo: t,
                hi: self.domain.hi,
            },
            Monotonicity::Increasing => Interval {
                lo: self.domain.lo,
                hi: t,
            },
        })
    }
}

/// A pivot over a vector parameter. Only pivot-ball statements {β : v(β) ≤ b}
/// are available; no density is assigned on the parameter space.
#[derive(Clone)]
pub struct BallPivot {
    law: PivotLaw,
    dims: usize,
    value_fn: VectorFn,
}

impl fmt::Debug for BallPivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallPivot")
            .field("law", &self.law)
            .field("dims", &self.dims)
            .finish()
    }
}

impl BallPivot {
    pub fn new<F>(law: PivotLaw, dims: usize, value_fn: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        law.validate()?;
        Ok(Self {
            law,
            dims,
            value_fn: Arc::new(value_fn),
        })
    }

    pub fn law(&self) -> PivotLaw {
        self.law
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn value(&self, beta: &[f64]) -> Result<f64> {
        if beta.len() != self.dims {
            return Err(Error::InvalidInput(format!(
                "expected a parameter of length {}, got {}",
                self.dims,
                beta.len()
            )));
        }
        Ok((self.value_fn)(beta))
    }

    pub fn extended_likelihood(&self, beta: &[f64]) -> Result<ExtendedLikelihood> {
        let v = self.value(beta)?;
        let s = self.law.support();
        let inside = v.is_finite() && v > s.lo && v < s.hi;
        Ok(ExtendedLikelihood {
            pivot_value: v,
            value: if inside { self.law.density(v) } else { 0.0 },
            boundary: !inside,
        })
    }

    /// C(β ∈ {v ≤ bound}) = F(bound).
    pub fn ball_statement(&self, bound: f64) -> ConfidenceStatement {
        ConfidenceStatement {
            set: StatementSet::PivotBall { bound },
            confidence: confidence_of(&self.law, bound, Side::AtMost),
        }
    }

    /// The ball radius carrying confidence `level`.
    pub fn ball_bound(&self, level: f64) -> Result<f64> {
        self.law.quantile(level)
    }

    pub fn contains(&self, beta: &[f64], bound: f64) -> Result<bool> {
        Ok(self.value(beta)? <= bound)
    }

    pub fn parameter_density(&self) -> Result<ConfidenceDensity> {
        Err(Error::Unsupported(
            "no confidence density on a multi-dimensional parameter space (Pitman's restriction); \
             use pivot-ball statements instead"
                .into(),
        ))
    }
}

/// A confidence density over a scalar parameter.
#[derive(Clone)]
pub struct ConfidenceDensity {
    density_fn: ScalarFn,
    support: Interval,
}

impl fmt::Debug for ConfidenceDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConfidenceDensity")
            .field("support", &self.support)
            .finish()
    }
}

impl ConfidenceDensity {
    pub fn new<F>(density_fn: F, support: Interval) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            density_fn: Arc::new(density_fn),
            support,
        }
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    /// c(θ; y); zero outside the support.
    pub fn eval(&self, theta: f64) -> f64 {
        if theta < self.support.lo || theta > self.support.hi {
            0.0
        } else {
            (self.density_fn)(theta)
        }
    }

    /// ∫ c over `set` ∩ support.
    pub fn integrate_over(&self, set: Interval, tol: f64) -> Result<f64> {
        match self.support.intersect(&set) {
            Some(range) => integrate(|t| self.eval(t), range, tol),
            None => Ok(0.0),
        }
    }

    /// Total mass over the support.
    pub fn mass(&self, tol: f64) -> Result<f64> {
        self.integrate_over(self.support, tol)
    }

    pub fn on_grid(&self, grid: &RealGrid) -> Vec<(f64, f64)> {
        grid.points().iter().map(|&t| (t, self.eval(t))).collect()
    }
}
