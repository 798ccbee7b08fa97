//! Gamma regression with log link.
//!
//! With precision φ (Var y = μ²/φ) the log-likelihood, up to a term free of
//! the parameters, is
//!
//! ```text
//! ℓ(β, φ) = −φ Σ b_i(β) − n k(φ),
//! b_i(β)  = (y_i − μ_i)/μ_i − log(y_i/μ_i),   μ_i = exp(x_iᵀβ),
//! k(φ)    = lgamma(φ) − φ log φ + φ.
//! ```
//!
//! β̂ does not depend on φ, so it comes from IRLS alone; φ̂ then solves
//! n k′(φ̂) = −Σ b_i(β̂).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::Dataset;
use crate::numerics::{
    digamma_minus_log, find_root_expanding, ln_gamma_unchecked, stirling_tail,
    trigamma_minus_reciprocal, Interval,
};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const IRLS_MAX_ITER: usize = 50;
const IRLS_REL_TOL: f64 = 1e-12;
const POLISH_MAX_ITER: usize = 50;
const SCORE_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;
/// Mean deviance contribution below which the fit is treated as exact.
const PERFECT_FIT_MEAN_B: f64 = 1e-24;

/// k(φ) = lgamma(φ) − φ log φ + φ.
pub fn kappa(phi: f64) -> f64 {
    if phi >= 10.0 {
        // the φ log φ terms cancel analytically in the Stirling form
        -0.5 * phi.ln() + LN_SQRT_2PI + stirling_tail(phi)
    } else {
        ln_gamma_unchecked(phi) - phi * phi.ln() + phi
    }
}

/// k′(φ) = digamma(φ) − log φ, negative and increasing to 0.
pub fn kappa_prime(phi: f64) -> f64 {
    digamma_minus_log(phi).unwrap_or(f64::NAN)
}

/// k″(φ) = trigamma(φ) − 1/φ, strictly positive.
pub fn kappa_second(phi: f64) -> f64 {
    trigamma_minus_reciprocal(phi).unwrap_or(f64::NAN)
}

/// b_i = r − log(1 + r) with r = (y − μ)/μ; nonnegative, zero iff y = μ.
pub fn deviance_term(y: f64, mu: f64) -> f64 {
    let r = (y - mu) / mu;
    r - r.ln_1p()
}

pub fn fitted_means(x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
    (x * beta).map(f64::exp)
}

/// Σ b_i(β).
pub fn sum_deviance_terms(data: &Dataset, beta: &DVector<f64>) -> f64 {
    let mu = fitted_means(data.x(), beta);
    data.y()
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| deviance_term(y, m))
        .sum()
}

/// ℓ(β, φ) = −φ Σ b_i(β) − n k(φ).
pub fn gamma_loglik(beta: &DVector<f64>, precision: f64, data: &Dataset) -> Result<f64> {
    data.require_positive_response()?;
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::Domain(format!("precision must be positive, got {precision}")));
    }
    if beta.len() != data.p() {
        return Err(Error::InvalidInput("coefficient length does not match design".into()));
    }
    Ok(loglik_from_sum(sum_deviance_terms(data, beta), precision, data.n()))
}

pub(crate) fn loglik_from_sum(sum_b: f64, precision: f64, n: usize) -> f64 {
    -precision * sum_b - n as f64 * kappa(precision)
}

/// Solves −k′(φ) = `mean_b` for φ. The left side decreases strictly from +∞
/// to 0, so the root is unique for every positive `mean_b`.
pub fn solve_precision(mean_b: f64) -> Result<f64> {
    if !mean_b.is_finite() || mean_b < 0.0 {
        return Err(Error::Domain(format!("mean deviance term must be >= 0, got {mean_b}")));
    }
    if mean_b <= PERFECT_FIT_MEAN_B {
        return Err(Error::DegenerateFit(
            "the deviance terms vanish (perfect fit), so the precision estimate is infinite"
                .into(),
        ));
    }
    // k′(φ) ≈ −1/(2φ) for large φ gives the starting point
    let t0 = (0.5 / mean_b).ln();
    let g = |t: f64| -kappa_prime(t.exp()) - mean_b;
    let t = find_root_expanding(g, (t0 - 1.0, t0 + 1.0), 1e-15, Interval::real_line())?;
    let mut phi = t.exp();
    for _ in 0..3 {
        let step = (kappa_prime(phi) + mean_b) / kappa_second(phi);
        let next = phi - step;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        phi = next;
    }
    Ok(phi)
}

/// Result of the mean-model iterations, before the precision is estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFit {
    pub beta_hat: DVector<f64>,
    pub mu_hat: DVector<f64>,
    pub sum_b: f64,
    pub iterations: usize,
    /// Σ b_i after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    pub beta_hat: DVector<f64>,
    pub precision_hat: f64,
    pub mu_hat: DVector<f64>,
    pub loglik: f64,
    pub sum_b: f64,
    pub n: usize,
    pub p: usize,
    pub iterations: usize,
}

/// Sup-norm of the β score Xᵀ(y/μ − 1).
pub fn beta_score_norm(data: &Dataset, beta: &DVector<f64>) -> f64 {
    let mu = fitted_means(data.x(), beta);
    let r = DVector::from_iterator(
        data.n(),
        data.y().iter().zip(mu.iter()).map(|(y, m)| y / m - 1.0),
    );
    (data.x().transpose() * r).amax()
}

fn least_squares(x: &DMatrix<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = x.clone().qr();
    qr.r()
        .solve_upper_triangular(&(qr.q().transpose() * z))
        .ok_or_else(|| Error::SingularDesign {
            smallest: 0.0,
            tolerance: 0.0,
        })
}

/// Fits β by IRLS. Under the log link the working weights are the identity,
/// so each step is an ordinary least-squares solve of the working response
/// η + (y − μ)/μ. Steps that increase Σ b_i are halved. The linear-rate
/// IRLS phase is followed by observed-information steps (working weights
/// y/μ) that drive the score to rounding level.
pub fn fit_mean(data: &Dataset, init: Option<&DVector<f64>>) -> Result<MeanFit> {
    data.require_positive_response()?;
    let x = data.x();
    let y = data.y();
    let mut beta = match init {
        Some(b) if b.len() == data.p() => b.clone(),
        Some(_) => {
            return Err(Error::InvalidInput("initial coefficients have the wrong length".into()))
        }
        None => least_squares(x, &y.map(f64::ln))?,
    };
    let mut sum_b = sum_deviance_terms(data, &beta);
    let mut trace = vec![sum_b];
    let mut iterations = 0;

    // near the optimum Σ b_i is flat to rounding, so Newton steps get slack
    let try_step = |beta: &DVector<f64>, proposal: DVector<f64>, current: f64, slack: f64| {
        let mut step = proposal - beta;
        for _ in 0..MAX_HALVINGS {
            let candidate = beta + &step;
            let value = sum_deviance_terms(data, &candidate);
            if value.is_finite() && value <= current + slack {
                return Some((candidate, value));
            }
            step *= 0.5;
        }
        None
    };

    for _ in 0..IRLS_MAX_ITER {
        let eta = x * &beta;
        let mu = eta.map(f64::exp);
        let irls_working_response = DVector::from_iterator(
            data.n(),
            (0..data.n()).map(|i| eta[i] + (y[i] - mu[i]) / mu[i]),
        );
        let proposal = least_squares(x, &irls_working_response)?;
        iterations += 1;
        let Some((next, value)) = try_step(&beta, proposal, sum_b, 0.0) else {
            break;
        };
        let change = (sum_b - value).abs() / sum_b.abs().max(f64::MIN_POSITIVE);
        beta = next;
        sum_b = value;
        trace.push(sum_b);
        if change <= IRLS_REL_TOL {
            break;
        }
    }

    for _ in 0..POLISH_MAX_ITER {
        let score = beta_score_norm(data, &beta);
        if score <= 1e-3 * SCORE_TOL {
            break;
        }
        let mu = fitted_means(x, &beta);
        let w = DVector::from_iterator(data.n(), (0..data.n()).map(|i| y[i] / mu[i]));
        let grad = x.transpose() * DVector::from_iterator(data.n(), (0..data.n()).map(|i| w[i] - 1.0));
        let mut info = x.transpose() * DMatrix::from_diagonal(&w) * x;
        info.fill_upper_triangle_with_lower_triangle();
        let Some(chol) = info.cholesky() else { break };
        let proposal = &beta + chol.solve(&grad);
        iterations += 1;
        let slack = 16.0 * data.n() as f64 * f64::EPSILON * sum_b;
        let Some((next, value)) = try_step(&beta, proposal, sum_b, slack) else {
            break;
        };
        beta = next;
        sum_b = value;
        trace.push(sum_b);
    }

    let score = beta_score_norm(data, &beta);
    if !(score <= SCORE_TOL) {
        return Err(Error::Convergence { iterations, trace });
    }
    Ok(MeanFit {
        mu_hat: fitted_means(x, &beta),
        beta_hat: beta,
        sum_b,
        iterations,
        trace,
    })
}

/// Maximum likelihood fit of (β, φ).
pub fn fit_irls(data: &Dataset, init: Option<&DVector<f64>>) -> Result<GammaFit> {
    let mean = fit_mean(data, init)?;
    GammaFit::from_mean_fit(mean, data.n())
}

impl GammaFit {
    pub fn from_mean_fit(mean: MeanFit, n: usize) -> Result<Self> {
        let precision_hat = solve_precision(mean.sum_b / n as f64)?;
        Ok(Self {
            p: mean.beta_hat.len(),
            loglik: loglik_from_sum(mean.sum_b, precision_hat, n),
            beta_hat: mean.beta_hat,
            precision_hat,
            mu_hat: mean.mu_hat,
            sum_b: mean.sum_b,
            n,
            iterations: mean.iterations,
        })
    }

    /// n k′(φ̂) + Σ b_i(β̂).
    pub fn precision_score(&self) -> f64 {
        self.n as f64 * kappa_prime(self.precision_hat) + self.sum_b
    }

    /// n k″(φ̂), the observed information for φ.
    pub fn precision_information(&self) -> f64 {
        self.n as f64 * kappa_second(self.precision_hat)
    }
}

/// What a profile deviance was evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfilePoint {
    Precision(f64),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileDeviance {
    pub d_p: f64,
    pub at: ProfilePoint,
    pub dims: usize,
}

/// 2n{(φ̂ − φ)k′(φ̂) + k(φ) − k(φ̂)} for a precision profile from n
/// observations with MLE φ̂.
pub fn precision_deviance(n: usize, precision_hat: f64, precision: f64) -> f64 {
    let d = 2.0
        * n as f64
        * ((precision_hat - precision) * kappa_prime(precision_hat) + kappa(precision)
            - kappa(precision_hat));
    d.max(0.0)
}

/// Profile deviance of the precision; the profile estimate of β equals β̂
/// at every φ.
pub fn profile_deviance_precision(fit: &GammaFit, precision: f64) -> Result<ProfileDeviance> {
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::Domain(format!("precision must be positive, got {precision}")));
    }
    Ok(ProfileDeviance {
        d_p: precision_deviance(fit.n, fit.precision_hat, precision),
        at: ProfilePoint::Precision(precision),
        dims: 1,
    })
}

/// φ̃(β), solving n k′(φ̃) = −Σ b_i(β).
pub fn profile_precision(data: &Dataset, beta: &DVector<f64>) -> Result<f64> {
    solve_precision(sum_deviance_terms(data, beta) / data.n() as f64)
}

/// 2{ℓ_p(β̂) − ℓ_p(β)} = 2n[φ̂k′(φ̂) − k(φ̂) − φ̃k′(φ̃) + k(φ̃)] with
/// φ̃ = φ̃(β), since ℓ_p(β) = n{φ̃k′(φ̃) − k(φ̃)}.
pub fn beta_deviance_from_precisions(n: usize, precision_hat: f64, precision_tilde: f64) -> f64 {
    let term = |phi: f64| phi * kappa_prime(phi) - kappa(phi);
    (2.0 * n as f64 * (term(precision_hat) - term(precision_tilde))).max(0.0)
}

/// Profile deviance of the coefficient vector.
pub fn profile_deviance_beta(
    data: &Dataset,
    fit: &GammaFit,
    beta: &DVector<f64>,
) -> Result<ProfileDeviance> {
    if beta.len() != fit.p {
        return Err(Error::InvalidInput("coefficient length does not match the fit".into()));
    }
    let precision_tilde = profile_precision(data, beta)?;
    Ok(ProfileDeviance {
        d_p: beta_deviance_from_precisions(fit.n, fit.precision_hat, precision_tilde),
        at: ProfilePoint::Coefficients(beta.iter().copied().collect()),
        dims: fit.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviance_term_is_zero_only_at_mean() {
        assert_eq!(deviance_term(2.0, 2.0), 0.0);
        assert!(deviance_term(1.0, 3.0) > 0.0);
        assert!(deviance_term(3.0, 1.0) > 0.0);
        let e = std::f64::consts::E;
        assert!((deviance_term(1.0, e) - 1.0 / e).abs() < 1e-15);
    }

    #[test]
    fn kappa_is_continuous_across_stirling_switch() {
        let a = kappa(10.0 - 1e-10);
        let b = kappa(10.0);
        assert!((a - b).abs() < 1e-10);
        let direct = ln_gamma_unchecked(10.0) - 10.0 * 10f64.ln() + 10.0;
        assert!((b - direct).abs() < 1e-13);
    }

    #[test]
    fn kappa_derivatives_have_expected_signs() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let phi = 0.05 * i as f64 * i as f64;
            let kp = kappa_prime(phi);
            assert!(kp < 0.0);
            assert!(kp > prev);
            assert!(kappa_second(phi) > 0.0);
            prev = kp;
        }
    }

    #[test]
    fn precision_solver_rejects_perfect_fit() {
        assert!(matches!(solve_precision(0.0), Err(Error::DegenerateFit(_))));
        assert!(solve_precision(-1.0).is_err());
        for &m in &[1e-8, 1e-3, 0.1, 1.0, 30.0] {
            let phi = solve_precision(m).unwrap();
            assert!((kappa_prime(phi) + m).abs() < 1e-14 * m.max(1.0) + 1e-15, "m={m}");
        }
    }

    #[test]
    fn profile_deviance_zero_at_mle() {
        assert_eq!(precision_deviance(7, 3.2, 3.2), 0.0);
        assert_eq!(beta_deviance_from_precisions(7, 3.2, 3.2), 0.0);
    }
}
