//! Normal linear regression Y = Xβ + e, e ~ N(0, φI), and its three exact
//! pivots: χ²_{n−p} for the variance, Student t_{n−p} for a contrast bᵀβ and
//! F_{p, n−p} for the whole coefficient vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{chisq_pdf, Interval};
use crate::pivot::{BallPivot, Monotonicity, PivotLaw, ScalarPivot};

/// Observed response and design.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    /// Validates shape, finiteness and full column rank of `x`.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "response has {} rows but the design has {n}",
                y.len()
            )));
        }
        if p == 0 || n <= p {
            return Err(Error::InvalidInput(format!(
                "need n > p >= 1, got n = {n}, p = {p}"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("response row {i} is not finite")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("design matrix has non-finite entries".into()));
        }
        check_rank(&x)?;
        Ok(Self { y, x })
    }

    pub fn from_rows(y: &[f64], rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("design rows have unequal lengths".into()));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(DVector::from_column_slice(y), x)
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Fails on the first nonpositive response, naming its row.
    pub fn require_positive_response(&self) -> Result<()> {
        match self.y.iter().position(|v| *v <= 0.0) {
            Some(i) => Err(Error::Domain(format!(
                "response must be strictly positive; row {i} has value {}",
                self.y[i]
            ))),
            None => Ok(()),
        }
    }

    /// Same design, new response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::InvalidInput("response length does not match design".into()));
        }
        Ok(Self {
            y,
            x: self.x.clone(),
        })
    }
}

/// Rank check: singular values below eps·max(n, p)·σ_max count as zero.
fn check_rank(x: &DMatrix<f64>) -> Result<()> {
    let (n, p) = x.shape();
    let sv = x.clone().svd(false, false).singular_values;
    let largest = sv.max();
    let smallest = sv.min();
    let tolerance = f64::EPSILON * n.max(p) as f64 * largest;
    if !(largest > 0.0) || smallest <= tolerance {
        return Err(Error::SingularDesign {
            smallest,
            tolerance,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub beta_hat: DVector<f64>,
    /// Residual variance with divisor n − p.
    pub phi_hat_m: f64,
    pub residual_ss: f64,
    pub xtx: DMatrix<f64>,
    pub xtx_inv: DMatrix<f64>,
    pub n: usize,
    pub p: usize,
    pub df: usize,
}

/// Least squares through a QR decomposition of X.
pub fn fit_ols(data: &Dataset) -> Result<LinearFit> {
    let (n, p) = (data.n(), data.p());
    let qr = data.x.clone().qr();
    let qty = qr.q().transpose() * &data.y;
    let beta_hat = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularDesign {
            smallest: 0.0,
            tolerance: 0.0,
        })?;
    let residuals = &data.y - &data.x * &beta_hat;
    let mut residual_ss = residuals.norm_squared();
    // exact fits leave only rounding noise in the residuals
    let scale = f64::EPSILON * n as f64 * data.y.amax();
    if residual_ss <= scale * scale {
        residual_ss = 0.0;
    }
    let xtx = data.x.transpose() * &data.x;
    let xtx_inv = xtx
        .clone()
        .cholesky()
        .ok_or(Error::SingularDesign {
            smallest: 0.0,
            tolerance: 0.0,
        })?
        .inverse();
    let df = n - p;
    Ok(LinearFit {
        beta_hat,
        phi_hat_m: residual_ss / df as f64,
        residual_ss,
        xtx,
        xtx_inv,
        n,
        p,
        df,
    })
}

/// λ = bᵀβ with its estimate and k = bᵀ(XᵀX)⁻¹b.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    pub b: DVector<f64>,
    pub lambda_hat: f64,
    pub k: f64,
}

impl Contrast {
    pub fn new(fit: &LinearFit, b: DVector<f64>) -> Result<Self> {
        if b.len() != fit.p {
            return Err(Error::InvalidInput(format!(
                "contrast has length {} but the model has {} coefficients",
                b.len(),
                fit.p
            )));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidInput("contrast vector must be nonzero".into()));
        }
        let k = (b.transpose() * &fit.xtx_inv * &b)[(0, 0)];
        let lambda_hat = b.dot(&fit.beta_hat);
        Ok(Self { b, lambda_hat, k })
    }
}

impl LinearFit {
    fn require_residual_variance(&self) -> Result<()> {
        if self.phi_hat_m > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateFit(
                "residual variance is zero (perfect fit); no confidence statement is possible"
                    .into(),
            ))
        }
    }

    /// v = (n − p)φ̂_M/φ ~ χ²_{n−p}, with |dv/dφ| = v/φ.
    pub fn variance_pivot(&self) -> Result<ScalarPivot> {
        self.require_residual_variance()?;
        let rss = self.residual_ss;
        Ok(ScalarPivot::new(
            PivotLaw::ChiSq { df: self.df as f64 },
            Interval::positive(),
            Monotonicity::Decreasing,
            self.phi_hat_m,
            move |phi| rss / phi,
        )?
        .with_jacobian(move |phi| rss / (phi * phi)))
    }

    /// v = (λ̂ − λ)/√(kφ̂_M) ~ t_{n−p}, with |dv/dλ| = 1/√(kφ̂_M).
    pub fn contrast_pivot(&self, contrast: &Contrast) -> Result<ScalarPivot> {
        self.require_residual_variance()?;
        let lambda_hat = contrast.lambda_hat;
        let scale = (contrast.k * self.phi_hat_m).sqrt();
        Ok(ScalarPivot::new(
            PivotLaw::StudentT { df: self.df as f64 },
            Interval::real_line(),
            Monotonicity::Decreasing,
            lambda_hat,
            move |lambda| (lambda_hat - lambda) / scale,
        )?
        .with_jacobian(move |_| 1.0 / scale))
    }

    /// With φ known, v = (λ̂ − λ)/√(kφ) ~ N(0, 1).
    pub fn contrast_pivot_known_variance(
        &self,
        contrast: &Contrast,
        variance: f64,
    ) -> Result<ScalarPivot> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::Domain(format!("variance must be positive, got {variance}")));
        }
        let lambda_hat = contrast.lambda_hat;
        let scale = (contrast.k * variance).sqrt();
        Ok(ScalarPivot::new(
            PivotLaw::Normal,
            Interval::real_line(),
            Monotonicity::Decreasing,
            lambda_hat,
            move |lambda| (lambda_hat - lambda) / scale,
        )?
        .with_jacobian(move |_| 1.0 / scale))
    }

    /// v = (β̂ − β)ᵀXᵀX(β̂ − β)/(pφ̂_M) ~ F_{p, n−p}.
    pub fn coefficient_ball_pivot(&self) -> Result<BallPivot> {
        self.require_residual_variance()?;
        let beta_hat = self.beta_hat.clone();
        let xtx = self.xtx.clone();
        let denom = self.p as f64 * self.phi_hat_m;
        BallPivot::new(
            PivotLaw::F {
                df1: self.p as f64,
                df2: self.df as f64,
            },
            self.p,
            move |beta| {
                let d = &beta_hat - DVector::from_column_slice(beta);
                (d.transpose() * &xtx * &d)[(0, 0)] / denom
            },
        )
    }

    /// Likelihood of φ from the sampling density of φ̂_M,
    /// f_φ(φ̂_M) = {(n − p)/φ} f_{χ²}((n − p)φ̂_M/φ).
    pub fn variance_likelihood(&self, phi: f64) -> Result<f64> {
        self.require_residual_variance()?;
        let df = self.df as f64;
        Ok(df / phi * chisq_pdf(self.residual_ss / phi, df)?)
    }
}
