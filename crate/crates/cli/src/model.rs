//! Fitted models as they are written to and read back from JSON, and the
//! scalar targets they support.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pivotal::gamma::{fit_irls, kappa, GammaFit};
use pivotal::higher_order::{
    corrected_confidence_density, signed_root, ModifiedRoot, PrecisionProfile,
};
use pivotal::linear::{fit_ols, Contrast, Dataset, LinearFit};
use pivotal::numerics::{Interval, RealGrid};
use pivotal::pivot::{ConfidenceDensity, Monotonicity, PivotLaw, ScalarPivot};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::table::CsvTable;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Normal,
    Gamma,
    GammaKnownMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Exact,
    FirstOrder,
    Fraser,
    Skovgaard,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Variance,
    Contrast(Vec<f64>),
    Precision,
}

impl Target {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "variance" => Ok(Target::Variance),
            "precision" => Ok(Target::Precision),
            _ => {
                let Some(rest) = s.strip_prefix("contrast:") else {
                    return Err(CliError::Usage(format!(
                        "unknown target {s:?}; expected variance, precision or contrast:b1,b2,..."
                    )));
                };
                let b = rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("cannot parse contrast {rest:?}")))?;
                Ok(Target::Contrast(b))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target::Variance => "variance".into(),
            Target::Precision => "precision".into(),
            Target::Contrast(b) => format!(
                "contrast:{}",
                b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

pub const VALID_PAIRS: &str = "valid combinations: --model normal with --target variance or \
contrast:b1,... and --method exact; --model gamma with --target precision and --method \
first_order, fraser or skovgaard; --model gamma-known-mean with --target precision and \
--method first_order or fraser";

pub fn arg_name<T: clap::ValueEnum>(v: T) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

pub fn default_method(model: ModelArg) -> MethodArg {
    match model {
        ModelArg::Normal => MethodArg::Exact,
        _ => MethodArg::Fraser,
    }
}

pub fn check_pair(model: ModelArg, target: &Target, method: MethodArg) -> Result<(), CliError> {
    let ok = match (model, target, method) {
        (ModelArg::Normal, Target::Variance | Target::Contrast(_), MethodArg::Exact) => true,
        (ModelArg::Gamma, Target::Precision, MethodArg::FirstOrder | MethodArg::Fraser | MethodArg::Skovgaard) => true,
        (ModelArg::GammaKnownMean, Target::Precision, MethodArg::FirstOrder | MethodArg::Fraser) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--model {} with --target {} and --method {} is not available; {VALID_PAIRS}",
            arg_name(model),
            target.name(),
            arg_name(method)
        )))
    }
}

/// Which columns make up the model.
#[derive(Debug, Clone)]
pub struct Columns {
    pub response: String,
    pub design: Vec<String>,
    pub intercept: bool,
}

impl Columns {
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.intercept {
            out.push("(intercept)".to_string());
        }
        out.extend(self.design.iter().cloned());
        out
    }
}

pub fn response(table: &CsvTable, cols: &Columns) -> Result<Vec<f64>, CliError> {
    table.column(&cols.response)
}

pub fn require_positive(y: &[f64]) -> Result<(), CliError> {
    if let Some(i) = y.iter().position(|v| *v <= 0.0) {
        return Err(CliError::NonPositive(format!(
            "gamma response must be strictly positive; data row {} (line {}) has value {}",
            i + 1,
            i + 2,
            y[i]
        )));
    }
    Ok(())
}

pub fn dataset(table: &CsvTable, cols: &Columns) -> Result<Dataset, CliError> {
    let y = response(table, cols)?;
    let idx = cols
        .design
        .iter()
        .map(|c| table.column_index(c))
        .collect::<Result<Vec<_>, _>>()?;
    let p = idx.len() + usize::from(cols.intercept);
    if p == 0 {
        return Err(CliError::Usage(
            "the design is empty; pass --intercept and/or --design columns".into(),
        ));
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, p, |i, j| match (cols.intercept, j) {
        (true, 0) => 1.0,
        (true, j) => table.rows[i][idx[j - 1]],
        (false, j) => table.rows[i][idx[j]],
    });
    Ok(Dataset::new(DVector::from_vec(y), x)?)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], p: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(CliError::Data(format!("fit file: {field} must be {p}x{p}")));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalFitRecord {
    pub schema_version: u32,
    pub model: ModelArg,
    pub n: usize,
    pub p: usize,
    pub df: usize,
    pub columns: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub residual_ss: f64,
    pub phi_hat_m: f64,
    pub loglik: Option<f64>,
    pub xtx: Vec<Vec<f64>>,
    pub xtx_inv: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl NormalFitRecord {
    pub fn from_fit(fit: &LinearFit, columns: Vec<String>) -> Self {
        let n = fit.n as f64;
        let mut warnings = Vec::new();
        let loglik = if fit.residual_ss > 0.0 {
            Some(-0.5 * n * ((2.0 * std::f64::consts::PI * fit.residual_ss / n).ln() + 1.0))
        } else {
            warnings.push(
                "degenerate fit: residual variance is zero (perfect fit); no confidence statement is possible"
                    .to_string(),
            );
            None
        };
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelArg::Normal,
            n: fit.n,
            p: fit.p,
            df: fit.df,
            columns,
            beta_hat: fit.beta_hat.iter().copied().collect(),
            residual_ss: fit.residual_ss,
            phi_hat_m: fit.phi_hat_m,
            loglik,
            xtx: to_rows(&fit.xtx),
            xtx_inv: to_rows(&fit.xtx_inv),
            warnings,
        }
    }

    pub fn to_fit(&self) -> Result<LinearFit, CliError> {
        if self.beta_hat.len() != self.p || self.df + self.p != self.n {
            return Err(CliError::Data("fit file: inconsistent n, p, df or beta_hat".into()));
        }
        Ok(LinearFit {
            beta_hat: DVector::from_vec(self.beta_hat.clone()),
            phi_hat_m: self.phi_hat_m,
            residual_ss: self.residual_ss,
            xtx: from_rows(&self.xtx, self.p, "xtx")?,
            xtx_inv: from_rows(&self.xtx_inv, self.p, "xtx_inv")?,
            n: self.n,
            p: self.p,
            df: self.df,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaFitRecord {
    pub schema_version: u32,
    pub model: ModelArg,
    pub n: usize,
    pub p: usize,
    pub columns: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub precision_hat: f64,
    pub loglik: f64,
    pub sum_b: f64,
    /// Quadratic form entering the Skovgaard precision factor.
    pub quad_form: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl GammaFitRecord {
    pub fn from_fit(fit: &GammaFit, quad_form: f64, columns: Vec<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelArg::Gamma,
            n: fit.n,
            p: fit.p,
            columns,
            beta_hat: fit.beta_hat.iter().copied().collect(),
            precision_hat: fit.precision_hat,
            loglik: fit.loglik,
            sum_b: fit.sum_b,
            quad_form,
            iterations: fit.iterations,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownMeanFitRecord {
    pub schema_version: u32,
    pub model: ModelArg,
    pub n: usize,
    pub precision_hat: f64,
    pub mean_b: f64,
    pub loglik: f64,
    pub warnings: Vec<String>,
}

/// Any fit, as it appears in a fit JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitRecord {
    Normal(NormalFitRecord),
    Gamma(GammaFitRecord),
    KnownMean(KnownMeanFitRecord),
}

impl FitRecord {
    pub fn model(&self) -> ModelArg {
        match self {
            FitRecord::Normal(r) => r.model,
            FitRecord::Gamma(r) => r.model,
            FitRecord::KnownMean(r) => r.model,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            FitRecord::Normal(r) => &r.warnings,
            FitRecord::Gamma(r) => &r.warnings,
            FitRecord::KnownMean(r) => &r.warnings,
        }
    }

    pub fn read(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("fit file {}: {e}", path.display())))?;
        let model = value.get("model").and_then(|m| m.as_str()).unwrap_or("");
        let parsed = match model {
            "normal" => serde_json::from_value(value).map(FitRecord::Normal),
            "gamma" => serde_json::from_value(value).map(FitRecord::Gamma),
            "gamma_known_mean" => serde_json::from_value(value).map(FitRecord::KnownMean),
            other => {
                return Err(CliError::Data(format!(
                    "fit file {}: unknown model {other:?}",
                    path.display()
                )))
            }
        };
        parsed.map_err(|e| CliError::Data(format!("fit file {}: {e}", path.display())))
    }

    /// Fits `model` to the table.
    pub fn fit(table: &CsvTable, model: ModelArg, cols: &Columns) -> Result<Self, CliError> {
        match model {
            ModelArg::Normal => {
                let data = dataset(table, cols)?;
                let fit = fit_ols(&data)?;
                Ok(FitRecord::Normal(NormalFitRecord::from_fit(&fit, cols.names())))
            }
            ModelArg::Gamma => {
                require_positive(&response(table, cols)?)?;
                let data = dataset(table, cols)?;
                let fit = fit_irls(&data, None)?;
                let prof = PrecisionProfile::from_fit(&data, &fit)?;
                Ok(FitRecord::Gamma(GammaFitRecord::from_fit(
                    &fit,
                    prof.quad_form(),
                    cols.names(),
                )))
            }
            ModelArg::GammaKnownMean => {
                let y = response(table, cols)?;
                require_positive(&y)?;
                let prof = PrecisionProfile::known_mean(&y)?;
                let n = y.len();
                let sum_b: f64 = y.iter().map(|&v| pivotal::gamma::deviance_term(v, 1.0)).sum();
                let phi = prof.precision_hat();
                Ok(FitRecord::KnownMean(KnownMeanFitRecord {
                    schema_version: SCHEMA_VERSION,
                    model: ModelArg::GammaKnownMean,
                    n,
                    precision_hat: phi,
                    mean_b: sum_b / n as f64,
                    loglik: -phi * sum_b - n as f64 * kappa(phi),
                    warnings: Vec::new(),
                }))
            }
        }
    }

    fn precision_profile(&self) -> Result<PrecisionProfile, CliError> {
        match self {
            FitRecord::Gamma(r) => Ok(PrecisionProfile::new(r.n, r.precision_hat, r.quad_form)?),
            FitRecord::KnownMean(r) => Ok(PrecisionProfile::new(r.n, r.precision_hat, 0.0)?),
            FitRecord::Normal(_) => Err(CliError::Usage(VALID_PAIRS.into())),
        }
    }

    /// The pivot for a scalar target, plus (for corrected roots) a way to
    /// read the correction flags at a parameter value.
    pub fn scalar(
        &self,
        target: &Target,
        method: MethodArg,
        known_variance: Option<f64>,
    ) -> Result<ScalarTarget, CliError> {
        check_pair(self.model(), target, method)?;
        match (self, target) {
            (FitRecord::Normal(r), Target::Variance) => {
                let fit = r.to_fit()?;
                Ok(ScalarTarget::Exact(fit.variance_pivot()?))
            }
            (FitRecord::Normal(r), Target::Contrast(b)) => {
                let fit = r.to_fit()?;
                let c = Contrast::new(&fit, DVector::from_vec(b.clone()))?;
                let pivot = match known_variance {
                    Some(v) => fit.contrast_pivot_known_variance(&c, v)?,
                    None => fit.contrast_pivot(&c)?,
                };
                Ok(ScalarTarget::Exact(pivot))
            }
            (_, Target::Precision) => {
                let prof = Arc::new(self.precision_profile()?);
                let root: RootFn = match method {
                    MethodArg::FirstOrder => {
                        let p = prof.clone();
                        Arc::new(move |phi| Ok(p.first_order_root(phi)?))
                    }
                    MethodArg::Fraser => {
                        let p = prof.clone();
                        Arc::new(move |phi| Ok(p.fraser_root(phi)?))
                    }
                    _ => {
                        let p = prof.clone();
                        Arc::new(move |phi| {
                            let d = p.skovgaard(phi)?;
                            Ok(ModifiedRoot {
                                z_p: signed_root(d.d_p, p.precision_hat(), phi),
                                m: d.m,
                                z: d.signed_root.unwrap_or(0.0),
                                flags: d.flags,
                            })
                        })
                    }
                };
                let law = if method == MethodArg::FirstOrder {
                    PivotLaw::Normal
                } else {
                    PivotLaw::CorrectedNormal
                };
                let value = root.clone();
                let pivot = ScalarPivot::new(
                    law,
                    Interval::positive(),
                    Monotonicity::Decreasing,
                    prof.precision_hat(),
                    move |phi| value(phi).map_or(f64::NAN, |r| r.z),
                )?;
                Ok(ScalarTarget::Root { pivot, root })
            }
            _ => Err(CliError::Usage(VALID_PAIRS.into())),
        }
    }
}

pub type RootFn = Arc<dyn Fn(f64) -> pivotal::Result<ModifiedRoot> + Send + Sync>;

pub enum ScalarTarget {
    Exact(ScalarPivot),
    Root { pivot: ScalarPivot, root: RootFn },
}

impl ScalarTarget {
    pub fn pivot(&self) -> &ScalarPivot {
        match self {
            ScalarTarget::Exact(p) | ScalarTarget::Root { pivot: p, .. } => p,
        }
    }

    pub fn density(&self, grid: &RealGrid) -> Result<ConfidenceDensity, CliError> {
        match self {
            ScalarTarget::Exact(p) => Ok(p.parameter_density(grid)?),
            ScalarTarget::Root { root, pivot } => {
                let r = root.clone();
                Ok(corrected_confidence_density(move |t| r(t), grid, pivot.domain())?)
            }
        }
    }

    /// Correction flags at `theta`, as strings.
    pub fn flags_at(&self, theta: f64) -> Vec<String> {
        let ScalarTarget::Root { root, .. } = self else {
            return Vec::new();
        };
        let Ok(r) = root(theta) else {
            return vec!["unavailable".into()];
        };
        let mut out = Vec::new();
        if r.flags.interpolated {
            out.push("interpolated".into());
        }
        if r.flags.unavailable {
            out.push("unavailable".into());
        }
        if r.flags.clamped {
            out.push("clamped".into());
        }
        out
    }
}
