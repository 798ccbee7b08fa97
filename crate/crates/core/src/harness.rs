//! Monte Carlo coverage of one-sided and two-sided confidence statements.
//!
//! Every method reduces a simulated data set to u = F(v(θ₀)), the pivot's
//! reference CDF at the realized pivot evaluated at the true parameter. The
//! level-α one-sided statement covers θ₀ iff u ≤ α, and the equal-tailed
//! two-sided statement iff (1 − α)/2 ≤ u ≤ (1 + α)/2.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::fit_irls;
use crate::higher_order::{CoefficientProfile, PrecisionProfile};
use crate::linear::{fit_ols, Contrast, Dataset};
use crate::numerics::{chisq_cdf, f_cdf, normal_cdf_unchecked, t_cdf, DrawLaw, RngStream};

pub const SCHEMA_VERSION: u32 = 1;
const MIN_REPLICATIONS: usize = 100;
const MAX_FAILURE_FRACTION: f64 = 0.01;
/// Stream reserved for the design draw; replications use 0..R.
const DESIGN_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NormalRegression,
    GammaRegression,
    GammaKnownMu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    VarianceChisq,
    ContrastT,
    CoefficientsF,
    PrecisionFirstOrder,
    PrecisionFraser,
    PrecisionSkovgaard,
    CoefficientsFirstOrder,
    CoefficientsSkovgaard,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::VarianceChisq => "variance_chisq",
            Method::ContrastT => "contrast_t",
            Method::CoefficientsF => "coefficients_f",
            Method::PrecisionFirstOrder => "precision_first_order",
            Method::PrecisionFraser => "precision_fraser",
            Method::PrecisionSkovgaard => "precision_skovgaard",
            Method::CoefficientsFirstOrder => "coefficients_first_order",
            Method::CoefficientsSkovgaard => "coefficients_skovgaard",
        }
    }

    /// Ball statements have no two-sided form.
    pub fn is_scalar(&self) -> bool {
        !matches!(
            self,
            Method::CoefficientsF | Method::CoefficientsFirstOrder | Method::CoefficientsSkovgaard
        )
    }

    pub fn supports(&self, model: ModelKind) -> bool {
        match model {
            ModelKind::NormalRegression => matches!(
                self,
                Method::VarianceChisq | Method::ContrastT | Method::CoefficientsF
            ),
            ModelKind::GammaKnownMu => {
                matches!(self, Method::PrecisionFirstOrder | Method::PrecisionFraser)
            }
            ModelKind::GammaRegression => matches!(
                self,
                Method::PrecisionFirstOrder
                    | Method::PrecisionFraser
                    | Method::PrecisionSkovgaard
                    | Method::CoefficientsFirstOrder
                    | Method::CoefficientsSkovgaard
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub variance: Option<f64>,
    #[serde(default)]
    pub precision: Option<f64>,
    /// Contrast vector b for λ = bᵀβ.
    #[serde(default)]
    pub contrast: Option<Vec<f64>>,
}

/// How the design matrix is produced. Generated designs are drawn once per
/// scenario and held fixed across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    /// Intercept plus `columns − 1` covariates uniform on (−1, 1).
    InterceptUniform { columns: usize },
    /// Intercept plus `columns − 1` standard normal covariates.
    InterceptNormal { columns: usize },
    Matrix { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    pub truth: Truth,
    #[serde(default)]
    pub design: Option<DesignSpec>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("scenario field `{field}`: {msg}"))
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(field_error(
                "replications",
                format!("must be at least {MIN_REPLICATIONS}, got {}", self.replications),
            ));
        }
        if self.levels.is_empty() {
            return Err(field_error("levels", "must not be empty"));
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(field_error("levels", format!("{l} is not in (0, 1)")));
        }
        if self.methods.is_empty() {
            return Err(field_error("methods", "must not be empty"));
        }
        if let Some(m) = self.methods.iter().find(|m| !m.supports(self.model)) {
            return Err(field_error(
                "methods",
                format!("{} is not available for {:?}", m.name(), self.model),
            ));
        }
        if self.n < 2 {
            return Err(field_error("n", "must be at least 2"));
        }
        let positive = |v: Option<f64>, field: &str| match v {
            Some(x) if x > 0.0 && x.is_finite() => Ok(x),
            Some(x) => Err(field_error(field, format!("must be positive, got {x}"))),
            None => Err(field_error(field, "is required for this model")),
        };
        match self.model {
            ModelKind::NormalRegression => {
                positive(self.truth.variance, "truth.variance")?;
            }
            ModelKind::GammaRegression | ModelKind::GammaKnownMu => {
                positive(self.truth.precision, "truth.precision")?;
            }
        }
        if self.model != ModelKind::GammaKnownMu {
            let beta = self
                .truth
                .beta
                .as_ref()
                .ok_or_else(|| field_error("truth.beta", "is required for this model"))?;
            if beta.iter().any(|b| !b.is_finite()) {
                return Err(field_error("truth.beta", "must be finite"));
            }
            let p = match &self.design {
                Some(DesignSpec::InterceptUniform { columns })
                | Some(DesignSpec::InterceptNormal { columns }) => *columns,
                Some(DesignSpec::Matrix { rows }) => {
                    if rows.len() != self.n {
                        return Err(field_error(
                            "design.rows",
                            format!("has {} rows but n = {}", rows.len(), self.n),
                        ));
                    }
                    rows.first().map_or(0, Vec::len)
                }
                None => return Err(field_error("design", "is required for this model")),
            };
            if p == 0 || p >= self.n {
                return Err(field_error("design", format!("needs 1 <= p < n, got p = {p}")));
            }
            if beta.len() != p {
                return Err(field_error(
                    "truth.beta",
                    format!("has length {} but the design has {p} columns", beta.len()),
                ));
            }
            if self.methods.contains(&Method::ContrastT) {
                let b = self
                    .truth
                    .contrast
                    .as_ref()
                    .ok_or_else(|| field_error("truth.contrast", "is required by contrast_t"))?;
                if b.len() != p || b.iter().all(|v| *v == 0.0) {
                    return Err(field_error("truth.contrast", "must be a nonzero vector of length p"));
                }
            }
        }
        Ok(())
    }

    fn design_matrix(&self) -> Result<Option<DMatrix<f64>>> {
        let n = self.n;
        let drawn = |columns: usize, law: DrawLaw, shift: f64, scale: f64| -> Result<DMatrix<f64>> {
            let (v, _) = RngStream::new(self.seed, DESIGN_STREAM).draw(law, n * columns)?;
            Ok(DMatrix::from_fn(n, columns, |i, j| {
                if j == 0 {
                    1.0
                } else {
                    shift + scale * v[i * columns + j]
                }
            }))
        };
        Ok(match &self.design {
            _ if self.model == ModelKind::GammaKnownMu => None,
            Some(DesignSpec::InterceptUniform { columns }) => {
                Some(drawn(*columns, DrawLaw::Uniform, -1.0, 2.0)?)
            }
            Some(DesignSpec::InterceptNormal { columns }) => {
                Some(drawn(*columns, DrawLaw::Normal, 0.0, 1.0)?)
            }
            Some(DesignSpec::Matrix { rows }) => {
                Some(DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
            }
            None => None,
        })
    }
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Draw {
    u: f64,
    flagged: bool,
}

/// Per replication: None when the fit failed.
type Replication = Option<Vec<Draw>>;

struct Prepared<'a> {
    sc: &'a Scenario,
    x: Option<DMatrix<f64>>,
    means: Option<DVector<f64>>,
}

impl Prepared<'_> {
    fn replicate(&self, r: u64) -> Result<Replication> {
        let sc = self.sc;
        let stream = RngStream::new(sc.seed, r);
        match sc.model {
            ModelKind::NormalRegression => {
                let x = self.x.as_ref().expect("design checked");
                let sd = sc.truth.variance.expect("validated").sqrt();
                let (e, _) = stream.draw(DrawLaw::Normal, sc.n)?;
                let y = self.means.as_ref().expect("means") + DVector::from_vec(e) * sd;
                self.normal_methods(Dataset::new(y, x.clone())?)
            }
            ModelKind::GammaRegression => {
                let x = self.x.as_ref().expect("design checked");
                let y = self.gamma_response(&stream)?;
                let data = Dataset::new(y, x.clone())?;
                Ok(self.gamma_methods(&data).ok())
            }
            ModelKind::GammaKnownMu => {
                let phi = sc.truth.precision.expect("validated");
                let (y, _) = stream.draw(DrawLaw::Gamma { shape: phi, scale: 1.0 / phi }, sc.n)?;
                let Ok(profile) = PrecisionProfile::known_mean(&y) else {
                    return Ok(None);
                };
                let mut out = Vec::with_capacity(sc.methods.len());
                for m in &sc.methods {
                    let root = match m {
                        Method::PrecisionFirstOrder => profile.first_order_root(phi),
                        _ => profile.fraser_root(phi),
                    };
                    let Ok(root) = root else { return Ok(None) };
                    out.push(Draw {
                        u: root.lower_tail(),
                        flagged: root.flags.any(),
                    });
                }
                Ok(Some(out))
            }
        }
    }

    fn gamma_response(&self, stream: &RngStream) -> Result<DVector<f64>> {
        let phi = self.sc.truth.precision.expect("validated");
        let (g, _) = stream.draw(DrawLaw::Gamma { shape: phi, scale: 1.0 / phi }, self.sc.n)?;
        Ok(self.means.as_ref().expect("means").component_mul(&DVector::from_vec(g)))
    }

    fn normal_methods(&self, data: Dataset) -> Result<Replication> {
        let sc = self.sc;
        let Ok(fit) = fit_ols(&data) else { return Ok(None) };
        if !(fit.phi_hat_m > 0.0) {
            return Ok(None);
        }
        let beta = DVector::from_column_slice(sc.truth.beta.as_ref().expect("validated"));
        let df = fit.df as f64;
        let mut out = Vec::with_capacity(sc.methods.len());
        for m in &sc.methods {
            let u = match m {
                Method::VarianceChisq => {
                    chisq_cdf(fit.residual_ss / sc.truth.variance.expect("validated"), df)?
                }
                Method::ContrastT => {
                    let b = DVector::from_column_slice(sc.truth.contrast.as_ref().expect("validated"));
                    let c = Contrast::new(&fit, b.clone())?;
                    let v = (c.lambda_hat - b.dot(&beta)) / (c.k * fit.phi_hat_m).sqrt();
                    t_cdf(v, df)?
                }
                Method::CoefficientsF => {
                    let pivot = fit.coefficient_ball_pivot()?;
                    f_cdf(pivot.value(beta.as_slice())?, fit.p as f64, df)?
                }
                _ => unreachable!("validated against the model"),
            };
            out.push(Draw { u, flagged: false });
        }
        Ok(Some(out))
    }

    fn gamma_methods(&self, data: &Dataset) -> Result<Vec<Draw>> {
        let sc = self.sc;
        let fit = fit_irls(data, None)?;
        let phi = sc.truth.precision.expect("validated");
        let beta = DVector::from_column_slice(sc.truth.beta.as_ref().expect("validated"));
        let needs_precision = sc.methods.iter().any(|m| m.is_scalar());
        let precision = if needs_precision {
            Some(PrecisionProfile::from_fit(data, &fit)?)
        } else {
            None
        };
        let coefficients = CoefficientProfile::new(data, &fit)?;
        let mut out = Vec::with_capacity(sc.methods.len());
        for m in &sc.methods {
            let draw = match m {
                Method::PrecisionFirstOrder | Method::PrecisionFraser => {
                    let prof = precision.as_ref().expect("built above");
                    let root = if *m == Method::PrecisionFraser {
                        prof.fraser_root(phi)?
                    } else {
                        prof.first_order_root(phi)?
                    };
                    Draw {
                        u: root.lower_tail(),
                        flagged: root.flags.any(),
                    }
                }
                Method::PrecisionSkovgaard => {
                    let d = precision.as_ref().expect("built above").skovgaard(phi)?;
                    Draw {
                        u: normal_cdf_unchecked(d.signed_root.unwrap_or(0.0)),
                        flagged: d.flags.any(),
                    }
                }
                Method::CoefficientsFirstOrder => {
                    let d = coefficients.first_order(&beta)?;
                    Draw {
                        u: d.ball_confidence(),
                        flagged: false,
                    }
                }
                Method::CoefficientsSkovgaard => {
                    let d = coefficients.skovgaard(&beta)?;
                    Draw {
                        u: d.ball_confidence(),
                        flagged: d.flags.any(),
                    }
                }
                _ => unreachable!("validated against the model"),
            };
            out.push(draw);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    One,
    Two,
}

impl Sides {
    pub fn name(&self) -> &'static str {
        match self {
            Sides::One => "one",
            Sides::Two => "two",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub method: Method,
    pub sides: Sides,
    pub level: f64,
    /// Replications that entered the count (failed fits excluded).
    pub replications: usize,
    pub hit_count: usize,
    pub empirical_coverage: f64,
    /// √(α(1 − α)/N).
    pub mc_stderr: f64,
    /// Replications where a correction was interpolated, unavailable or clamped.
    pub flagged_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub replications_requested: usize,
    pub failures: usize,
    pub rows: Vec<CoverageRow>,
    pub runtime_ms: u128,
}

/// Runs every replication on a pool of `jobs` threads. The report does not
/// depend on `jobs`.
pub fn run_scenario(sc: &Scenario, jobs: usize) -> Result<CoverageReport> {
    sc.validate()?;
    let started = Instant::now();
    let x = sc.design_matrix()?;
    if let Some(x) = &x {
        // surfaces rank problems in generated or supplied designs once
        Dataset::new(DVector::from_element(sc.n, 1.0), x.clone())?;
    }
    let means = match (&x, &sc.truth.beta) {
        (Some(x), Some(b)) => {
            let eta = x * DVector::from_column_slice(b);
            Some(match sc.model {
                ModelKind::NormalRegression => eta,
                _ => eta.map(f64::exp),
            })
        }
        _ => None,
    };
    let prepared = Prepared { sc, x, means };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let reps: Vec<Replication> = pool.install(|| {
        (0..sc.replications as u64)
            .into_par_iter()
            .map(|r| prepared.replicate(r))
            .collect::<Result<Vec<_>>>()
    })?;
    let failures = reps.iter().filter(|r| r.is_none()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * sc.replications as f64 {
        return Err(Error::DegenerateFit(format!(
            "{failures} of {} replications failed to fit (limit 1%)",
            sc.replications
        )));
    }
    let used: Vec<&Vec<Draw>> = reps.iter().flatten().collect();
    let n_used = used.len();
    let mut rows = Vec::new();
    for (k, method) in sc.methods.iter().enumerate() {
        let flagged_count = used.iter().filter(|d| d[k].flagged).count();
        let mut sides = vec![Sides::One];
        if method.is_scalar() {
            sides.push(Sides::Two);
        }
        for side in sides {
            for &level in &sc.levels {
                let hit_count = used
                    .iter()
                    .filter(|d| covers(d[k].u, level, side))
                    .count();
                rows.push(CoverageRow {
                    method: *method,
                    sides: side,
                    level,
                    replications: n_used,
                    hit_count,
                    empirical_coverage: hit_count as f64 / n_used as f64,
                    mc_stderr: (level * (1.0 - level) / n_used as f64).sqrt(),
                    flagged_count,
                });
            }
        }
    }
    Ok(CoverageReport {
        schema_version: SCHEMA_VERSION,
        scenario: sc.clone(),
        seed: sc.seed,
        replications_requested: sc.replications,
        failures,
        rows,
        runtime_ms: started.elapsed().as_millis(),
    })
}

fn covers(u: f64, level: f64, sides: Sides) -> bool {
    match sides {
        Sides::One => u <= level,
        Sides::Two => u >= 0.5 * (1.0 - level) && u <= 0.5 * (1.0 + level),
    }
}

impl CoverageReport {
    /// Plot-ready CSV; the runtime is left out so equal seeds give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario,model,method,sides,level,replications,hit_count,coverage,mc_stderr,flagged_count,failures\n",
        );
        let model = match self.scenario.model {
            ModelKind::NormalRegression => "normal_regression",
            ModelKind::GammaRegression => "gamma_regression",
            ModelKind::GammaKnownMu => "gamma_known_mu",
        };
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.scenario.name,
                model,
                r.method.name(),
                r.sides.name(),
                r.level,
                r.replications,
                r.hit_count,
                r.empirical_coverage,
                r.mc_stderr,
                r.flagged_count,
                self.failures
            );
        }
        out
    }

    pub fn row(&self, method: Method, sides: Sides, level: f64) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sides == sides && r.level == level)
    }

    fn one_sided(&self, method: Method) -> Vec<&CoverageRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.sides == Sides::One)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominates,
    Mixed,
    Dominated,
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelOutcome {
    ChallengerBetter,
    BaselineBetter,
    WithinError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelComparison {
    pub level: f64,
    pub baseline_coverage: f64,
    pub challenger_coverage: f64,
    pub baseline_error: f64,
    pub challenger_error: f64,
    /// Two standard errors of the difference of the two coverages.
    pub guard: f64,
    pub outcome: LevelOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceSummary {
    pub baseline: Method,
    pub challenger: Method,
    pub levels: Vec<LevelComparison>,
    pub baseline_mean_abs_error: f64,
    pub challenger_mean_abs_error: f64,
    pub verdict: Verdict,
}

impl DominanceSummary {
    pub fn table(&self) -> String {
        let mut out = format!(
            "level  {:>12}  {:>12}  guard     outcome\n",
            self.baseline.name(),
            self.challenger.name()
        );
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{:<6} {:>12.5}  {:>12.5}  {:.5}  {:?}",
                l.level, l.baseline_coverage, l.challenger_coverage, l.guard, l.outcome
            );
        }
        out
    }
}

/// Compares one-sided coverage errors of two methods level by level.
pub fn compare_methods(
    report: &CoverageReport,
    baseline: Method,
    challenger: Method,
) -> Result<DominanceSummary> {
    let base = report.one_sided(baseline);
    let chal = report.one_sided(challenger);
    if base.is_empty() || chal.is_empty() {
        let missing = if base.is_empty() { baseline } else { challenger };
        return Err(Error::InvalidInput(format!(
            "method {} is not in the report",
            missing.name()
        )));
    }
    let mut levels = Vec::with_capacity(base.len());
    for b in &base {
        let c = chal
            .iter()
            .find(|c| c.level == b.level)
            .ok_or_else(|| Error::InvalidInput(format!("level {} missing for challenger", b.level)))?;
        let (cb, cc) = (b.empirical_coverage, c.empirical_coverage);
        let guard = 2.0
            * (cb * (1.0 - cb) / b.replications as f64 + cc * (1.0 - cc) / c.replications as f64)
                .sqrt();
        let baseline_error = (cb - b.level).abs();
        let challenger_error = (cc - b.level).abs();
        let outcome = if (baseline_error - challenger_error).abs() <= guard {
            LevelOutcome::WithinError
        } else if challenger_error < baseline_error {
            LevelOutcome::ChallengerBetter
        } else {
            LevelOutcome::BaselineBetter
        };
        levels.push(LevelComparison {
            level: b.level,
            baseline_coverage: cb,
            challenger_coverage: cc,
            baseline_error,
            challenger_error,
            guard,
            outcome,
        });
    }
    let better = levels.iter().any(|l| l.outcome == LevelOutcome::ChallengerBetter);
    let worse = levels.iter().any(|l| l.outcome == LevelOutcome::BaselineBetter);
    let verdict = match (better, worse) {
        (true, false) => Verdict::Dominates,
        (false, true) => Verdict::Dominated,
        (true, true) => Verdict::Mixed,
        (false, false) => Verdict::Indistinguishable,
    };
    let k = levels.len() as f64;
    Ok(DominanceSummary {
        baseline,
        challenger,
        baseline_mean_abs_error: levels.iter().map(|l| l.baseline_error).sum::<f64>() / k,
        challenger_mean_abs_error: levels.iter().map(|l| l.challenger_error).sum::<f64>() / k,
        levels,
        verdict,
    })
}
