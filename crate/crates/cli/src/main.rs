mod error;
mod model;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pivotal::harness::{run_scenario, CoverageReport, Scenario};
use pivotal::numerics::RealGrid;
use pivotal::pivot::Bound;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::model::{default_method, Columns, FitRecord, MethodArg, ModelArg, Target, SCHEMA_VERSION};
use crate::table::CsvTable;

#[derive(Parser)]
#[command(name = "pivotal", version, about = "Confidence densities, intervals and coverage studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and print the estimates.
    Fit(FitArgs),
    /// Confidence density of a scalar target on a grid.
    Confdens(ConfdensArgs),
    /// One- or two-sided confidence interval for a scalar target.
    Interval(IntervalArgs),
    /// Run the coverage scenarios in a TOML file.
    Coverage(CoverageArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    file: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, default_value = "y")]
    response: String,
    /// Design columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    design: Vec<String>,
    /// Prepend an intercept column.
    #[arg(long)]
    intercept: bool,
    /// Use a fit JSON written by `pivotal fit` instead of a CSV file.
    #[arg(long, conflicts_with = "file")]
    from_fit: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct TargetArgs {
    /// variance, precision or contrast:b1,b2,...
    #[arg(long)]
    target: String,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Treat the normal error variance as known (contrast targets only).
    #[arg(long)]
    known_variance: Option<f64>,
}

#[derive(Args)]
struct ConfdensArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    target: TargetArgs,
    /// lo:hi:npoints
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SidesArg {
    One,
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundArg {
    Lower,
    Upper,
}

#[derive(Args)]
struct IntervalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    level: f64,
    #[arg(long, value_enum, default_value = "one")]
    sides: SidesArg,
    /// Which end a one-sided interval bounds.
    #[arg(long, value_enum, default_value = "lower")]
    bound: BoundArg,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CoverageArgs {
    /// Scenario file (TOML, one [[scenario]] table per scenario).
    scenario_file: PathBuf,
    /// Output prefix; writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override every scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Confdens(a) => cmd_confdens(a),
        Command::Interval(a) => cmd_interval(a),
        Command::Coverage(a) => cmd_coverage(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn columns(d: &DataArgs) -> Columns {
    Columns {
        response: d.response.clone(),
        design: d.design.clone(),
        intercept: d.intercept,
    }
}

/// Fits from the CSV, or reads a previous fit.
fn load_fit(d: &DataArgs) -> Result<FitRecord, CliError> {
    if let Some(path) = &d.from_fit {
        let rec = FitRecord::read(path)?;
        if let Some(m) = d.model {
            if m != rec.model() {
                return Err(CliError::Usage(format!(
                    "--model {} does not match the fit file model {}",
                    model::arg_name(m),
                    model::arg_name(rec.model())
                )));
            }
        }
        return Ok(rec);
    }
    let file = d
        .file
        .as_ref()
        .ok_or_else(|| CliError::Usage("give an input CSV file or --from-fit".into()))?;
    let model = d
        .model
        .ok_or_else(|| CliError::Usage("--model is required with a CSV input".into()))?;
    let table = CsvTable::read(file)?;
    FitRecord::fit(&table, model, &columns(d))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Data(format!("cannot write output: {e}")))
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form for tiny or huge values.
fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    if a.data.from_fit.is_some() {
        return Err(CliError::Usage("fit needs a CSV input, not --from-fit".into()));
    }
    let rec = load_fit(&a.data)?;
    for w in rec.warnings() {
        eprintln!("warning: {w}");
    }
    let text = match a.format {
        Format::Json => to_json(&rec),
        Format::Csv => {
            let value = serde_json::to_value(&rec).expect("serializable");
            let mut out = String::from("field,value\n");
            for (k, v) in value.as_object().expect("object") {
                if let Some(arr) = v.as_array() {
                    for (i, item) in arr.iter().enumerate() {
                        if item.is_number() {
                            out.push_str(&format!("{k}[{i}],{item}\n"));
                        }
                    }
                } else if v.is_number() {
                    out.push_str(&format!("{k},{v}\n"));
                }
            }
            out
        }
    };
    emit(&text, None)
}

fn parse_grid(spec: &str) -> Result<RealGrid, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--grid expects lo:hi:npoints, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    RealGrid::linspace(lo, hi, n).map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve(
    d: &DataArgs,
    t: &TargetArgs,
) -> Result<(FitRecord, Target, MethodArg, model::ScalarTarget), CliError> {
    let target = Target::parse(&t.target)?;
    // validate the pair before doing any work when the model is known up front
    if let (Some(m), Some(method)) = (d.model, t.method) {
        model::check_pair(m, &target, method)?;
    }
    if t.known_variance.is_some() && !matches!(target, Target::Contrast(_)) {
        return Err(CliError::Usage("--known-variance applies to contrast targets only".into()));
    }
    let rec = load_fit(d)?;
    let method = t.method.unwrap_or_else(|| default_method(rec.model()));
    let scalar = rec.scalar(&target, method, t.known_variance)?;
    Ok((rec, target, method, scalar))
}

#[derive(Serialize)]
struct DensityPoint {
    theta: f64,
    confidence_density: f64,
}

#[derive(Serialize)]
struct DensityReport {
    schema_version: u32,
    target: String,
    method: MethodArg,
    grid_mass: f64,
    points: Vec<DensityPoint>,
    warnings: Vec<String>,
}

fn cmd_confdens(a: ConfdensArgs) -> Result<(), CliError> {
    let grid = parse_grid(&a.grid)?;
    let (_, target, method, scalar) = resolve(&a.data, &a.target)?;
    let density = scalar.density(&grid)?;
    let points: Vec<DensityPoint> = density
        .on_grid(&grid)
        .into_iter()
        .map(|(theta, c)| DensityPoint {
            theta,
            confidence_density: c,
        })
        .collect();
    let values: Vec<f64> = points.iter().map(|p| p.confidence_density).collect();
    let grid_mass = grid.sum(&values);
    let mut warnings = Vec::new();
    if (grid_mass - 1.0).abs() > 1e-3 {
        warnings.push(format!(
            "density integrates to {grid_mass:.6} over the grid; the grid does not span the confidence mass"
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let text = match a.format {
        Format::Csv => {
            let mut out = String::from("theta,confidence_density\n");
            for p in &points {
                out.push_str(&format!("{},{}\n", num(p.theta), num(p.confidence_density)));
            }
            out
        }
        Format::Json => to_json(&DensityReport {
            schema_version: SCHEMA_VERSION,
            target: target.name(),
            method,
            grid_mass,
            points,
            warnings,
        }),
    };
    emit(&text, a.out.as_deref())
}

#[derive(Serialize)]
struct IntervalReport {
    schema_version: u32,
    target: String,
    method: MethodArg,
    sides: &'static str,
    /// Confidence of the reported interval.
    confidence: f64,
    /// None for an unbounded end.
    lower: Option<f64>,
    upper: Option<f64>,
    estimate: f64,
    flags: Vec<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn cmd_interval(a: IntervalArgs) -> Result<(), CliError> {
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(CliError::Usage(format!("--level must be in (0, 1), got {}", a.level)));
    }
    let (_, target, method, scalar) = resolve(&a.data, &a.target)?;
    let pivot = scalar.pivot();
    let domain = pivot.domain();
    let (lower, upper) = match a.sides {
        SidesArg::One => match a.bound {
            BoundArg::Lower => (pivot.interval_endpoint(a.level, Bound::Lower)?, domain.hi),
            BoundArg::Upper => (domain.lo, pivot.interval_endpoint(a.level, Bound::Upper)?),
        },
        SidesArg::Two => {
            let one_sided = 0.5 * (1.0 + a.level);
            (
                pivot.interval_endpoint(one_sided, Bound::Lower)?,
                pivot.interval_endpoint(one_sided, Bound::Upper)?,
            )
        }
    };
    let mut flags: Vec<String> = [lower, upper]
        .iter()
        .filter(|x| x.is_finite() && **x > domain.lo)
        .flat_map(|&x| scalar.flags_at(x))
        .collect();
    flags.sort();
    flags.dedup();
    let report = IntervalReport {
        schema_version: SCHEMA_VERSION,
        target: target.name(),
        method,
        sides: match a.sides {
            SidesArg::One => "one",
            SidesArg::Two => "two",
        },
        confidence: a.level,
        lower: finite(lower),
        upper: finite(upper),
        estimate: pivot.center(),
        flags,
    };
    let text = match a.format {
        Format::Json => to_json(&report),
        Format::Csv => format!(
            "target,method,sides,confidence,lower,upper\n\"{}\",{},{},{},{},{}\n",
            report.target,
            model::arg_name(method),
            report.sides,
            report.confidence,
            num(lower),
            num(upper)
        ),
    };
    emit(&text, None)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: Vec<Scenario>,
}

#[derive(Serialize)]
struct CoverageFile<'a> {
    schema_version: u32,
    reports: &'a [CoverageReport],
}

fn cmd_coverage(a: CoverageArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.scenario_file).map_err(|e| {
        CliError::Data(format!("cannot read {}: {e}", a.scenario_file.display()))
    })?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| {
        CliError::Data(format!("invalid scenario file {}: {e}", a.scenario_file.display()))
    })?;
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mut reports = Vec::with_capacity(file.scenario.len());
    for mut sc in file.scenario {
        if let Some(seed) = a.seed {
            sc.seed = seed;
        }
        sc.validate().map_err(|e| {
            CliError::Data(format!("scenario {:?}: {e}", sc.name))
        })?;
        reports.push(run_scenario(&sc, a.jobs)?);
    }
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = r.to_csv();
        if i == 0 {
            csv.push_str(&body);
        } else {
            csv.extend(body.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    let prefix = a.out.to_string_lossy().into_owned();
    emit(&csv, Some(Path::new(&format!("{prefix}.csv"))))?;
    emit(
        &to_json(&CoverageFile {
            schema_version: SCHEMA_VERSION,
            reports: &reports,
        }),
        Some(Path::new(&format!("{prefix}.json"))),
    )?;
    for r in &reports {
        eprintln!(
            "{}: {} replications ({} failed) in {} ms",
            r.scenario.name, r.replications_requested, r.failures, r.runtime_ms
        );
    }
    Ok(())
}
