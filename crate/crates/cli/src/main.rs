//! `estail` — tail risk measures for declared loss distributions: per-level
//! reports, measure curves over level grids, distortion bounds, dual
//! verification of the expectile shortfall on finite models, and
//! extreme-value ratio diagnostics. Output is deterministic CSV or JSON.

mod spec;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use estail::asymptotics::{convergence_report, ratio_curve, COL_END_ES, COL_ES_OVER_ES};
use estail::distortion::{distortion_curve, gamma_beta, lower_bound_at, r_alpha, r_phi};
use estail::distributions::{read_finite_csv, LossDistribution};
use estail::dual::verify_duality;
use estail::expectile::RiskLevel;
use estail::measures::{
    expected_shortfall, risk_report, tail_conditional_expectation, value_at_risk, MeasureValue,
    RiskReport,
};

use spec::{parse_alpha_grid, parse_dist, parse_mda, SpecError, DIST_GRAMMAR, GRID_GRAMMAR, MDA_GRAMMAR};

#[derive(Parser)]
#[command(
    name = "estail",
    about = "Quantile- and expectile-based tail risk measures",
    after_help = format!("{DIST_GRAMMAR}\n{GRID_GRAMMAR}\n{MDA_GRAMMAR}")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// All six risk measures at one level.
    Report {
        /// Distribution spec, e.g. `uniform`, `pareto:a=2`, `finite:file=atoms.csv`.
        #[arg(long)]
        dist: String,
        /// Risk level in (0, 1/2].
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measure curves over a level grid, or the preset figure data.
    Curve {
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        dist: Option<String>,
        /// Grid `lo:hi:count:lin|log`; levels above 1/2 carry only the
        /// quantile-based columns.
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        alpha_grid: Option<String>,
        /// `fig1` (measure curves for four kinds) or `fig3` (tail ratio curves).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lower and upper bounds around the expectile-based expected shortfall.
    Bounds {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        alpha: f64,
        /// Optional mixture level for a single lower-bound member.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify the discretized dual ladder against the quadrature primal on a
    /// finite model. Exits 0 only when the verification passes.
    DualCheck {
        /// Distribution spec (must be finite, empirical, or bernoulli).
        #[arg(long, required_unless_present = "dist_file", conflicts_with = "dist_file")]
        dist: Option<String>,
        /// Shortcut for `finite:file=<path>`.
        #[arg(long)]
        dist_file: Option<PathBuf>,
        #[arg(long)]
        alpha: f64,
        /// Finest partition size (power of two).
        #[arg(long, default_value = "256")]
        n_max: usize,
        /// Gap tolerance at the finest partition.
        #[arg(long, default_value = "1e-3")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ratio curves toward the declared extreme-value limits (CSV), or the
    /// pass/fail convergence report against them (JSON).
    Asymptotics {
        #[arg(long)]
        dist: String,
        /// Declared class, e.g. `frechet:eta=2`, `weibull:eta=1,xhat=1`,
        /// `gumbel:xhat=inf,weibull_tail`.
        #[arg(long)]
        mda: String,
        #[arg(long)]
        alpha_grid: String,
        /// Tolerance for the JSON convergence report.
        #[arg(long, default_value = "0.05")]
        tol: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The concave distortion function and its right derivative on a knot grid.
    Distortion {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "1001")]
        knots: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
}

enum CliError {
    /// Grammar problems: exit 2, grammar help on stderr.
    Usage(String),
    /// Domain, validation, or computation problems: exit 3.
    Failed(String),
    /// Verification ran but did not pass: exit 3 after printing the report.
    CheckFailed,
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Parse { .. } => CliError::Usage(e.to_string()),
            SpecError::Validation(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<estail::RiskError> for CliError {
    fn from(e: estail::RiskError) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn risk_level(alpha: f64) -> Result<RiskLevel, CliError> {
    RiskLevel::new(alpha).map_err(|e| CliError::Failed(e.to_string()))
}

fn emit(output: &OutputArgs, content: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn json_line(value: &Value) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

fn finite_or_marker(v: f64) -> Value {
    if v.is_infinite() && v > 0.0 {
        json!("inf")
    } else {
        json!(v)
    }
}

fn run_report(dist: &str, alpha: f64, format: Format, output: &OutputArgs) -> Result<(), CliError> {
    let dist = parse_dist(dist)?;
    let report = risk_report(&dist, risk_level(alpha)?)?;
    let content = match format {
        Format::Json => json_line(&report.to_json()),
        Format::Csv => format!("{}\n{}\n", RiskReport::CSV_HEADER, report.to_csv_row()),
    };
    emit(output, &content)
}

/// One curve row; levels above one half only define the quantile-based
/// measures, the rest carry markers.
fn curve_row(dist: &LossDistribution, alpha: f64) -> Result<RiskReport, CliError> {
    if alpha <= 0.5 {
        return Ok(risk_report(dist, risk_level(alpha)?)?);
    }
    let mean = dist.mean()?;
    Ok(RiskReport {
        alpha,
        mean,
        var: value_at_risk(dist, alpha),
        es_quantile: expected_shortfall(dist, alpha)?,
        tce_quantile: MeasureValue::from_result(tail_conditional_expectation(dist, alpha)),
        expectile: f64::NAN,
        tce_expectile: MeasureValue::Degenerate("invalid_level"),
        es_expectile: MeasureValue::Degenerate("invalid_level"),
        beta_star: MeasureValue::Degenerate("invalid_level"),
    })
}

fn curve_row_csv(report: &RiskReport) -> String {
    if report.expectile.is_nan() {
        format!(
            "{},{},{},{},{},invalid_level,{},{},{}",
            report.alpha,
            report.mean,
            report.var,
            report.es_quantile,
            report.tce_quantile.to_csv_cell(),
            report.tce_expectile.to_csv_cell(),
            report.es_expectile.to_csv_cell(),
            report.beta_star.to_csv_cell()
        )
    } else {
        report.to_csv_row()
    }
}

fn run_curve(
    dist: Option<&str>,
    alpha_grid: Option<&str>,
    preset: Option<&str>,
    format: Format,
    output: &OutputArgs,
) -> Result<(), CliError> {
    if let Some(preset) = preset {
        let content = run_preset(preset)?;
        return emit(output, &content);
    }
    let dist = parse_dist(dist.expect("clap enforces presence"))?;
    let grid = parse_alpha_grid(alpha_grid.expect("clap enforces presence"))?;
    let rows: Vec<RiskReport> = grid
        .iter()
        .map(|&a| curve_row(&dist, a))
        .collect::<Result<_, _>>()?;
    let content = match format {
        Format::Csv => {
            let mut s = String::from(RiskReport::CSV_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&curve_row_csv(r));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| {
                    if r.expectile.is_nan() {
                        let mut v = r.to_json();
                        v["expectile"] = json!({ "error": "invalid_level" });
                        v
                    } else {
                        r.to_json()
                    }
                })
                .collect();
            json_line(&Value::Array(arr))
        }
    };
    emit(output, &content)
}

/// Plot-ready data behind the two figure families: measure curves for four
/// kinds (`fig1`) and tail ratio curves (`fig3`).
fn run_preset(preset: &str) -> Result<String, CliError> {
    match preset {
        "fig1" => {
            let dists = [
                ("pareto2", LossDistribution::pareto(2.0).unwrap()),
                ("uniform", LossDistribution::Uniform01),
                ("koenker", LossDistribution::Koenker),
                ("beta2", LossDistribution::beta_power(2.0).unwrap()),
            ];
            let grid = parse_alpha_grid("0.01:0.5:50:lin").expect("static grid");
            let mut s = String::from("dist,alpha,es_expectile,tce_expectile,es_quantile\n");
            for (name, dist) in &dists {
                for &a in &grid {
                    let r = risk_report(dist, risk_level(a)?)?;
                    s.push_str(&format!(
                        "{name},{a},{},{},{}\n",
                        r.es_expectile.to_csv_cell(),
                        r.tce_expectile.to_csv_cell(),
                        r.es_quantile
                    ));
                }
            }
            Ok(s)
        }
        "fig3" => {
            let cases = [
                ("pareto2", LossDistribution::pareto(2.0).unwrap(), COL_ES_OVER_ES),
                ("exponential", LossDistribution::Exponential1, COL_ES_OVER_ES),
                ("uniform", LossDistribution::Uniform01, COL_END_ES),
                ("beta2", LossDistribution::beta_power(2.0).unwrap(), COL_END_ES),
            ];
            let mut grid = parse_alpha_grid("0.0001:0.5:41:log").expect("static grid");
            grid.reverse();
            let mut s = String::from("dist,alpha,ratio,value\n");
            for (name, dist, column) in &cases {
                let table = ratio_curve(dist, &grid)?;
                let col = table.column(column).expect("column defined for kind");
                for (a, v) in grid.iter().zip(col) {
                    let cell = match v {
                        Some(v) => format!("{v}"),
                        None => "degenerate".to_string(),
                    };
                    s.push_str(&format!("{name},{a},{column},{cell}\n"));
                }
            }
            Ok(s)
        }
        other => Err(CliError::Usage(format!(
            "unknown preset `{other}` (expected fig1 or fig3)"
        ))),
    }
}

fn run_bounds(
    dist: &str,
    alpha: f64,
    beta: Option<f64>,
    format: Format,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let dist = parse_dist(dist)?;
    let lvl = risk_level(alpha)?;
    let es = estail::measures::expectile_es(&dist, lvl)?;
    let (lower, argmax_beta) = r_alpha(&dist, lvl)?;
    let upper = r_phi(&dist, lvl)?;
    let member = beta
        .map(|b| -> Result<(f64, f64), CliError> {
            Ok((gamma_beta(lvl, b)?, lower_bound_at(&dist, lvl, b)?))
        })
        .transpose()?;
    let content = match format {
        Format::Json => {
            let mut map = Map::new();
            map.insert("alpha".into(), json!(alpha));
            map.insert("r_alpha".into(), json!(lower));
            map.insert("argmax_beta".into(), json!(argmax_beta));
            map.insert("es_expectile".into(), finite_or_marker(es));
            map.insert("r_phi".into(), finite_or_marker(upper));
            if let (Some(b), Some((g, v))) = (beta, member) {
                map.insert("beta".into(), json!(b));
                map.insert("gamma_beta".into(), json!(g));
                map.insert("lower_bound".into(), json!(v));
            }
            json_line(&Value::Object(map))
        }
        Format::Csv => {
            let inf_cell = |v: f64| {
                if v.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{v}")
                }
            };
            match (beta, member) {
                (Some(b), Some((g, v))) => format!(
                    "alpha,r_alpha,argmax_beta,es_expectile,r_phi,beta,gamma_beta,lower_bound\n{},{},{},{},{},{},{},{}\n",
                    alpha, lower, argmax_beta, inf_cell(es), inf_cell(upper), b, g, v
                ),
                _ => format!(
                    "alpha,r_alpha,argmax_beta,es_expectile,r_phi\n{},{},{},{},{}\n",
                    alpha, lower, argmax_beta, inf_cell(es), inf_cell(upper)
                ),
            }
        }
    };
    emit(output, &content)
}

fn run_dual_check(
    dist: Option<&str>,
    dist_file: Option<&PathBuf>,
    alpha: f64,
    n_max: usize,
    tol: f64,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let model = match (dist, dist_file) {
        (_, Some(path)) => read_finite_csv(path)
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?,
        (Some(spec), None) => parse_dist(spec)?.atom_model().ok_or_else(|| {
            CliError::Failed("dual-check requires an atomic distribution (finite, empirical, or bernoulli)".into())
        })?,
        (None, None) => unreachable!("clap enforces one of --dist/--dist-file"),
    };
    let report = verify_duality(&model, risk_level(alpha)?, n_max, tol)?;
    emit(output, &json_line(&report.to_json()))?;
    if report.passes {
        Ok(())
    } else {
        eprintln!(
            "verification failed: monotone={}, final_gap={} (tol {tol})",
            report.monotone, report.final_gap
        );
        Err(CliError::CheckFailed)
    }
}

fn run_asymptotics(
    dist: &str,
    mda: &str,
    alpha_grid: &str,
    tol: f64,
    format: Format,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let dist = parse_dist(dist)?;
    let mda = parse_mda(mda)?;
    let mut grid = parse_alpha_grid(alpha_grid)?;
    grid.reverse();
    grid.dedup();
    let content = match format {
        Format::Csv => ratio_curve(&dist, &grid)?.to_csv(),
        Format::Json => json_line(&convergence_report(&dist, &mda, &grid, tol)?.to_json()),
    };
    emit(output, &content)
}

fn run_distortion(
    alpha: f64,
    knots: usize,
    format: Format,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let curve = distortion_curve(risk_level(alpha)?, knots)?;
    let content = match format {
        Format::Csv => curve.to_csv(),
        Format::Json => {
            let mut map = Map::new();
            map.insert("alpha".into(), json!(curve.alpha));
            map.insert("knots".into(), json!(curve.knots));
            map.insert("phi".into(), json!(curve.phi_values));
            map.insert(
                "phi_prime".into(),
                Value::Array(curve.phi_prime_values.iter().map(|&v| finite_or_marker(v)).collect()),
            );
            json_line(&Value::Object(map))
        }
    };
    emit(output, &content)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Report {
            dist,
            alpha,
            format,
            output,
        } => run_report(&dist, alpha, format, &output),
        Command::Curve {
            dist,
            alpha_grid,
            preset,
            format,
            output,
        } => run_curve(
            dist.as_deref(),
            alpha_grid.as_deref(),
            preset.as_deref(),
            format,
            &output,
        ),
        Command::Bounds {
            dist,
            alpha,
            beta,
            format,
            output,
        } => run_bounds(&dist, alpha, beta, format, &output),
        Command::DualCheck {
            dist,
            dist_file,
            alpha,
            n_max,
            tol,
            output,
        } => run_dual_check(dist.as_deref(), dist_file.as_ref(), alpha, n_max, tol, &output),
        Command::Asymptotics {
            dist,
            mda,
            alpha_grid,
            tol,
            format,
            output,
        } => run_asymptotics(&dist, &mda, &alpha_grid, tol, format, &output),
        Command::Distortion {
            alpha,
            knots,
            format,
            output,
        } => run_distortion(alpha, knots, format, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{DIST_GRAMMAR}");
            eprintln!("{GRID_GRAMMAR}");
            eprintln!("{MDA_GRAMMAR}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::CheckFailed) => ExitCode::from(3),
    }
}
