//! Subcommand definitions and execution.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use ewd::datasets::{self, CensorSpec, ColumnSelector, Dataset, Rounding};
use ewd::distributions::ewd_sample;
use ewd::error::EwdError;
use ewd::fisher::{asymptotic_ci, fisher_matrix, lrt_beta_equals_one};
use ewd::hazard_shape::{shape_report, sign_scan, DEFAULT_SCAN_POINTS, DEFAULT_Z_MAX};
use ewd::likelihood::{log_likelihood_kernel, CensoredSample};
use ewd::mle::{fit_backfitting, fit_direct, fit_eed, FitConfig, FitResult};
use ewd::Theta;

use crate::report::{
    command_echo, sha256_hex, CheckReport, FitReport, InferenceReport, InputDigest,
    ShapeReportJson, SimulateReport, SimulateResults, SurfaceReport, SCHEMA_VERSION,
};

/// Exponentiated-Weibull lifetime modelling under type II censoring.
#[derive(Debug, Parser)]
#[command(name = "ewd", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the EED or EWD model to a CSV dataset.
    Fit(FitArgs),
    /// Classify the hazard shape implied by (alpha, beta).
    Shape(ShapeArgs),
    /// Emit a log-likelihood grid over two parameters as CSV.
    Surface(SurfaceArgs),
    /// Monte Carlo bias/covariance/coverage study of the fitted estimator.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    /// Exponentiated exponential (beta fixed at 1).
    Eed,
    /// Full three-parameter exponentiated Weibull.
    Ewd,
}

impl Dist {
    fn name(self) -> &'static str {
        match self {
            Dist::Eed => "eed",
            Dist::Ewd => "ewd",
        }
    }
}

/// Flags shared by every command that ingests a dataset.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file of lifetimes. Relative paths are also resolved against
    /// $EWD_DATA_DIR when set.
    pub data: PathBuf,
    /// Column holding the lifetimes: "first", a 0-based index, or a header name.
    #[arg(long, default_value = "first")]
    pub column: String,
    /// Field delimiter (single character).
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// Type II censoring rate in [0, 1); converted to r = rounding(n(1-rate)).
    #[arg(long, conflicts_with = "r")]
    pub censor_rate: Option<f64>,
    /// Number of observed order statistics (overrides --censor-rate).
    #[arg(long)]
    pub r: Option<usize>,
    /// Rounding rule for --censor-rate: floor, round or ceil.
    #[arg(long, default_value = "round")]
    pub rounding: Rounding,
}

/// Solver configuration overrides (defaults match the library).
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Outer back-fitting stop tolerance on the relative parameter change.
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon_outer: f64,
    /// Inner fixed-point stop tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon_inner: f64,
    #[arg(long, default_value_t = 50)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 500)]
    pub max_inner: usize,
    /// Initial beta for the profile search.
    #[arg(long, default_value_t = 1.0)]
    pub beta_init: f64,
    /// Profile search interval for beta, as "lo,hi".
    #[arg(long, default_value = "0.05,20", value_parser = parse_pair)]
    pub beta_bracket: (f64, f64),
}

impl SolverArgs {
    fn to_config(&self) -> FitConfig {
        FitConfig {
            epsilon_outer: self.epsilon_outer,
            epsilon_inner: self.epsilon_inner,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            beta_init: self.beta_init,
            alpha_init: 1.0,
            lambda_init: None,
            beta_bracket: self.beta_bracket,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model family to fit.
    #[arg(long, value_enum, default_value_t = Dist::Ewd)]
    pub dist: Dist,
    /// Cross-check the back-fitting maximum with a direct optimizer.
    #[arg(long)]
    pub check: bool,
    /// Append Fisher-information inference: Wald intervals and the
    /// likelihood-ratio test of beta = 1.
    #[arg(long)]
    pub fisher: bool,
    /// Confidence level for the Wald intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the JSON report to this file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Write the (z, s(z)) scan table to this CSV file.
    #[arg(long)]
    pub scan: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z_MAX)]
    pub z_max: f64,
    #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
    pub points: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Dist::Ewd)]
    pub dist: Dist,
    /// Grid axis as "param=lo,hi,n" with param one of alpha, beta, sigma.
    #[arg(long, value_parser = parse_axis)]
    pub x: GridAxis,
    /// Second grid axis, same syntax; must differ from --x.
    #[arg(long, value_parser = parse_axis)]
    pub y: GridAxis,
    /// Pin the remaining parameter as "param=value" instead of its MLE.
    #[arg(long, value_parser = parse_fix)]
    pub fix: Option<(String, f64)>,
    /// Output CSV path for the grid.
    #[arg(long)]
    pub out: PathBuf,
    /// Reject grids with more cells than this.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_cells: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub sigma: f64,
    /// Sample size per replicate.
    #[arg(long)]
    pub n: usize,
    /// Observed proportion: each replicate keeps r = round(n p) order statistics.
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Abort when more than this fraction of replicate fits fail.
    #[arg(long, default_value_t = 0.05)]
    pub failure_cap: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct GridAxis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"lo,hi\", got '{s}'"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    let (param, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected \"param=lo,hi,n\", got '{s}'"))?;
    let param = param.trim().to_string();
    if !["alpha", "beta", "sigma"].contains(&param.as_str()) {
        return Err(format!("unknown parameter '{param}'"));
    }
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected \"param=lo,hi,n\", got '{s}'"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    let n: usize = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(format!("axis bounds must satisfy 0 < lo <= hi, n >= 1: '{s}'"));
    }
    Ok(GridAxis { param, lo, hi, n })
}

fn parse_fix(s: &str) -> Result<(String, f64), String> {
    let (param, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected \"param=value\", got '{s}'"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("{e}"))?;
    if !["alpha", "beta", "sigma"].contains(&param.trim()) {
        return Err(format!("unknown parameter '{param}'"));
    }
    Ok((param.trim().to_string(), v))
}

// --- error handling ---------------------------------------------------------

/// CLI failure with its contractual exit code.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
            code: 1,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: "data",
            message: message.into(),
            code: 2,
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: "numeric",
            message: message.into(),
            code: 3,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl From<EwdError> for CliError {
    fn from(e: EwdError) -> Self {
        match &e {
            EwdError::InvalidParameter(_) | EwdError::Domain(_) => CliError::usage(e.to_string()),
            EwdError::InvalidData(_) | EwdError::Io(_) => CliError::data(e.to_string()),
            EwdError::NumericalOverflow(_)
            | EwdError::NonConvergence(_)
            | EwdError::Quadrature(_)
            | EwdError::IllConditioned(_) => CliError::numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Shape(args) => cmd_shape(args),
        Command::Surface(args) => cmd_surface(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

// --- data loading -----------------------------------------------------------

fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var("EWD_DATA_DIR") {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

fn load(args: &DataArgs) -> CliResult<(Dataset, CensoredSample, InputDigest)> {
    let path = resolve_path(&args.data);
    let bytes = std::fs::read(&path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let column = match args.column.as_str() {
        "first" => ColumnSelector::First,
        s => match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        },
    };
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::data(format!("{}: not valid UTF-8", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let dataset = datasets::parse_csv(&name, &text, &column, args.delimiter as u8)?;

    let spec = match (args.r, args.censor_rate) {
        (Some(0), _) => return Err(CliError::usage("--r must be >= 1")),
        (Some(r), _) => CensorSpec::Count(r),
        (None, Some(c)) => {
            if !(0.0..1.0).contains(&c) {
                return Err(CliError::usage(format!(
                    "--censor-rate must lie in [0, 1), got {c}"
                )));
            }
            CensorSpec::Rate {
                c,
                rounding: args.rounding,
            }
        }
        (None, None) => CensorSpec::Count(dataset.n()),
    };
    let sample = dataset.censor(spec)?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(text.as_bytes()),
        n_total: sample.n_total(),
        r: sample.r(),
    };
    Ok((dataset, sample, digest))
}

fn emit<T: serde::Serialize>(report: &T, output: Option<&PathBuf>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
    println!("{text}");
    if let Some(path) = output {
        std::fs::write(path, &text)?;
    }
    Ok(())
}

// --- fit ---------------------------------------------------------------------

fn fit_model(dist: Dist, sample: &CensoredSample, config: &FitConfig) -> CliResult<FitResult> {
    Ok(match dist {
        Dist::Eed => fit_eed(sample, config)?,
        Dist::Ewd => fit_backfitting(sample, config)?,
    })
}

fn check_model(dist: Dist, sample: &CensoredSample, config: &FitConfig) -> CliResult<FitResult> {
    let mut cfg = config.clone();
    if dist == Dist::Eed {
        // pin beta at 1 for the cross-check of the sub-model
        cfg.beta_bracket = (1.0, 1.0 + 1e-9);
        cfg.beta_init = 1.0;
    }
    Ok(fit_direct(sample, &cfg)?)
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let start = Instant::now();
    if !(0.0..1.0).contains(&args.level) {
        return Err(CliError::usage(format!(
            "--level must lie in [0, 1), got {}",
            args.level
        )));
    }
    let (_, sample, digest) = load(&args.data)?;
    let config = args.solver.to_config();
    let fit = fit_model(args.dist, &sample, &config)?;
    if !fit.converged {
        return Err(CliError::numeric(format!(
            "fit did not converge (beta = {:.6}, at_beta_bound = {})",
            fit.theta_hat.beta, fit.at_beta_bound
        )));
    }

    let check = if args.check {
        let direct = check_model(args.dist, &sample, &config)?;
        let gap = (fit.loglik_kernel - direct.loglik_kernel).abs();
        Some(CheckReport { fit: direct, loglik_gap: gap })
    } else {
        None
    };

    let inference = if args.fisher {
        let p = sample.r() as f64 / sample.n_total() as f64;
        let info = fisher_matrix(fit.theta_hat, p)?;
        let ci = asymptotic_ci(&fit, &sample, args.level)?;
        let lrt = match args.dist {
            Dist::Ewd => Some(lrt_beta_equals_one(&sample, &config)?),
            Dist::Eed => None,
        };
        Some(InferenceReport {
            fisher: info,
            level: args.level,
            confidence_intervals: ci,
            lrt_beta_equals_one: lrt,
        })
    } else {
        None
    };

    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        command: command_echo(),
        input: digest,
        dist: args.dist.name().to_string(),
        neg_loglik_kernel: -fit.loglik_kernel,
        neg_loglik_full: -fit.loglik_full,
        fit,
        check,
        inference,
        timing_ms: start.elapsed().as_millis(),
    };
    emit(&report, args.output.as_ref())
}

// --- shape -------------------------------------------------------------------

fn cmd_shape(args: ShapeArgs) -> CliResult<()> {
    let start = Instant::now();
    let report = shape_report(args.alpha, args.beta)?;
    let scan_csv = if let Some(path) = &args.scan {
        let scan = sign_scan(args.alpha, args.beta, args.z_max, args.points)?;
        let mut text = String::from("z,s\n");
        for (z, s) in scan.z_grid.iter().zip(&scan.s_values) {
            text.push_str(&format!("{z},{s}\n"));
        }
        std::fs::write(path, text)?;
        Some(path.display().to_string())
    } else {
        None
    };
    let json_report = ShapeReportJson {
        schema_version: SCHEMA_VERSION,
        command: command_echo(),
        alpha: args.alpha,
        beta: args.beta,
        report,
        scan_csv,
        timing_ms: start.elapsed().as_millis(),
    };
    emit(&json_report, args.output.as_ref())
}

// --- surface -----------------------------------------------------------------

fn param_index(name: &str) -> usize {
    match name {
        "alpha" => 0,
        "beta" => 1,
        _ => 2,
    }
}

fn cmd_surface(args: SurfaceArgs) -> CliResult<()> {
    let start = Instant::now();
    if args.x.param == args.y.param {
        return Err(CliError::usage("--x and --y must name different parameters"));
    }
    if args.dist == Dist::Eed && (args.x.param == "beta" || args.y.param == "beta") {
        return Err(CliError::usage("beta is fixed at 1 under --dist eed"));
    }
    let cells = args.x.n.saturating_mul(args.y.n);
    if cells > args.max_cells {
        return Err(CliError::usage(format!(
            "grid of {cells} cells exceeds --max-cells {}",
            args.max_cells
        )));
    }
    let (_, sample, digest) = load(&args.data)?;
    let config = args.solver.to_config();
    let fit = fit_model(args.dist, &sample, &config)?;

    let mut base = [fit.theta_hat.alpha, fit.theta_hat.beta, fit.theta_hat.sigma];
    let (xi, yi) = (param_index(&args.x.param), param_index(&args.y.param));
    let free: Vec<usize> = (0..3).filter(|i| *i != xi && *i != yi).collect();
    if let Some((name, value)) = &args.fix {
        let fi = param_index(name);
        if fi == xi || fi == yi {
            return Err(CliError::usage(format!(
                "--fix names grid parameter '{name}'"
            )));
        }
        if *value <= 0.0 {
            return Err(CliError::usage("--fix value must be > 0"));
        }
        base[fi] = *value;
    }
    debug_assert_eq!(free.len(), 1);

    let axis_values = |axis: &GridAxis| -> Vec<f64> {
        if axis.n == 1 {
            vec![axis.lo]
        } else {
            (0..axis.n)
                .map(|i| axis.lo + (axis.hi - axis.lo) * i as f64 / (axis.n - 1) as f64)
                .collect()
        }
    };
    let xs = axis_values(&args.x);
    let ys = axis_values(&args.y);

    let mut csv = format!("{},{},loglik\n", args.x.param, args.y.param);
    let mut grid_max = f64::NEG_INFINITY;
    let mut grid_argmax = (xs[0], ys[0]);
    for &xv in &xs {
        for &yv in &ys {
            let mut params = base;
            params[xi] = xv;
            params[yi] = yv;
            let value = match Theta::new(params[0], params[1], params[2]) {
                Ok(theta) => log_likelihood_kernel(&sample, theta),
                Err(_) => f64::NEG_INFINITY,
            };
            csv.push_str(&format!("{xv},{yv},{value}\n"));
            if value > grid_max {
                grid_max = value;
                grid_argmax = (xv, yv);
            }
        }
    }
    std::fs::write(&args.out, &csv)?;

    let report = SurfaceReport {
        schema_version: SCHEMA_VERSION,
        command: command_echo(),
        input: digest,
        dist: args.dist.name().to_string(),
        x_param: args.x.param.clone(),
        y_param: args.y.param.clone(),
        grid_shape: (xs.len(), ys.len()),
        grid_csv: args.out.display().to_string(),
        grid_max,
        grid_argmax,
        fitted_loglik: fit.loglik_kernel,
        fitted_theta: fit.theta_hat,
        timing_ms: start.elapsed().as_millis(),
    };
    emit(&report, args.output.as_ref())
}

// --- simulate ----------------------------------------------------------------

/// SplitMix64 step, used to derive independent per-replicate seeds.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Replicate {
    estimate: [f64; 3],
    covered: [bool; 3],
}

fn run_replicate(
    theta: Theta,
    n: usize,
    r: usize,
    seed: u64,
    level: f64,
    config: &FitConfig,
) -> Result<Replicate, EwdError> {
    let mut data = ewd_sample(theta, n, seed)?;
    data.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    data.truncate(r);
    let sample = CensoredSample::new(data, n)?;
    let fit = fit_backfitting(&sample, config)?;
    let ci = asymptotic_ci(&fit, &sample, level)?;
    let truth = [theta.alpha, theta.beta, theta.sigma];
    let mut covered = [false; 3];
    for i in 0..3 {
        covered[i] = ci[i].0 <= truth[i] && truth[i] <= ci[i].1;
    }
    Ok(Replicate {
        estimate: [fit.theta_hat.alpha, fit.theta_hat.beta, fit.theta_hat.sigma],
        covered,
    })
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let theta = Theta::new(args.alpha, args.beta, args.sigma)?;
    if !(args.p > 0.0 && args.p <= 1.0) {
        return Err(CliError::usage(format!(
            "--p must lie in (0, 1], got {}",
            args.p
        )));
    }
    if !(0.0..1.0).contains(&args.level) {
        return Err(CliError::usage(format!(
            "--level must lie in [0, 1), got {}",
            args.level
        )));
    }
    if args.n == 0 {
        return Err(CliError::usage("--n must be >= 1"));
    }

    let results = if args.replicates == 0 {
        None
    } else {
        let r = ((args.n as f64 * args.p).round() as usize).clamp(1, args.n);
        let config = args.solver.to_config();
        let outcomes: Vec<Option<Replicate>> = (0..args.replicates as u64)
            .into_par_iter()
            .map(|i| {
                run_replicate(theta, args.n, r, derive_seed(args.seed, i), args.level, &config)
                    .ok()
            })
            .collect();
        let successes: Vec<&Replicate> = outcomes.iter().flatten().collect();
        let failures = args.replicates - successes.len();
        if (failures as f64) > args.failure_cap * args.replicates as f64 {
            return Err(CliError::numeric(format!(
                "{failures}/{} replicate fits failed, above the cap of {:.0}%",
                args.replicates,
                100.0 * args.failure_cap
            )));
        }
        if successes.len() < 2 {
            return Err(CliError::numeric(
                "need at least 2 successful replicates for a covariance",
            ));
        }

        let truth = [theta.alpha, theta.beta, theta.sigma];
        let m = successes.len() as f64;
        let sqrt_n = (args.n as f64).sqrt();
        let mut bias = [0.0; 3];
        for rep in &successes {
            for i in 0..3 {
                bias[i] += (rep.estimate[i] - truth[i]) / m;
            }
        }
        let mut cov = [[0.0; 3]; 3];
        for rep in &successes {
            let e: Vec<f64> = (0..3)
                .map(|i| sqrt_n * (rep.estimate[i] - truth[i] - bias[i]))
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += e[i] * e[j] / (m - 1.0);
                }
            }
        }
        let info = fisher_matrix(theta, args.p)?;
        let inv = info.covariance.ok_or_else(|| {
            CliError::numeric(format!(
                "information matrix singular (condition number {:.3e})",
                info.condition_number
            ))
        })?;
        let mut max_rel = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let denom = inv[i][j].abs().max(1e-12);
                max_rel = max_rel.max((cov[i][j] - inv[i][j]).abs() / denom);
            }
        }
        let mut coverage = [0.0; 3];
        for rep in &successes {
            for i in 0..3 {
                if rep.covered[i] {
                    coverage[i] += 1.0 / m;
                }
            }
        }
        let _ = failures;
        Some((
            failures,
            SimulateResults {
                bias,
                empirical_covariance: cov,
                fisher_inverse: inv,
                max_relative_covariance_error: max_rel,
                coverage,
            },
        ))
    };

    let (failures, results) = match results {
        Some((f, r)) => (f, Some(r)),
        None => (0, None),
    };
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: command_echo(),
        theta,
        n: args.n,
        p: args.p,
        replicates: args.replicates,
        seed: args.seed,
        level: args.level,
        failures,
        results,
        timing_ms: start.elapsed().as_millis(),
    };
    emit(&report, args.output.as_ref())
}
