//! Command-line front end: `simulate`, `estimate`, `moments` and `mc`.
//!
//! Exit status is 0 on success, 2 for invalid input, 3 for degenerate data
//! and 4 when a Monte Carlo campaign misses its thresholds.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use inar_outliers::io::{read_series, write_series, SeriesFormat};
use inar_outliers::mc::{records_to_csv, run_campaign, McCampaign};
use inar_outliers::moments::{cls_covariance, stationary_moments};
use inar_outliers::{
    estimate, simulate, Error, Family, InitDist, InnovationDist, Method, ModelSpec,
    OutlierPlan, OutlierScenario, SimConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "inar-outliers", version, about = "INAR(1) models with additive or innovational outliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a clean or contaminated path.
    Simulate(SimulateArgs),
    /// Estimate parameters from a series file.
    Estimate(EstimateArgs),
    /// Print stationary moments and asymptotic covariances as JSON.
    Moments(ModelArgs),
    /// Run a Monte Carlo campaign.
    Mc(McArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Thinning mean in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Innovation law: `poisson:<lambda>` or `pmf:<v>:<p>,...`.
    #[arg(long, default_value = "poisson:1")]
    innov: String,
}

impl ModelArgs {
    fn model(&self, x0: &str) -> Result<ModelSpec, Error> {
        ModelSpec::new(
            self.alpha,
            self.innov.parse::<InnovationDist>()?,
            x0.parse::<InitDist>()?,
        )
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial value: a non-negative integer or a distribution.
    #[arg(long, default_value = "0")]
    x0: String,
    /// Largest time index; the path has n + 1 values.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `<additive|innovational>:s=<t>:theta=<v>[,s=<t>:theta=<v>]`.
    #[arg(long)]
    outlier: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScenarioArg {
    None,
    Additive,
    Innovational,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Grid,
    Poly,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
}

#[derive(Args)]
struct EstimateArgs {
    /// Series file (CSV with optional `y` header, or a JSON array).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ScenarioArg::None)]
    scenario: ScenarioArg,
    /// Time of the first outlier.
    #[arg(long)]
    s1: Option<usize>,
    /// Time of the second outlier.
    #[arg(long)]
    s2: Option<usize>,
    /// Known innovation mean; the mean is estimated when absent.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
}

#[derive(Args)]
struct McArgs {
    /// Campaign file of `key = value` lines; inline flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    innov: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    /// Outlier plan in the `simulate --outlier` syntax.
    #[arg(long)]
    outliers: Option<String>,
    #[arg(long)]
    mu_known: Option<bool>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n_values: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Comma-separated subset of consistency, limit_convergence,
    /// conditional_clt, covariance_match, z_moments, decomposition.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Per-replication records CSV.
    #[arg(long)]
    records: Option<String>,
    /// Summary JSON file; standard output when absent.
    #[arg(long)]
    summary: Option<String>,
    /// Extra `key=value` campaign settings such as thresholds.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl McArgs {
    /// Config text: the file first, then one line per inline flag.
    fn config_text(&self) -> Result<String, Error> {
        let mut text = match &self.config {
            Some(p) => fs::read_to_string(p)?,
            None => String::new(),
        };
        text.push('\n');
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                text.push_str(&format!("{key} = {v}\n"));
            }
        };
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("innov", self.innov.clone());
        put("x0", self.x0.clone());
        put("outliers", self.outliers.clone());
        put("mu_known", self.mu_known.map(|v| v.to_string()));
        put("n_values", self.n_values.clone());
        put("replications", self.replications.map(|v| v.to_string()));
        put("master_seed", self.master_seed.map(|v| v.to_string()));
        put("checks", self.checks.clone());
        put("method", self.method.clone());
        put("workers", self.workers.map(|v| v.to_string()));
        put("records", self.records.clone());
        put("summary", self.summary.clone());
        for kv in &self.set {
            text.push_str(kv);
            text.push('\n');
        }
        Ok(text)
    }
}

fn write_or_print(path: Option<&std::path::Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

fn run_simulate(a: &SimulateArgs) -> Result<(), Error> {
    let mut cfg = SimConfig::new(a.model.model(&a.x0)?, a.n, a.seed)?;
    if let Some(spec) = &a.outlier {
        cfg = cfg.with_plan(spec.parse::<OutlierPlan>()?)?;
    }
    let y = simulate(&cfg)?;
    let format = match a.format {
        Format::Csv => SeriesFormat::Csv,
        Format::Json => SeriesFormat::Json,
    };
    write_or_print(a.out.as_deref(), &write_series(&y, format))
}

fn run_estimate(a: &EstimateArgs) -> Result<(), Error> {
    let series = read_series(&fs::read_to_string(&a.input)?)?;
    let times: Vec<usize> = a.s1.into_iter().chain(a.s2).collect();
    let scenario = match a.scenario {
        ScenarioArg::None => {
            if !times.is_empty() {
                return Err(Error::BadTimes("--scenario none takes no outlier times".into()));
            }
            None
        }
        ScenarioArg::Additive | ScenarioArg::Innovational => {
            let family = if a.scenario == ScenarioArg::Additive {
                Family::Additive
            } else {
                Family::Innovational
            };
            Some(OutlierScenario::new(family, times, a.mu.is_some())?)
        }
    };
    let method = match a.method {
        MethodArg::Grid => Method::Grid,
        MethodArg::Poly => Method::Poly,
    };
    let report = estimate(&series, scenario.as_ref(), a.mu, method)?;
    let ReportFormat::Json = a.format;
    write_or_print(None, &to_json(&report)?)
}

fn run_moments(a: &ModelArgs) -> Result<(), Error> {
    let model = a.model("0")?;
    let m = stationary_moments(&model);
    let c = cls_covariance(&model)?;
    let out = json!({
        "m1": m.m1,
        "m2": m.m2,
        "m3": m.m3,
        "var": m.var,
        "sigma2_alpha": c.sigma2_alpha,
        "a_mat": c.a_mat,
        "b_mat": c.b_mat,
    });
    write_or_print(None, &to_json(&out)?)
}

fn run_mc(a: &McArgs) -> Result<(), Error> {
    let (campaign, opts) = McCampaign::from_config(&a.config_text()?)?;
    let out = run_campaign(&campaign, opts.workers)?;
    if let Some(p) = &opts.records_path {
        fs::write(p, records_to_csv(&out.records))?;
    }
    let summary = to_json(&out.summary)?;
    write_or_print(opts.summary_path.as_deref().map(std::path::Path::new), &summary)?;
    out.summary.require_pass()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CampaignFailed(_) => 4,
        e if e.is_degenerate() => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Moments(a) => run_moments(a),
        Command::Mc(a) => run_mc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
