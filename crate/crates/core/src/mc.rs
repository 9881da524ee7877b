//! Deterministic, replication-parallel Monte Carlo campaigns.
//!
//! Replication `r` simulates from `replication_seed(master_seed, r)` at
//! every sample size, so records do not depend on the execution order or on
//! the number of worker threads. Records are persisted as CSV and every
//! record-based statistic of the summary can be recomputed from that file
//! with [`summarize`].
//!
//! A campaign is described by a flat `key = value` file; see
//! [`McCampaign::from_config`] for the keys.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{conditional_law, estimate};
use crate::innovational::z_moments;
use crate::model::{Family, InitDist, InnovationDist, ModelSpec, OutlierPlan, OutlierScenario};
use crate::moments::cls_covariance;
use crate::report::Method;
use crate::simulator::{
    replication_seed, simulate, simulate_innovational, simulate_innovational_direct, SimConfig,
};
use crate::stats::{covariance, ks_standard_normal, mean, standard_error, variance};

/// Header of the per-replication record file.
pub const RECORD_HEADER: [&str; 13] = [
    "n",
    "rep",
    "scenario",
    "alpha_hat",
    "mu_hat",
    "theta_hat_1",
    "theta_hat_2",
    "limit_1",
    "limit_2",
    "cond_var_11",
    "cond_var_12",
    "cond_var_22",
    "degenerate",
];

/// A numerical experiment a campaign can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Mean of the consistent estimators near the truth.
    Consistency,
    /// Size estimators near their per-path almost sure limits.
    LimitConvergence,
    /// Standardised size estimators close to standard normal.
    ConditionalClt,
    /// Scaled spread of the consistent block against its asymptotic covariance.
    CovarianceMatch,
    /// Moments, monotonicity and extinction of the outlier component.
    ZMoments,
    /// Decomposed and direct innovational paths coincide.
    Decomposition,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Consistency,
        Check::LimitConvergence,
        Check::ConditionalClt,
        Check::CovarianceMatch,
        Check::ZMoments,
        Check::Decomposition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Consistency => "consistency",
            Check::LimitConvergence => "limit_convergence",
            Check::ConditionalClt => "conditional_clt",
            Check::CovarianceMatch => "covariance_match",
            Check::ZMoments => "z_moments",
            Check::Decomposition => "decomposition",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown check '{s}'")))
    }
}

/// Pass/fail thresholds of the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Bound on `|mean alpha_hat - alpha|`.
    pub alpha_tol: f64,
    /// Bound on `|mean mu_hat - mu|`.
    pub mu_tol: f64,
    /// Per-path bound on `|theta_hat - limit|`.
    pub limit_tol: f64,
    /// Required fraction of paths within `limit_tol`.
    pub limit_fraction: f64,
    /// Accepted range of the variance of a standardised statistic.
    pub var_lo: f64,
    pub var_hi: f64,
    /// Bound on the KS distance to the standard normal law.
    pub ks_max: f64,
    /// Relative tolerance on the scaled variance of `alpha_hat` (known mean).
    pub sigma2_rel: f64,
    /// Entrywise relative tolerance on the scaled covariance of `(alpha_hat, mu_hat)`.
    pub b_rel: f64,
    /// Largest tolerated fraction of degenerate replications.
    pub degenerate_max: f64,
    /// Number of standard errors allowed in the outlier-component moment checks.
    pub z_se: f64,
    /// Steps after the outlier covered by the moment checks.
    pub z_horizon: u32,
    /// Steps after the outlier at which extinction is checked.
    pub extinction_lag: usize,
    /// Required fraction of extinct outlier components at `extinction_lag`.
    pub extinction_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            alpha_tol: 0.02,
            mu_tol: 0.1,
            limit_tol: 0.05,
            limit_fraction: 0.9,
            var_lo: 0.85,
            var_hi: 1.15,
            ks_max: 0.05,
            sigma2_rel: 0.15,
            b_rel: 0.20,
            degenerate_max: 0.01,
            z_se: 3.0,
            z_horizon: 10,
            extinction_lag: 50,
            extinction_fraction: 0.99,
        }
    }
}

/// A complete Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCampaign {
    pub model: ModelSpec,
    /// True contamination; `None` runs the clean estimator.
    pub plan: Option<OutlierPlan>,
    /// Whether the estimator is given the true innovation mean.
    pub mu_known: bool,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub checks: Vec<Check>,
    pub method: Method,
    pub thresholds: Thresholds,
}

/// Output locations and parallelism read from a campaign file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub records_path: Option<String>,
    pub summary_path: Option<String>,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
}

impl McCampaign {
    /// Campaign with default thresholds, grid minimisation and all checks
    /// that apply to the plan.
    pub fn new(
        model: ModelSpec,
        plan: Option<OutlierPlan>,
        mu_known: bool,
        n_values: Vec<usize>,
        replications: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let mut checks = vec![Check::Consistency, Check::CovarianceMatch];
        if plan.is_some() {
            checks.extend([Check::LimitConvergence, Check::ConditionalClt]);
        }
        let c = McCampaign {
            model,
            plan,
            mu_known,
            n_values,
            replications,
            master_seed,
            checks,
            method: Method::Grid,
            thresholds: Thresholds::default(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Replaces the list of checks.
    pub fn with_checks(mut self, checks: Vec<Check>) -> Self {
        self.checks = checks;
        self
    }

    /// The estimator-side scenario.
    pub fn scenario(&self) -> Option<OutlierScenario> {
        self.plan.as_ref().map(|p| p.scenario(self.mu_known))
    }

    /// Label written in the `scenario` column.
    pub fn label(&self) -> String {
        self.scenario()
            .map(|s| s.tag().to_string())
            .unwrap_or_else(|| "CLEAN".into())
    }

    fn mu_eps(&self) -> Option<f64> {
        self.mu_known.then(|| self.model.mu())
    }

    /// Checks the campaign is runnable.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be positive".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidParameter("n_values must not be empty".into()));
        }
        for &n in &self.n_values {
            let cfg = SimConfig::new(self.model.clone(), n, 0)?;
            if let Some(p) = &self.plan {
                cfg.with_plan(p.clone())?;
            }
        }
        let wants_z = self
            .checks
            .iter()
            .any(|c| matches!(c, Check::ZMoments | Check::Decomposition));
        let innovational = self
            .plan
            .as_ref()
            .is_some_and(|p| p.family() == Family::Innovational);
        if wants_z && !innovational {
            return Err(Error::InvalidParameter(
                "z_moments and decomposition checks need an innovational plan".into(),
            ));
        }
        Ok(())
    }

    /// Parses a flat `key = value` campaign file. Blank lines and lines
    /// starting with `#` are ignored.
    ///
    /// Keys: `alpha`, `innov` (`poisson:<lambda>` or `pmf:<v>:<p>,...`),
    /// `x0` (integer or distribution), `outliers` (as accepted by
    /// [`OutlierPlan`]; omit for a clean campaign), `mu_known`
    /// (`true`/`false`), `n_values` (comma separated), `replications`,
    /// `master_seed`, `checks` (comma separated), `method` (`grid`/`poly`),
    /// `workers`, `records`, `summary`, and every field of [`Thresholds`]
    /// by name.
    pub fn from_config(text: &str) -> Result<(Self, RunOptions)> {
        let mut alpha = None;
        let mut innov = None;
        let mut init = InitDist::default();
        let mut plan = None;
        let mut mu_known = true;
        let mut n_values = None;
        let mut replications = None;
        let mut master_seed = 0u64;
        let mut checks = None;
        let mut method = Method::Grid;
        let mut th = Thresholds::default();
        let mut opts = RunOptions::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn fmt::Display| {
                Error::Parse(format!("line {}: {key} = '{value}': {e}", lineno + 1))
            };
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| bad(&e))?
                };
            }
            match key {
                "alpha" => alpha = Some(num!()),
                "innov" => innov = Some(value.parse::<InnovationDist>()?),
                "x0" => init = value.parse::<InitDist>()?,
                "outliers" => plan = Some(value.parse::<OutlierPlan>()?),
                "mu_known" => mu_known = num!(),
                "n_values" => {
                    n_values = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<usize>().map_err(|e| bad(&e)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "replications" => replications = Some(num!()),
                "master_seed" => master_seed = num!(),
                "checks" => {
                    checks = Some(
                        value
                            .split(',')
                            .map(str::parse)
                            .collect::<Result<Vec<Check>>>()?,
                    )
                }
                "method" => method = value.parse()?,
                "workers" => opts.workers = Some(num!()),
                "records" => opts.records_path = Some(value.to_string()),
                "summary" => opts.summary_path = Some(value.to_string()),
                "alpha_tol" => th.alpha_tol = num!(),
                "mu_tol" => th.mu_tol = num!(),
                "limit_tol" => th.limit_tol = num!(),
                "limit_fraction" => th.limit_fraction = num!(),
                "var_lo" => th.var_lo = num!(),
                "var_hi" => th.var_hi = num!(),
                "ks_max" => th.ks_max = num!(),
                "sigma2_rel" => th.sigma2_rel = num!(),
                "b_rel" => th.b_rel = num!(),
                "degenerate_max" => th.degenerate_max = num!(),
                "z_se" => th.z_se = num!(),
                "z_horizon" => th.z_horizon = num!(),
                "extinction_lag" => th.extinction_lag = num!(),
                "extinction_fraction" => th.extinction_fraction = num!(),
                other => return Err(Error::Parse(format!("unknown campaign key '{other}'"))),
            }
        }
        let need = |name: &str| Error::Parse(format!("campaign key '{name}' is required"));
        let model = ModelSpec::new(
            alpha.ok_or_else(|| need("alpha"))?,
            innov.ok_or_else(|| need("innov"))?,
            init,
        )?;
        let mut c = McCampaign::new(
            model,
            plan,
            mu_known,
            n_values.ok_or_else(|| need("n_values"))?,
            replications.ok_or_else(|| need("replications"))?,
            master_seed,
        )?;
        if let Some(checks) = checks {
            c.checks = checks;
        }
        c.method = method;
        c.thresholds = th;
        c.validate()?;
        Ok((c, opts))
    }
}

/// One replication at one sample size. Missing values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub n: usize,
    pub rep: usize,
    pub scenario: String,
    pub alpha_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub theta_hat: [Option<f64>; 2],
    pub limit: [Option<f64>; 2],
    /// Entries `(1,1)`, `(1,2)` and `(2,2)` of the conditional covariance.
    pub cond_var: [Option<f64>; 3],
    /// The estimator failed on this path.
    pub degenerate: bool,
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        field
            .parse()
            .map(Some)
            .map_err(|e| Error::Parse(format!("record value '{field}': {e}")))
    }
}

/// Serialises records to CSV. Floats use the shortest text that parses
/// back to the same value.
pub fn records_to_csv(records: &[Record]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(RECORD_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            r.scenario.clone(),
            opt_field(r.alpha_hat),
            opt_field(r.mu_hat),
            opt_field(r.theta_hat[0]),
            opt_field(r.theta_hat[1]),
            opt_field(r.limit[0]),
            opt_field(r.limit[1]),
            opt_field(r.cond_var[0]),
            opt_field(r.cond_var[1]),
            opt_field(r.cond_var[2]),
            r.degenerate.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses a record file written by [`records_to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<Record>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Parse("record header does not match".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let f = |i: usize| parse_opt(&rec[i]);
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("record value '{}': {e}", &rec[i])))
        };
        out.push(Record {
            n: int(0)?,
            rep: int(1)?,
            scenario: rec[2].to_string(),
            alpha_hat: f(3)?,
            mu_hat: f(4)?,
            theta_hat: [f(5)?, f(6)?],
            limit: [f(7)?, f(8)?],
            cond_var: [f(9)?, f(10)?, f(11)?],
            degenerate: rec[12]
                .parse()
                .map_err(|e| Error::Parse(format!("degenerate flag '{}': {e}", &rec[12])))?,
        });
    }
    Ok(out)
}

/// Outcome of one check at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    /// Check name, or `degenerate_budget`.
    pub check: String,
    pub n: Option<usize>,
    /// Which quantity was compared.
    pub statistic: String,
    pub value: f64,
    /// Human-readable acceptance region.
    pub bound: String,
    pub passed: bool,
}

impl CheckResult {
    fn new(
        check: &str,
        n: Option<usize>,
        statistic: impl Into<String>,
        value: f64,
        bound: String,
        passed: bool,
    ) -> Self {
        CheckResult {
            check: check.into(),
            n,
            statistic: statistic.into(),
            value,
            bound,
            passed,
        }
    }
}

/// Location and spread of one estimand over the non-degenerate paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Mean error against the truth or against the per-path limit.
    pub bias: f64,
}

/// Distribution of a standardised size estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedSummary {
    pub name: String,
    /// Paths used.
    pub used: usize,
    /// Non-degenerate paths dropped because their conditional variance is zero.
    pub zero_variance: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks: f64,
}

/// Aggregates at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub replications: usize,
    pub degenerate: usize,
    pub estimands: Vec<EstimandSummary>,
    pub standardized: Vec<StandardizedSummary>,
}

/// Campaign summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub scenario: String,
    pub per_n: Vec<NSummary>,
    /// Checks computed from the records.
    pub checks: Vec<CheckResult>,
    /// Checks computed from whole simulated paths, which the records do not hold.
    pub path_checks: Vec<CheckResult>,
    pub passed: bool,
}

impl McSummary {
    /// `CampaignFailed` listing the failing checks, if any.
    pub fn require_pass(&self) -> Result<()> {
        let failed: Vec<String> = self
            .checks
            .iter()
            .chain(&self.path_checks)
            .filter(|c| !c.passed)
            .map(|c| match c.n {
                Some(n) => format!("{} {} (n = {n}) = {}", c.check, c.statistic, c.value),
                None => format!("{} {} = {}", c.check, c.statistic, c.value),
            })
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::CampaignFailed(failed.join("; ")))
        }
    }
}

/// Records and summary of a finished campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub records: Vec<Record>,
    pub summary: McSummary,
}

fn summarize_estimand(name: &str, values: &[f64], truth: f64) -> EstimandSummary {
    let m = mean(values);
    EstimandSummary {
        name: name.into(),
        mean: m,
        sd: variance(values).sqrt(),
        bias: m - truth,
    }
}

/// Recomputes the record-based part of the summary.
pub fn summarize(campaign: &McCampaign, records: &[Record]) -> McSummary {
    let th = &campaign.thresholds;
    let alpha = campaign.model.alpha();
    let mu = campaign.model.mu();
    let k = campaign.plan.as_ref().map_or(0, |p| p.outliers().len());
    let wants = |c: Check| campaign.checks.contains(&c);
    let mut per_n = Vec::new();
    let mut checks = Vec::new();
    let mut total = 0usize;
    let mut total_degenerate = 0usize;
    for &n in &campaign.n_values {
        let at_n: Vec<&Record> = records.iter().filter(|r| r.n == n).collect();
        let ok: Vec<&Record> = at_n.iter().copied().filter(|r| !r.degenerate).collect();
        total += at_n.len();
        total_degenerate += at_n.len() - ok.len();
        let rn = (n as f64).sqrt();
        let alphas: Vec<f64> = ok.iter().filter_map(|r| r.alpha_hat).collect();
        let mus: Vec<f64> = ok.iter().filter_map(|r| r.mu_hat).collect();
        let mut estimands = vec![summarize_estimand("alpha_hat", &alphas, alpha)];
        if !campaign.mu_known {
            estimands.push(summarize_estimand("mu_hat", &mus, mu));
        }
        let mut standardized = Vec::new();
        for i in 0..k {
            let name = format!("theta_hat_{}", i + 1);
            let thetas: Vec<f64> = ok.iter().filter_map(|r| r.theta_hat[i]).collect();
            let diffs: Vec<f64> = ok
                .iter()
                .filter_map(|r| Some(r.theta_hat[i]? - r.limit[i]?))
                .collect();
            let mut e = summarize_estimand(&name, &thetas, 0.0);
            e.bias = mean(&diffs);
            estimands.push(e);
            let var_index = if i == 0 { 0 } else { 2 };
            let mut zero_variance = 0;
            let z: Vec<f64> = ok
                .iter()
                .filter_map(|r| {
                    let v = r.cond_var[var_index]?;
                    if v.is_nan() || v <= 0.0 {
                        zero_variance += 1;
                        return None;
                    }
                    Some(rn * (r.theta_hat[i]? - r.limit[i]?) / v.sqrt())
                })
                .collect();
            standardized.push(StandardizedSummary {
                name,
                used: z.len(),
                zero_variance,
                mean: mean(&z),
                variance: variance(&z),
                ks: ks_standard_normal(&z),
            });
        }

        if wants(Check::Consistency) {
            let d = mean(&alphas) - alpha;
            checks.push(CheckResult::new(
                "consistency",
                Some(n),
                "mean alpha_hat - alpha",
                d,
                format!("|x| < {}", th.alpha_tol),
                d.abs() < th.alpha_tol,
            ));
            if !campaign.mu_known {
                let d = mean(&mus) - mu;
                checks.push(CheckResult::new(
                    "consistency",
                    Some(n),
                    "mean mu_hat - mu",
                    d,
                    format!("|x| < {}", th.mu_tol),
                    d.abs() < th.mu_tol,
                ));
            }
        }
        if wants(Check::LimitConvergence) && k > 0 {
            let close = ok
                .iter()
                .filter(|r| {
                    (0..k).all(|i| match (r.theta_hat[i], r.limit[i]) {
                        (Some(t), Some(l)) => (t - l).abs() < th.limit_tol,
                        _ => false,
                    })
                })
                .count();
            let frac = close as f64 / at_n.len() as f64;
            checks.push(CheckResult::new(
                "limit_convergence",
                Some(n),
                format!("fraction of paths with max |theta_hat - limit| < {}", th.limit_tol),
                frac,
                format!("x >= {}", th.limit_fraction),
                frac >= th.limit_fraction,
            ));
        }
        if wants(Check::ConditionalClt) {
            for s in &standardized {
                checks.push(CheckResult::new(
                    "conditional_clt",
                    Some(n),
                    format!("variance of standardised {}", s.name),
                    s.variance,
                    format!("{} <= x <= {}", th.var_lo, th.var_hi),
                    (th.var_lo..=th.var_hi).contains(&s.variance),
                ));
                checks.push(CheckResult::new(
                    "conditional_clt",
                    Some(n),
                    format!("KS distance of standardised {}", s.name),
                    s.ks,
                    format!("x < {}", th.ks_max),
                    s.ks < th.ks_max,
                ));
            }
        }
        if wants(Check::CovarianceMatch) {
            checks.extend(covariance_checks(campaign, n, &alphas, &mus));
        }
        per_n.push(NSummary {
            n,
            replications: at_n.len(),
            degenerate: at_n.len() - ok.len(),
            estimands,
            standardized,
        });
    }
    let frac = total_degenerate as f64 / total.max(1) as f64;
    checks.push(CheckResult::new(
        "degenerate_budget",
        None,
        "fraction of degenerate replications",
        frac,
        format!("x <= {}", th.degenerate_max),
        frac <= th.degenerate_max,
    ));
    let passed = checks.iter().all(|c| c.passed);
    McSummary {
        scenario: campaign.label(),
        per_n,
        checks,
        path_checks: Vec::new(),
        passed,
    }
}

fn covariance_checks(campaign: &McCampaign, n: usize, alphas: &[f64], mus: &[f64]) -> Vec<CheckResult> {
    let th = &campaign.thresholds;
    let cls = match cls_covariance(&campaign.model) {
        Ok(c) => c,
        Err(e) => {
            return vec![CheckResult::new(
                "covariance_match",
                Some(n),
                format!("asymptotic covariance unavailable: {e}"),
                f64::NAN,
                "defined".into(),
                false,
            )]
        }
    };
    let rn = (n as f64).sqrt();
    let sa: Vec<f64> = alphas.iter().map(|a| rn * (a - campaign.model.alpha())).collect();
    if campaign.mu_known {
        let rel = variance(&sa) / cls.sigma2_alpha - 1.0;
        return vec![CheckResult::new(
            "covariance_match",
            Some(n),
            "relative error of var sqrt(n)(alpha_hat - alpha)",
            rel,
            format!("|x| <= {}", th.sigma2_rel),
            rel.abs() <= th.sigma2_rel,
        )];
    }
    let sm: Vec<f64> = mus.iter().map(|m| rn * (m - campaign.model.mu())).collect();
    let emp = [
        [variance(&sa), covariance(&sa, &sm)],
        [covariance(&sm, &sa), variance(&sm)],
    ];
    let names = ["11", "12", "22"];
    [(0, 0), (0, 1), (1, 1)]
        .into_iter()
        .zip(names)
        .map(|((i, j), name)| {
            let rel = emp[i][j] / cls.b_mat[i][j] - 1.0;
            CheckResult::new(
                "covariance_match",
                Some(n),
                format!("relative error of scaled covariance entry {name}"),
                rel,
                format!("|x| <= {}", th.b_rel),
                rel.abs() <= th.b_rel,
            )
        })
        .collect()
}

/// Per-path data for the outlier-component checks.
struct PathData {
    /// `Z_{s+k}` of the first outlier for `k = 0..=horizon`.
    z: Vec<u64>,
    monotone: bool,
    extinct: Option<bool>,
    coupled: bool,
}

fn replicate(campaign: &McCampaign, n: usize, rep: usize) -> Result<Record> {
    let seed = replication_seed(campaign.master_seed, rep as u64);
    let mut cfg = SimConfig::new(campaign.model.clone(), n, seed)?;
    if let Some(p) = &campaign.plan {
        cfg = cfg.with_plan(p.clone())?;
    }
    let y = simulate(&cfg)?;
    let scenario = campaign.scenario();
    let mut rec = Record {
        n,
        rep,
        scenario: campaign.label(),
        alpha_hat: None,
        mu_hat: None,
        theta_hat: [None; 2],
        limit: [None; 2],
        cond_var: [None; 3],
        degenerate: false,
    };
    match estimate(&y, scenario.as_ref(), campaign.mu_eps(), campaign.method) {
        Ok(r) => {
            rec.alpha_hat = Some(r.alpha_hat);
            rec.mu_hat = r.mu_hat;
            for (slot, t) in rec.theta_hat.iter_mut().zip(&r.theta_hat) {
                *slot = Some(*t);
            }
        }
        Err(_) => rec.degenerate = true,
    }
    if let Some(sc) = &scenario {
        if let Ok(law) = conditional_law(&campaign.model, &y, sc) {
            for (slot, l) in rec.limit.iter_mut().zip(&law.limits) {
                *slot = Some(*l);
            }
            rec.cond_var[0] = Some(law.cov[0][0]);
            if law.cov.len() == 2 {
                rec.cond_var[1] = Some(law.cov[0][1]);
                rec.cond_var[2] = Some(law.cov[1][1]);
            }
        }
    }
    Ok(rec)
}

fn path_data(campaign: &McCampaign, n: usize, rep: usize) -> Result<PathData> {
    let th = &campaign.thresholds;
    let plan = campaign.plan.as_ref().expect("validated");
    let seed = replication_seed(campaign.master_seed, rep as u64);
    let cfg = SimConfig::new(campaign.model.clone(), n, seed)?.with_plan(plan.clone())?;
    let d = simulate_innovational(&cfg)?;
    let direct = simulate_innovational_direct(&cfg)?;
    let sum_ok = (0..=n).all(|k| {
        d.y.values()[k] == d.x.values()[k] + d.z.iter().map(|z| z.values()[k]).sum::<u64>()
    });
    let s = plan.outliers()[0].time;
    let z1 = d.z[0].values();
    let monotone = d
        .z
        .iter()
        .zip(plan.outliers())
        .all(|(z, o)| z.values()[o.time..].windows(2).all(|w| w[1] <= w[0]));
    Ok(PathData {
        z: (0..=th.z_horizon as usize)
            .map(|k| z1.get(s + k).copied().unwrap_or(0))
            .collect(),
        monotone,
        extinct: z1.get(s + th.extinction_lag).map(|&v| v == 0),
        coupled: sum_ok && direct == d.y,
    })
}

fn path_checks(campaign: &McCampaign, n: usize, data: &[PathData]) -> Vec<CheckResult> {
    let th = &campaign.thresholds;
    let plan = campaign.plan.as_ref().expect("validated");
    let mut out = Vec::new();
    if campaign.checks.contains(&Check::ZMoments) {
        let s = plan.outliers()[0].time;
        let theta = plan.outliers()[0].size;
        let alpha = campaign.model.alpha();
        if s + th.z_horizon as usize > n {
            out.push(CheckResult::new(
                "z_moments",
                Some(n),
                format!("horizon s + {} exceeds n", th.z_horizon),
                f64::NAN,
                "s + horizon <= n".into(),
                false,
            ));
        } else {
            for k in 0..=th.z_horizon {
                let exact = z_moments(alpha, theta, k);
                let zk: Vec<f64> = data.iter().map(|p| p.z[k as usize] as f64).collect();
                let sq: Vec<f64> = zk.iter().map(|v| v * v).collect();
                let mut items = vec![("E Z", zk, exact.mean), ("E Z^2", sq, exact.second)];
                if let Some(lp) = exact.lag_product {
                    let prod: Vec<f64> = data
                        .iter()
                        .map(|p| (p.z[k as usize - 1] * p.z[k as usize]) as f64)
                        .collect();
                    items.push(("E Z_prev Z", prod, lp));
                }
                for (name, values, target) in items {
                    let se = standard_error(&values);
                    let dev = mean(&values) - target;
                    let passed = if se > 0.0 {
                        dev.abs() <= th.z_se * se
                    } else {
                        dev.abs() <= 1e-12 * target.abs().max(1.0)
                    };
                    out.push(CheckResult::new(
                        "z_moments",
                        Some(n),
                        format!("{name} at k = {k}, standardised deviation"),
                        if se > 0.0 { dev / se } else { dev },
                        format!("|x| <= {}", th.z_se),
                        passed,
                    ));
                }
            }
        }
        let monotone = data.iter().filter(|p| p.monotone).count() as f64 / data.len() as f64;
        out.push(CheckResult::new(
            "z_moments",
            Some(n),
            "fraction of paths with non-increasing outlier components",
            monotone,
            "x = 1".into(),
            monotone == 1.0,
        ));
        let extinct: Vec<bool> = data.iter().filter_map(|p| p.extinct).collect();
        let frac = extinct.iter().filter(|&&e| e).count() as f64 / extinct.len().max(1) as f64;
        out.push(CheckResult::new(
            "z_moments",
            Some(n),
            format!("fraction of extinct components {} steps after the outlier", th.extinction_lag),
            frac,
            format!("x > {}", th.extinction_fraction),
            extinct.len() == data.len() && frac > th.extinction_fraction,
        ));
    }
    if campaign.checks.contains(&Check::Decomposition) {
        let coupled = data.iter().filter(|p| p.coupled).count() as f64 / data.len() as f64;
        out.push(CheckResult::new(
            "decomposition",
            Some(n),
            "fraction of paths where decomposition and direct recursion agree",
            coupled,
            "x = 1".into(),
            coupled == 1.0,
        ));
    }
    out
}

/// Runs a campaign on `workers` threads (`None` for the rayon default).
///
/// Estimator failures mark a record as degenerate instead of aborting. The
/// outlier-component checks use the first sample size.
pub fn run_campaign(campaign: &McCampaign, workers: Option<usize>) -> Result<CampaignOutput> {
    campaign.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let reps = campaign.replications;
    let (records, data) = pool.install(|| -> Result<_> {
        let mut records = Vec::with_capacity(reps * campaign.n_values.len());
        for &n in &campaign.n_values {
            let batch: Vec<Record> = (0..reps)
                .into_par_iter()
                .map(|rep| replicate(campaign, n, rep))
                .collect::<Result<_>>()?;
            records.extend(batch);
        }
        let wants_paths = campaign
            .checks
            .iter()
            .any(|c| matches!(c, Check::ZMoments | Check::Decomposition));
        let data: Vec<PathData> = if wants_paths {
            let n = campaign.n_values[0];
            (0..reps)
                .into_par_iter()
                .map(|rep| path_data(campaign, n, rep))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok((records, data))
    })?;
    let mut summary = summarize(campaign, &records);
    if !data.is_empty() {
        summary.path_checks = path_checks(campaign, campaign.n_values[0], &data);
        summary.passed &= summary.path_checks.iter().all(|c| c.passed);
    }
    Ok(CampaignOutput { records, summary })
}
