//! Domain types: model parameters, innovation laws, outlier scenarios and
//! the scenario classification used to dispatch every estimator.
//!
//! Time indexing follows the model directly: `series.values()[k]` is the
//! observation at time `k`, and an outlier at time `s` refers to that entry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a finite probability mass function.
const PMF_MASS_TOL: f64 = 1e-12;

/// Offspring mean of the Bernoulli thinning, restricted to the stable range `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    /// Validates `value` lies in the open interval `(0, 1)`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "offspring mean must lie in (0, 1), got {value}"
            )))
        }
    }

    /// The raw value.
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Law of the innovations: Poisson or a finite probability mass function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationDist {
    /// Poisson with positive mean `lambda`.
    Poisson { lambda: f64 },
    /// Finite support of `(value, probability)` pairs.
    FinitePmf { support: Vec<(u64, f64)> },
}

impl InnovationDist {
    /// Poisson law with mean `lambda > 0`.
    pub fn poisson(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(InnovationDist::Poisson { lambda })
        } else {
            Err(Error::InvalidParameter(format!(
                "poisson mean must be positive, got {lambda}"
            )))
        }
    }

    /// Finite law; probabilities must be non-negative, sum to one and put
    /// positive mass on some positive value.
    pub fn finite_pmf(support: Vec<(u64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidParameter("empty probability mass function".into()));
        }
        if support.iter().any(|&(_, p)| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let mass: f64 = support.iter().map(|&(_, p)| p).sum();
        if (mass - 1.0).abs() > PMF_MASS_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {mass}, expected 1"
            )));
        }
        if !support.iter().any(|&(v, p)| v > 0 && p > 0.0) {
            return Err(Error::InvalidParameter(
                "innovation must be non-zero with positive probability".into(),
            ));
        }
        Ok(InnovationDist::FinitePmf { support })
    }

    /// `E eps`.
    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// `Var eps`.
    pub fn variance(&self) -> f64 {
        match self {
            InnovationDist::Poisson { lambda } => *lambda,
            InnovationDist::FinitePmf { .. } => {
                let m = self.mean();
                self.raw_moment(2) - m * m
            }
        }
    }

    /// `E eps^3`.
    pub fn third_moment(&self) -> f64 {
        self.raw_moment(3)
    }

    /// Raw moment of order 1, 2 or 3.
    pub fn raw_moment(&self, order: u32) -> f64 {
        match self {
            InnovationDist::Poisson { lambda } => {
                let l = *lambda;
                match order {
                    0 => 1.0,
                    1 => l,
                    2 => l * l + l,
                    3 => l * l * l + 3.0 * l * l + l,
                    _ => panic!("raw moments above order three are not provided"),
                }
            }
            InnovationDist::FinitePmf { support } => support
                .iter()
                .map(|&(v, p)| p * (v as f64).powi(order as i32))
                .sum(),
        }
    }

    /// Probability generating function `E s^eps` for `s` in `[0, 1]`.
    pub fn pgf(&self, s: f64) -> f64 {
        match self {
            InnovationDist::Poisson { lambda } => (lambda * (s - 1.0)).exp(),
            InnovationDist::FinitePmf { support } => support
                .iter()
                .map(|&(v, p)| p * s.powi(v as i32))
                .sum(),
        }
    }
}

impl fmt::Display for InnovationDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnovationDist::Poisson { lambda } => write!(f, "poisson:{lambda}"),
            InnovationDist::FinitePmf { support } => {
                write!(f, "pmf:")?;
                for (i, (v, p)) in support.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for InnovationDist {
    type Err = Error;

    /// Parses `poisson:<lambda>` or `pmf:<v>:<p>,<v>:<p>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("poisson:") {
            let lambda = rest
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("poisson mean '{rest}': {e}")))?;
            InnovationDist::poisson(lambda)
        } else if let Some(rest) = s.strip_prefix("pmf:") {
            let mut support = Vec::new();
            for item in rest.split(',') {
                let (v, p) = item
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("pmf entry '{item}' is not <value>:<prob>")))?;
                let v = v
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("pmf value '{v}': {e}")))?;
                let p = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("pmf probability '{p}': {e}")))?;
                support.push((v, p));
            }
            InnovationDist::finite_pmf(support)
        } else {
            Err(Error::Parse(format!(
                "innovation '{s}' must be poisson:<lambda> or pmf:<v:p,...>"
            )))
        }
    }
}

/// Law of the initial value: a fixed count or a random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitDist {
    /// Deterministic starting value; consumes no randomness.
    Fixed { value: u64 },
    /// Random starting value drawn from a count law.
    Random { dist: InnovationDist },
}

impl InitDist {
    /// `E X_0`.
    pub fn mean(&self) -> f64 {
        match self {
            InitDist::Fixed { value } => *value as f64,
            InitDist::Random { dist } => dist.mean(),
        }
    }
}

impl Default for InitDist {
    fn default() -> Self {
        InitDist::Fixed { value: 0 }
    }
}

impl fmt::Display for InitDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitDist::Fixed { value } => write!(f, "{value}"),
            InitDist::Random { dist } => write!(f, "{dist}"),
        }
    }
}

impl FromStr for InitDist {
    type Err = Error;

    /// Parses a non-negative integer or an innovation-style law.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(value) = s.parse::<u64>() {
            Ok(InitDist::Fixed { value })
        } else {
            Ok(InitDist::Random {
                dist: s.parse::<InnovationDist>()?,
            })
        }
    }
}

/// A clean INAR(1) model: thinning mean, innovation law and initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub alpha: Alpha,
    pub innovation: InnovationDist,
    pub init: InitDist,
}

impl ModelSpec {
    /// Builds a model after validating `alpha`.
    pub fn new(alpha: f64, innovation: InnovationDist, init: InitDist) -> Result<Self> {
        Ok(ModelSpec {
            alpha: Alpha::new(alpha)?,
            innovation,
            init,
        })
    }

    /// Model with Poisson innovations and a fixed start at zero.
    pub fn poisson(alpha: f64, lambda: f64) -> Result<Self> {
        ModelSpec::new(alpha, InnovationDist::poisson(lambda)?, InitDist::default())
    }

    /// Replaces the initial law.
    pub fn with_init(mut self, init: InitDist) -> Self {
        self.init = init;
        self
    }

    /// Thinning mean as a plain float.
    pub fn alpha(&self) -> f64 {
        self.alpha.get()
    }

    /// Innovation mean.
    pub fn mu(&self) -> f64 {
        self.innovation.mean()
    }

    /// Innovation variance.
    pub fn sigma2(&self) -> f64 {
        self.innovation.variance()
    }
}

/// How outliers enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Observation shifted at the outlier time only.
    Additive,
    /// Innovation shifted at the outlier time; the shift propagates.
    Innovational,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Additive => "additive",
            Family::Innovational => "innovational",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "additive" => Ok(Family::Additive),
            "innovational" => Ok(Family::Innovational),
            other => Err(Error::Parse(format!(
                "family '{other}' must be additive or innovational"
            ))),
        }
    }
}

/// What an estimator knows about the contamination: family, outlier times
/// (sorted, one or two) and whether the innovation mean is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutlierScenario {
    family: Family,
    times: Vec<usize>,
    mu_known: bool,
}

impl OutlierScenario {
    /// Sorts `times` and checks there are one or two distinct positive times.
    pub fn new(family: Family, mut times: Vec<usize>, mu_known: bool) -> Result<Self> {
        times.sort_unstable();
        check_times(&times)?;
        Ok(OutlierScenario {
            family,
            times,
            mu_known,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Outlier times in increasing order.
    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn mu_known(&self) -> bool {
        self.mu_known
    }

    /// Classification tag; a pure function of family, times and `mu_known`.
    pub fn tag(&self) -> ScenarioTag {
        use ScenarioTag::*;
        let m = self.mu_known;
        match (self.family, self.times.as_slice()) {
            (Family::Additive, [_]) => {
                if m {
                    Add1
                } else {
                    Add1M
                }
            }
            (Family::Additive, [a, b]) if *b == a + 1 => {
                if m {
                    Add2Adj
                } else {
                    Add2AdjM
                }
            }
            (Family::Additive, _) => {
                if m {
                    Add2Sep
                } else {
                    Add2SepM
                }
            }
            (Family::Innovational, [_]) => {
                if m {
                    Inn1
                } else {
                    Inn1M
                }
            }
            (Family::Innovational, _) => {
                if m {
                    Inn2
                } else {
                    Inn2M
                }
            }
        }
    }
}

fn check_times(times: &[usize]) -> Result<()> {
    if times.is_empty() || times.len() > 2 {
        return Err(Error::BadTimes(format!(
            "expected one or two outlier times, got {}",
            times.len()
        )));
    }
    if times[0] == 0 {
        return Err(Error::BadTimes("outlier times must be at least 1".into()));
    }
    if times.len() == 2 && times[0] == times[1] {
        return Err(Error::BadTimes("outlier times must be distinct".into()));
    }
    Ok(())
}

/// One outlier with its true size, as used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outlier {
    pub time: usize,
    pub size: u64,
}

/// The true contamination of a simulated path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierPlan {
    family: Family,
    outliers: Vec<Outlier>,
}

impl OutlierPlan {
    /// Sorts by time and checks there are one or two distinct positive times.
    pub fn new(family: Family, mut outliers: Vec<Outlier>) -> Result<Self> {
        outliers.sort_by_key(|o| o.time);
        let times: Vec<usize> = outliers.iter().map(|o| o.time).collect();
        check_times(&times)?;
        Ok(OutlierPlan { family, outliers })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Outliers in increasing time order.
    pub fn outliers(&self) -> &[Outlier] {
        &self.outliers
    }

    pub fn times(&self) -> Vec<usize> {
        self.outliers.iter().map(|o| o.time).collect()
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.outliers.iter().map(|o| o.size).collect()
    }

    /// The estimator-side view: times only, sizes dropped.
    pub fn scenario(&self, mu_known: bool) -> OutlierScenario {
        OutlierScenario {
            family: self.family,
            times: self.times(),
            mu_known,
        }
    }
}

impl FromStr for OutlierPlan {
    type Err = Error;

    /// Parses `<family>:s=<t>:theta=<v>[,s=<t>:theta=<v>]`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("outlier spec '{s}' lacks a family prefix")))?;
        let family: Family = family.parse()?;
        let mut outliers = Vec::new();
        for item in rest.split(',') {
            let mut time = None;
            let mut size = None;
            for field in item.split(':') {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("outlier field '{field}' is not key=value")))?;
                match key.trim() {
                    "s" => {
                        time = Some(value.trim().parse::<usize>().map_err(|e| {
                            Error::Parse(format!("outlier time '{value}': {e}"))
                        })?)
                    }
                    "theta" => {
                        size = Some(value.trim().parse::<u64>().map_err(|e| {
                            Error::Parse(format!("outlier size '{value}': {e}"))
                        })?)
                    }
                    other => return Err(Error::Parse(format!("unknown outlier field '{other}'"))),
                }
            }
            match (time, size) {
                (Some(time), Some(size)) => outliers.push(Outlier { time, size }),
                _ => return Err(Error::Parse(format!("outlier '{item}' needs s= and theta="))),
            }
        }
        OutlierPlan::new(family, outliers)
    }
}

impl fmt::Display for OutlierPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family)?;
        for (i, o) in self.outliers.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "s={}:theta={}", o.time, o.size)?;
        }
        Ok(())
    }
}

/// A non-negative integer path `Y_0, ..., Y_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Series(Vec<u64>);

impl Series {
    /// Requires at least two observations.
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a series needs at least two observations, got {}",
                values.len()
            )));
        }
        Ok(Series(values))
    }

    /// Number of transitions, i.e. the largest time index.
    pub fn n(&self) -> usize {
        self.0.len() - 1
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    /// Observation at time `k` as a float.
    pub fn at(&self, k: usize) -> f64 {
        self.0[k] as f64
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl TryFrom<Vec<u64>> for Series {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Series::new(v)
    }
}

impl From<Series> for Vec<u64> {
    fn from(s: Series) -> Vec<u64> {
        s.0
    }
}

/// The ten estimator scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioTag {
    #[serde(rename = "ADD1")]
    Add1,
    #[serde(rename = "ADD1M")]
    Add1M,
    #[serde(rename = "ADD2SEP")]
    Add2Sep,
    #[serde(rename = "ADD2SEPM")]
    Add2SepM,
    #[serde(rename = "ADD2ADJ")]
    Add2Adj,
    #[serde(rename = "ADD2ADJM")]
    Add2AdjM,
    #[serde(rename = "INN1")]
    Inn1,
    #[serde(rename = "INN1M")]
    Inn1M,
    #[serde(rename = "INN2")]
    Inn2,
    #[serde(rename = "INN2M")]
    Inn2M,
}

impl ScenarioTag {
    /// All tags, in a fixed order.
    pub const ALL: [ScenarioTag; 10] = [
        ScenarioTag::Add1,
        ScenarioTag::Add1M,
        ScenarioTag::Add2Sep,
        ScenarioTag::Add2SepM,
        ScenarioTag::Add2Adj,
        ScenarioTag::Add2AdjM,
        ScenarioTag::Inn1,
        ScenarioTag::Inn1M,
        ScenarioTag::Inn2,
        ScenarioTag::Inn2M,
    ];

    pub fn as_str(self) -> &'static str {
        use ScenarioTag::*;
        match self {
            Add1 => "ADD1",
            Add1M => "ADD1M",
            Add2Sep => "ADD2SEP",
            Add2SepM => "ADD2SEPM",
            Add2Adj => "ADD2ADJ",
            Add2AdjM => "ADD2ADJM",
            Inn1 => "INN1",
            Inn1M => "INN1M",
            Inn2 => "INN2",
            Inn2M => "INN2M",
        }
    }

    pub fn family(self) -> Family {
        use ScenarioTag::*;
        match self {
            Add1 | Add1M | Add2Sep | Add2SepM | Add2Adj | Add2AdjM => Family::Additive,
            Inn1 | Inn1M | Inn2 | Inn2M => Family::Innovational,
        }
    }

    /// True when the innovation mean is estimated jointly.
    pub fn estimates_mu(self) -> bool {
        use ScenarioTag::*;
        matches!(self, Add1M | Add2SepM | Add2AdjM | Inn1M | Inn2M)
    }

    /// Smallest admissible `n` for the given (sorted) outlier times.
    pub fn min_n(self, times: &[usize]) -> usize {
        use ScenarioTag::*;
        let s1 = times[0];
        let last = *times.last().expect("non-empty times");
        match self {
            Add1 => s1 + 1,
            Add1M => (s1 + 1).max(3),
            Add2Sep => last + 1,
            Add2SepM => (last + 1).max(5),
            Add2Adj => s1 + 2,
            Add2AdjM => (s1 + 2).max(3),
            Inn1 => (s1 + 1).max(3),
            Inn1M => s1,
            Inn2 => last.max(3),
            Inn2M => last,
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown scenario tag '{s}'")))
    }
}

/// Classifies the scenario and checks the sample is long enough for it.
///
/// `mu_eps` must be present whenever the scenario treats the innovation mean
/// as known.
pub fn validate_scenario(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
) -> Result<ScenarioTag> {
    if scenario.mu_known() {
        match mu_eps {
            None => return Err(Error::MissingMu),
            Some(m) if !m.is_finite() => {
                return Err(Error::InvalidParameter(format!(
                    "innovation mean must be finite, got {m}"
                )))
            }
            Some(_) => {}
        }
    }
    let tag = scenario.tag();
    let n = series.n();
    let required = tag.min_n(scenario.times());
    if n < required {
        return Err(Error::SampleTooShort {
            tag: tag.to_string(),
            required,
            actual: n,
        });
    }
    let last = *scenario.times().last().expect("non-empty times");
    // An additive outlier also enters the prediction error one step later.
    let needed_after = match tag.family() {
        Family::Additive => 1,
        Family::Innovational => 0,
    };
    if last + needed_after > n {
        return Err(Error::BadTimes(format!(
            "outlier at time {last} needs observations up to {} but n = {n}",
            last + needed_after
        )));
    }
    Ok(tag)
}
