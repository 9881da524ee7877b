//! Exact simulation of clean INAR(1) paths and of their additive or
//! innovational contamination.
//!
//! Randomness is laid out so that a path is a pure function of its seed and
//! so that adding or removing outliers never shifts the draws of the clean
//! process. Each time step `k` owns two ChaCha substreams of the path seed:
//! stream `2k` yields the innovation and stream `2k + 1` yields the Bernoulli
//! thinning variables `xi_{k,1}, xi_{k,2}, ...` in index order. Stream `0`
//! is reserved for the initial value.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Distribution};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, InitDist, InnovationDist, ModelSpec, OutlierPlan, Series};

/// Everything needed to simulate one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelSpec,
    /// Largest time index; the path has `n + 1` values.
    pub n: usize,
    pub seed: u64,
    /// Optional contamination applied on top of the clean process.
    pub plan: Option<OutlierPlan>,
}

impl SimConfig {
    /// Clean configuration; requires `n >= 2`.
    pub fn new(model: ModelSpec, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("path length n must be >= 2, got {n}")));
        }
        Ok(SimConfig {
            model,
            n,
            seed,
            plan: None,
        })
    }

    /// Adds a contamination plan; all outlier times must be at most `n`.
    pub fn with_plan(mut self, plan: OutlierPlan) -> Result<Self> {
        if let Some(o) = plan.outliers().iter().find(|o| o.time > self.n) {
            return Err(Error::BadTimes(format!(
                "outlier time {} exceeds path length n = {}",
                o.time, self.n
            )));
        }
        self.plan = Some(plan);
        Ok(self)
    }
}

/// An innovational path split into the clean process and one decaying
/// component per outlier, with `y = x + sum(z)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecomposedPath {
    pub x: Series,
    pub z: Vec<Series>,
    pub y: Series,
}

/// Derives an independent 64-bit seed for replication `rep` of a campaign.
pub fn replication_seed(master_seed: u64, rep: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng.next_u64()
}

enum CountSampler {
    Poisson(Poisson<f64>),
    Pmf(Vec<u64>, WeightedIndex<f64>),
}

impl CountSampler {
    fn new(dist: &InnovationDist) -> Self {
        match dist {
            InnovationDist::Poisson { lambda } => {
                CountSampler::Poisson(Poisson::new(*lambda).expect("validated poisson mean"))
            }
            InnovationDist::FinitePmf { support } => {
                let values = support.iter().map(|&(v, _)| v).collect();
                let weights = WeightedIndex::new(support.iter().map(|&(_, p)| p))
                    .expect("validated probabilities");
                CountSampler::Pmf(values, weights)
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            CountSampler::Poisson(d) => d.sample(rng) as u64,
            CountSampler::Pmf(values, w) => values[w.sample(rng)],
        }
    }
}

/// Per-path random source implementing the stream layout described in the
/// module documentation.
struct PathDraws {
    base: ChaCha8Rng,
    thin: Bernoulli,
    innovation: CountSampler,
    init: Option<CountSampler>,
    init_fixed: u64,
}

impl PathDraws {
    fn new(model: &ModelSpec, seed: u64) -> Self {
        let (init, init_fixed) = match &model.init {
            InitDist::Fixed { value } => (None, *value),
            InitDist::Random { dist } => (Some(CountSampler::new(dist)), 0),
        };
        PathDraws {
            base: ChaCha8Rng::seed_from_u64(seed),
            thin: Bernoulli::new(model.alpha()).expect("validated alpha"),
            innovation: CountSampler::new(&model.innovation),
            init,
            init_fixed,
        }
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(id);
        rng.set_word_pos(0);
        rng
    }

    fn initial(&self) -> u64 {
        match &self.init {
            None => self.init_fixed,
            Some(s) => s.sample(&mut self.stream(0)),
        }
    }

    fn innovation(&self, k: usize) -> u64 {
        self.innovation.sample(&mut self.stream(2 * k as u64))
    }

    fn thinning(&self, k: usize) -> Thinning<'_> {
        Thinning {
            rng: self.stream(2 * k as u64 + 1),
            dist: &self.thin,
        }
    }
}

/// The ordered Bernoulli variables `xi_{k,1}, xi_{k,2}, ...` of one step.
struct Thinning<'a> {
    rng: ChaCha8Rng,
    dist: &'a Bernoulli,
}

impl Thinning<'_> {
    /// Consumes the next `count` variables and returns how many equal one.
    fn take(&mut self, count: u64) -> u64 {
        (0..count).map(|_| self.dist.sample(&mut self.rng) as u64).sum()
    }
}

/// Simulates a clean path `X_0, ..., X_n`.
pub fn simulate_inar1(config: &SimConfig) -> Series {
    let draws = PathDraws::new(&config.model, config.seed);
    let mut x = Vec::with_capacity(config.n + 1);
    x.push(draws.initial());
    for k in 1..=config.n {
        let survivors = draws.thinning(k).take(x[k - 1]);
        x.push(survivors + draws.innovation(k));
    }
    Series::new(x).expect("n >= 2")
}

/// Adds each outlier size to the observation at its time.
pub fn contaminate_additive(x: &Series, plan: &OutlierPlan) -> Result<Series> {
    if plan.family() != Family::Additive {
        return Err(Error::InvalidParameter(
            "additive contamination needs an additive plan".into(),
        ));
    }
    let mut y = x.values().to_vec();
    for o in plan.outliers() {
        if o.time > x.n() {
            return Err(Error::BadTimes(format!(
                "outlier time {} exceeds path length n = {}",
                o.time,
                x.n()
            )));
        }
        y[o.time] += o.size;
    }
    Series::new(y)
}

fn innovational_plan(config: &SimConfig) -> Result<&OutlierPlan> {
    match &config.plan {
        Some(p) if p.family() == Family::Innovational => Ok(p),
        _ => Err(Error::InvalidParameter(
            "innovational simulation needs an innovational plan".into(),
        )),
    }
}

/// Simulates an innovational path through its decomposition.
///
/// The clean process consumes thinning variables `1..=X_{k-1}` of each step,
/// the first outlier component the next `Z^(1)_{k-1}`, and the second the
/// next `Z^(2)_{k-1}`, so `y` coincides with the direct recursion driven by
/// the same variables.
pub fn simulate_innovational(config: &SimConfig) -> Result<DecomposedPath> {
    let plan = innovational_plan(config)?;
    let draws = PathDraws::new(&config.model, config.seed);
    let n = config.n;
    let outliers = plan.outliers();
    let mut x = Vec::with_capacity(n + 1);
    let mut z = vec![Vec::with_capacity(n + 1); outliers.len()];
    x.push(draws.initial());
    for zi in z.iter_mut() {
        zi.push(0);
    }
    for k in 1..=n {
        let mut thin = draws.thinning(k);
        x.push(thin.take(x[k - 1]) + draws.innovation(k));
        for (o, zi) in outliers.iter().zip(z.iter_mut()) {
            let prev = zi[k - 1];
            let next = if k < o.time {
                0
            } else if k == o.time {
                o.size
            } else {
                thin.take(prev)
            };
            zi.push(next);
        }
    }
    let y: Vec<u64> = (0..=n)
        .map(|k| x[k] + z.iter().map(|zi| zi[k]).sum::<u64>())
        .collect();
    Ok(DecomposedPath {
        x: Series::new(x)?,
        z: z.into_iter().map(Series::new).collect::<Result<_>>()?,
        y: Series::new(y)?,
    })
}

/// Simulates an innovational path through the direct recursion
/// `Y_k = sum_{j <= Y_{k-1}} xi_{k,j} + eps_k + sum_i [k = s_i] theta_i`.
pub fn simulate_innovational_direct(config: &SimConfig) -> Result<Series> {
    let plan = innovational_plan(config)?;
    let draws = PathDraws::new(&config.model, config.seed);
    let mut y = Vec::with_capacity(config.n + 1);
    y.push(draws.initial());
    for k in 1..=config.n {
        let shift: u64 = plan
            .outliers()
            .iter()
            .filter(|o| o.time == k)
            .map(|o| o.size)
            .sum();
        y.push(draws.thinning(k).take(y[k - 1]) + draws.innovation(k) + shift);
    }
    Series::new(y)
}

/// Simulates the observed path for any configuration.
pub fn simulate(config: &SimConfig) -> Result<Series> {
    match &config.plan {
        None => Ok(simulate_inar1(config)),
        Some(p) => match p.family() {
            Family::Additive => contaminate_additive(&simulate_inar1(config), p),
            Family::Innovational => Ok(simulate_innovational(config)?.y),
        },
    }
}
