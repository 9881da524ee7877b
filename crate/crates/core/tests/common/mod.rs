//! Helpers shared by the integration tests: seeded sample paths for every
//! scenario and an independent brute-force minimiser of the raw CLS
//! objective.

#![allow(dead_code, clippy::needless_range_loop)]

use inar_outliers::{
    simulate, Family, ModelSpec, Outlier, OutlierPlan, OutlierScenario, ScenarioTag, Series,
    SimConfig,
};

/// One seeded contaminated path with the scenario an estimator sees.
pub struct Sample {
    pub model: ModelSpec,
    pub plan: OutlierPlan,
    pub scenario: OutlierScenario,
    pub series: Series,
    /// `Some(mu)` when the scenario treats the innovation mean as known.
    pub mu_eps: Option<f64>,
}

/// Outlier layout used for each tag in the tests.
pub fn layout(tag: ScenarioTag) -> (Family, Vec<(usize, u64)>) {
    use ScenarioTag::*;
    match tag {
        Add1 | Add1M => (Family::Additive, vec![(50, 10)]),
        Add2Sep | Add2SepM => (Family::Additive, vec![(50, 8), (120, 6)]),
        Add2Adj | Add2AdjM => (Family::Additive, vec![(50, 8), (51, 6)]),
        Inn1 | Inn1M => (Family::Innovational, vec![(40, 8)]),
        Inn2 | Inn2M => (Family::Innovational, vec![(40, 8), (120, 6)]),
    }
}

/// Simulates a path for `tag` from `model`.
pub fn sample_with(model: &ModelSpec, tag: ScenarioTag, n: usize, seed: u64) -> Sample {
    let (family, outliers) = layout(tag);
    let plan = OutlierPlan::new(
        family,
        outliers
            .into_iter()
            .map(|(time, size)| Outlier { time, size })
            .collect(),
    )
    .unwrap();
    let mu_known = !tag.estimates_mu();
    let scenario = plan.scenario(mu_known);
    assert_eq!(scenario.tag(), tag);
    let cfg = SimConfig::new(model.clone(), n, seed)
        .unwrap()
        .with_plan(plan.clone())
        .unwrap();
    let series = simulate(&cfg).unwrap();
    Sample {
        model: model.clone(),
        plan,
        scenario,
        series,
        mu_eps: mu_known.then(|| model.mu()),
    }
}

/// Simulates a path for `tag` with `alpha = 0.5` and Poisson(1) innovations.
pub fn sample(tag: ScenarioTag, n: usize, seed: u64) -> Sample {
    sample_with(&ModelSpec::poisson(0.5, 1.0).unwrap(), tag, n, seed)
}

/// One prediction error of the raw objective, written directly from the
/// contamination definitions.
pub fn raw_residual(
    y: &[u64],
    family: Family,
    times: &[usize],
    k: usize,
    alpha: f64,
    mu: f64,
    theta: &[f64],
) -> f64 {
    let mut r = y[k] as f64 - alpha * y[k - 1] as f64 - mu;
    for (&s, &t) in times.iter().zip(theta) {
        match family {
            Family::Additive => {
                if k == s {
                    r -= t;
                }
                if k == s + 1 {
                    r += alpha * t;
                }
            }
            Family::Innovational => {
                if k == s {
                    r -= t;
                }
            }
        }
    }
    r
}

/// Raw objective `sum_k residual_k^2`.
pub fn raw_objective(
    y: &[u64],
    family: Family,
    times: &[usize],
    alpha: f64,
    mu: f64,
    theta: &[f64],
) -> f64 {
    (1..y.len())
        .map(|k| raw_residual(y, family, times, k, alpha, mu, theta).powi(2))
        .sum()
}

/// Minimiser found by brute force.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub alpha: f64,
    pub mu: f64,
    pub theta: Vec<f64>,
    pub value: f64,
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let d = b.len();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..d {
            let f = a[row][col] / a[col][col];
            for c in col..d {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let s: f64 = (row + 1..d).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// At a fixed thinning mean, minimises the raw objective over the linear
/// coordinates by ordinary least squares. The regressors are read off the
/// raw residual by differencing at unit vectors.
fn linear_fit(
    y: &[u64],
    family: Family,
    times: &[usize],
    mu_eps: Option<f64>,
    alpha: f64,
) -> (f64, f64, Vec<f64>) {
    let m = times.len();
    let d = m + usize::from(mu_eps.is_none());
    let unpack = |v: &[f64]| -> (f64, Vec<f64>) {
        match mu_eps {
            Some(mu) => (mu, v.to_vec()),
            None => (v[0], v[1..].to_vec()),
        }
    };
    let resid = |k: usize, v: &[f64]| {
        let (mu, th) = unpack(v);
        raw_residual(y, family, times, k, alpha, mu, &th)
    };
    let zero = vec![0.0; d];
    let mut ata = vec![vec![0.0; d]; d];
    let mut atb = vec![0.0; d];
    for k in 1..y.len() {
        let base = resid(k, &zero);
        let g: Vec<f64> = (0..d)
            .map(|j| {
                let mut e = zero.clone();
                e[j] = 1.0;
                base - resid(k, &e)
            })
            .collect();
        for i in 0..d {
            atb[i] += g[i] * base;
            for j in 0..d {
                ata[i][j] += g[i] * g[j];
            }
        }
    }
    let v = solve(ata, atb);
    let (mu, th) = unpack(&v);
    let value = raw_objective(y, family, times, alpha, mu, &th);
    (value, mu, th)
}

/// Grid over `alpha' in [-1, 2]` with step `1e-3`, least squares in the
/// remaining coordinates, then golden-section refinement around the best
/// grid point.
pub fn brute_force(series: &Series, scenario: &OutlierScenario, mu_eps: Option<f64>) -> BruteForce {
    let y = series.values();
    let fam = scenario.family();
    let times = scenario.times();
    let mu_fixed = if scenario.mu_known() { mu_eps } else { None };
    let f = |a: f64| linear_fit(y, fam, times, mu_fixed, a).0;
    let step = 1e-3;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=3000 {
        let v = f(-1.0 + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let (mut lo, mut hi) = (
        -1.0 + step * (best.0 as f64 - 1.0),
        -1.0 + step * (best.0 as f64 + 1.0),
    );
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (value, mu, theta) = linear_fit(y, fam, times, mu_fixed, alpha);
    BruteForce {
        alpha,
        mu,
        theta,
        value,
    }
}

/// Central finite difference.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
