//! Browser bindings: stationary moments, path simulation and estimation.
//!
//! Each operation has a plain Rust form returning `Result<String, String>`
//! with a JSON payload, and a `wasm_bindgen` export that forwards to it.

use inar_outliers::io::{read_series, series_to_json};
use inar_outliers::moments::{cls_covariance, stationary_moments};
use inar_outliers::{
    estimate, simulate, Family, InitDist, InnovationDist, Method, ModelSpec, OutlierPlan,
    OutlierScenario, SimConfig,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest path length the page will simulate.
pub const MAX_N: usize = 200_000;

#[derive(Serialize)]
struct MomentsOut {
    m1: f64,
    m2: f64,
    m3: f64,
    var: f64,
    sigma2_alpha: f64,
    a_mat: [[f64; 2]; 2],
    b_mat: [[f64; 2]; 2],
}

fn model(alpha: f64, innov: &str, x0: &str) -> Result<ModelSpec, String> {
    let innovation: InnovationDist = innov.parse().map_err(|e| format!("{e}"))?;
    let init: InitDist = x0.parse().map_err(|e| format!("{e}"))?;
    ModelSpec::new(alpha, innovation, init).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Stationary moments and asymptotic covariances as a JSON object.
pub fn moments_json(alpha: f64, innov: &str) -> Result<String, String> {
    let m = model(alpha, innov, "0")?;
    let s = stationary_moments(&m);
    let c = cls_covariance(&m).map_err(|e| e.to_string())?;
    to_json(&MomentsOut {
        m1: s.m1,
        m2: s.m2,
        m3: s.m3,
        var: s.var,
        sigma2_alpha: c.sigma2_alpha,
        a_mat: c.a_mat,
        b_mat: c.b_mat,
    })
}

/// Simulated path as a JSON array. An empty `outliers` string means a
/// clean path; otherwise it uses the `<family>:s=<t>:theta=<v>` syntax.
pub fn simulate_json(
    alpha: f64,
    innov: &str,
    x0: &str,
    n: usize,
    seed: u64,
    outliers: &str,
) -> Result<String, String> {
    if n > MAX_N {
        return Err(format!("n = {n} exceeds the page limit of {MAX_N}"));
    }
    let mut cfg = SimConfig::new(model(alpha, innov, x0)?, n, seed).map_err(|e| e.to_string())?;
    if !outliers.trim().is_empty() {
        let plan: OutlierPlan = outliers.parse().map_err(|e| format!("{e}"))?;
        cfg = cfg.with_plan(plan).map_err(|e| e.to_string())?;
    }
    let y = simulate(&cfg).map_err(|e| e.to_string())?;
    Ok(series_to_json(&y))
}

/// Estimate report as JSON.
///
/// `series` is CSV or a JSON array. `family` is `none`, `additive` or
/// `innovational`; `times` lists the outlier times separated by commas; a
/// non-finite `mu` means the innovation mean is estimated.
pub fn estimate_json(
    series: &str,
    family: &str,
    times: &str,
    mu: f64,
    method: &str,
) -> Result<String, String> {
    let y = read_series(series).map_err(|e| e.to_string())?;
    let mu = mu.is_finite().then_some(mu);
    let method: Method = method.parse().map_err(|e| format!("{e}"))?;
    let scenario = match family.trim() {
        "none" | "" => None,
        other => {
            let family: Family = other.parse().map_err(|e| format!("{e}"))?;
            let times = times
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<usize>().map_err(|e| format!("time '{t}': {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            Some(OutlierScenario::new(family, times, mu.is_some()).map_err(|e| e.to_string())?)
        }
    };
    let report = estimate(&y, scenario.as_ref(), mu, method).map_err(|e| e.to_string())?;
    to_json(&report)
}

/// `moments_json` for JavaScript.
#[wasm_bindgen]
pub fn moments(alpha: f64, innov: &str) -> Result<String, JsError> {
    moments_json(alpha, innov).map_err(|e| JsError::new(&e))
}

/// `simulate_json` for JavaScript; the seed arrives as a double.
#[wasm_bindgen]
pub fn simulate_path(
    alpha: f64,
    innov: &str,
    x0: &str,
    n: usize,
    seed: f64,
    outliers: &str,
) -> Result<String, JsError> {
    simulate_json(alpha, innov, x0, n, seed as u64, outliers).map_err(|e| JsError::new(&e))
}

/// `estimate_json` for JavaScript.
#[wasm_bindgen]
pub fn estimate_series(
    series: &str,
    family: &str,
    times: &str,
    mu: f64,
    method: &str,
) -> Result<String, JsError> {
    estimate_json(series, family, times, mu, method).map_err(|e| JsError::new(&e))
}
