//! Closed-form CLS estimation for one or two innovational outliers, their
//! almost sure limits, conditional asymptotic covariances and the moments of
//! the decaying outlier component.
//!
//! An innovational outlier only shifts the conditional mean at its own time,
//! so its prediction error is fitted exactly and the remaining parameters
//! solve the clean normal equations over the steps `k` not equal to any
//! outlier time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_scenario, Family, ModelSpec, OutlierScenario, ScenarioTag, Series};
use crate::moments::cls_covariance;
use crate::objective::{self, leading_minors, Params};
use crate::report::{AsymptoticLaw, EstimateReport, Method, OptimizerInfo};

/// Moments of the outlier component `k` steps after the outlier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZMoments {
    /// `E Z_{s+k}`
    pub mean: f64,
    /// `E Z_{s+k}^2`
    pub second: f64,
    /// `E Z_{s+k-1} Z_{s+k}`, defined for `k >= 1`.
    pub lag_product: Option<f64>,
}

/// Moments of the outlier component of size `theta` after `k` steps.
pub fn z_moments(alpha: f64, theta: u64, k: u32) -> ZMoments {
    let th = theta as f64;
    let second = |k: u32| {
        let ak = alpha.powi(k as i32);
        th * th * ak * ak - th * ak * (ak - 1.0)
    };
    ZMoments {
        mean: th * alpha.powi(k as i32),
        second: second(k),
        lag_product: (k >= 1).then(|| alpha * second(k - 1)),
    }
}

/// Sums over the steps `k = 1..=n` that are not outlier times.
struct ExcludedSums {
    m: f64,
    sxy: f64,
    sxx: f64,
    sy: f64,
    sx: f64,
}

impl ExcludedSums {
    fn new(series: &Series, times: &[usize]) -> Self {
        let mut s = ExcludedSums {
            m: 0.0,
            sxy: 0.0,
            sxx: 0.0,
            sy: 0.0,
            sx: 0.0,
        };
        for k in (1..=series.n()).filter(|k| !times.contains(k)) {
            let (x, y) = (series.at(k - 1), series.at(k));
            s.m += 1.0;
            s.sxy += x * y;
            s.sxx += x * x;
            s.sy += y;
            s.sx += x;
        }
        s
    }
}

/// CLS estimate for an innovational scenario.
pub fn estimate_innovational(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
) -> Result<EstimateReport> {
    if scenario.family() != Family::Innovational {
        return Err(Error::InvalidParameter(
            "innovational estimator needs an innovational scenario".into(),
        ));
    }
    let tag = validate_scenario(series, scenario, mu_eps)?;
    let times = scenario.times();
    let s = ExcludedSums::new(series, times);
    let (alpha, mu_hat, mu) = if scenario.mu_known() {
        let mu = mu_eps.expect("validated");
        if s.sxx.is_nan() || s.sxx <= 0.0 {
            return Err(Error::DegenerateDenominator(
                "sum of squared lagged values outside the outlier times is zero".into(),
            ));
        }
        ((s.sxy - mu * s.sx) / s.sxx, None, mu)
    } else {
        let d = s.m * s.sxx - s.sx * s.sx;
        if d.is_nan() || d <= 0.0 {
            return Err(Error::DegenerateDenominator(format!(
                "lagged values outside the outlier times have no spread (D_n = {d})"
            )));
        }
        let alpha = (s.m * s.sxy - s.sy * s.sx) / d;
        let mu = (s.sxx * s.sy - s.sx * s.sxy) / d;
        (alpha, Some(mu), mu)
    };
    let theta: Vec<f64> = times
        .iter()
        .map(|&t| series.at(t) - alpha * series.at(t - 1) - mu)
        .collect();
    let params = Params {
        alpha,
        mu: mu_hat,
        theta,
    };
    let grad = objective::gradient(series, scenario, mu_eps, &params);
    let hess = objective::hessian(series, scenario, mu_eps, &params);
    Ok(EstimateReport {
        tag: Some(tag),
        scenario: Some(scenario.clone()),
        alpha_hat: alpha,
        mu_hat,
        objective: objective::objective(series, scenario, mu_eps, &params),
        theta_hat: params.theta,
        optimizer: OptimizerInfo {
            method: Method::ClosedForm,
            iterations: 0,
            bracket: None,
        },
        certificate: leading_minors(&hess),
        gradient_norm: grad.iter().fold(0.0, |m, g| m.max(g.abs())),
    })
}

/// Almost sure limits `Y_{s_i} - alpha Y_{s_i - 1} - mu` of the size estimators.
pub fn innovational_limit_values(
    alpha: f64,
    mu_eps: f64,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<Vec<f64>> {
    scenario
        .times()
        .iter()
        .map(|&s| {
            if s > series.n() {
                Err(Error::BadTimes(format!(
                    "outlier time {s} exceeds n = {}",
                    series.n()
                )))
            } else {
                Ok(series.at(s) - alpha * series.at(s - 1) - mu_eps)
            }
        })
        .collect()
}

/// Limits and conditional asymptotic covariance of
/// `sqrt(n) (theta_hat - lim theta_hat)` given the values preceding the
/// outlier times.
///
/// With the innovation mean estimated, each row of the sensitivity matrix is
/// `(Y_{s_i - 1}, 1)`, so the single-outlier variance is
/// `(Y_{s-1}, 1) B (Y_{s-1}, 1)^T`.
pub fn innovational_conditional_law(
    model: &ModelSpec,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<AsymptoticLaw> {
    let alpha = model.alpha();
    let limits = innovational_limit_values(alpha, model.mu(), series, scenario)?;
    let c = cls_covariance(model)?;
    let before: Vec<f64> = scenario.times().iter().map(|&s| series.at(s - 1)).collect();
    let cov = match scenario.tag() {
        ScenarioTag::Inn1 | ScenarioTag::Inn2 => before
            .iter()
            .map(|yi| before.iter().map(|yj| c.sigma2_alpha * yi * yj).collect())
            .collect(),
        ScenarioTag::Inn1M | ScenarioTag::Inn2M => {
            let b = c.b_mat;
            before
                .iter()
                .map(|&yi| {
                    before
                        .iter()
                        .map(|&yj| {
                            yi * yj * b[0][0] + yi * b[0][1] + yj * b[1][0] + b[1][1]
                        })
                        .collect()
                })
                .collect()
        }
        tag => {
            return Err(Error::InvalidParameter(format!(
                "{tag} is not an innovational scenario"
            )))
        }
    };
    Ok(AsymptoticLaw {
        limits,
        cov,
        sigma2_alpha: c.sigma2_alpha,
    })
}
