//! Scenario dispatch over the estimators and asymptotic laws.

use crate::additive::{additive_conditional_law, additive_limit_values, estimate_additive};
use crate::baseline::estimate_clean;
use crate::error::Result;
use crate::innovational::{
    estimate_innovational, innovational_conditional_law, innovational_limit_values,
};
use crate::model::{Family, ModelSpec, OutlierScenario, Series};
use crate::report::{AsymptoticLaw, EstimateReport, Method};

/// Estimates the parameters of any scenario; `None` means no outliers.
///
/// `method` only matters for additive scenarios; the other estimators are
/// closed form.
pub fn estimate(
    series: &Series,
    scenario: Option<&OutlierScenario>,
    mu_eps: Option<f64>,
    method: Method,
) -> Result<EstimateReport> {
    match scenario {
        None => estimate_clean(series, mu_eps),
        Some(sc) => match sc.family() {
            Family::Additive => estimate_additive(series, sc, mu_eps, method),
            Family::Innovational => estimate_innovational(series, sc, mu_eps),
        },
    }
}

/// Almost sure limits of the size estimators for the realised path.
pub fn limit_values(
    alpha: f64,
    mu_eps: f64,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<Vec<f64>> {
    match scenario.family() {
        Family::Additive => additive_limit_values(alpha, mu_eps, series, scenario),
        Family::Innovational => innovational_limit_values(alpha, mu_eps, series, scenario),
    }
}

/// Limits and conditional asymptotic covariance for any scenario.
pub fn conditional_law(
    model: &ModelSpec,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<AsymptoticLaw> {
    match scenario.family() {
        Family::Additive => additive_conditional_law(model, series, scenario),
        Family::Innovational => innovational_conditional_law(model, series, scenario),
    }
}
