//! Result types returned by the estimators and the asymptotic-law routines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OutlierScenario, ScenarioTag};

/// Default bound on the max-norm of the objective gradient at a reported optimum.
pub const GRADIENT_TOL: f64 = 1e-8;

/// How the profile objective is minimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Uniform grid over `[-1, 2]`, golden-section refinement, Newton polish.
    #[default]
    Grid,
    /// Real roots of the numerator of the profile derivative, Newton polish.
    Poly,
    /// Closed-form normal equations (innovational and clean scenarios).
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Grid => "grid",
            Method::Poly => "poly",
            Method::ClosedForm => "closed_form",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grid" => Ok(Method::Grid),
            "poly" => Ok(Method::Poly),
            other => Err(Error::Parse(format!("method '{other}' must be grid or poly"))),
        }
    }
}

/// Diagnostics of the minimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerInfo {
    pub method: Method,
    /// Objective evaluations (grid and refinement) or Newton steps.
    pub iterations: usize,
    /// Interval of the thinning mean that was searched, if any.
    pub bracket: Option<(f64, f64)>,
}

/// Point estimates with the evidence that they are a strict minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// `None` for the outlier-free model.
    pub tag: Option<ScenarioTag>,
    pub scenario: Option<OutlierScenario>,
    pub alpha_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_hat: Option<f64>,
    pub theta_hat: Vec<f64>,
    /// Objective value at the estimate.
    pub objective: f64,
    pub optimizer: OptimizerInfo,
    /// Leading principal minors of the objective Hessian at the estimate.
    pub certificate: Vec<f64>,
    /// Max-norm of the objective gradient at the estimate.
    pub gradient_norm: f64,
}

impl EstimateReport {
    /// True when every certificate minor is positive.
    pub fn certified(&self) -> bool {
        self.certificate.iter().all(|&m| m > 0.0)
    }
}

/// Almost sure limits of the outlier size estimators for a realised path
/// and their conditional asymptotic covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub limits: Vec<f64>,
    /// Row-major square matrix, one row per outlier.
    pub cov: Vec<Vec<f64>>,
    pub sigma2_alpha: f64,
}
