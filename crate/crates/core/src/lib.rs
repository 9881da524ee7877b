//! Simulation and conditional least squares estimation for INAR(1) count
//! series contaminated by additive or innovational outliers.
//!
//! The crate covers
//! - exact simulation of clean and contaminated paths ([`simulator`]),
//! - stationary, transient and asymptotic moment formulas ([`moments`]),
//! - CLS estimators for the clean model and for the ten outlier scenarios
//!   ([`baseline`], [`additive`], [`innovational`], dispatched by
//!   [`estimate()`]),
//! - a deterministic Monte Carlo harness ([`mc`], behind the default `mc`
//!   feature).

pub mod additive;
pub mod baseline;
pub mod error;
pub mod estimate;
pub mod innovational;
pub mod io;
#[cfg(feature = "mc")]
pub mod mc;
pub mod model;
pub mod moments;
pub mod objective;
pub mod poly;
pub mod report;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::{conditional_law, estimate, limit_values};
pub use model::{
    Alpha, Family, InitDist, InnovationDist, ModelSpec, Outlier, OutlierPlan, OutlierScenario,
    ScenarioTag, Series,
};
pub use report::{AsymptoticLaw, EstimateReport, Method, OptimizerInfo};
pub use simulator::{simulate, SimConfig};
