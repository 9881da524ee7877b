//! Error taxonomy shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while validating inputs, estimating or
/// running a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or distribution parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The sample is shorter than the estimator of the scenario requires.
    #[error("sample too short for {tag}: need n >= {required}, got n = {actual}")]
    SampleTooShort {
        tag: String,
        required: usize,
        actual: usize,
    },

    /// The scenario treats the innovation mean as known but none was given.
    #[error("scenario treats the innovation mean as known but no value was supplied")]
    MissingMu,

    /// Outlier times are out of range, duplicated or of unsupported count.
    #[error("bad outlier times: {0}")]
    BadTimes(String),

    /// A denominator or leading coefficient that must be positive is not.
    #[error("degenerate sample: {0}")]
    DegenerateDenominator(String),

    /// The profile minimisation did not produce a usable minimiser.
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),

    /// The stationary variance is not positive, so the moment matrix is singular.
    #[error("singular moment matrix: stationary variance {0} is not positive")]
    SingularMoment(f64),

    /// Too many replications of a campaign were degenerate.
    #[error("campaign failed: {0}")]
    CampaignFailed(String),

    /// Malformed textual input (series files, distribution specs, configs).
    #[error("parse error: {0}")]
    Parse(String),

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the data rather than by the caller.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator(_) | Error::OptimizerFailed(_) | Error::SingularMoment(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
