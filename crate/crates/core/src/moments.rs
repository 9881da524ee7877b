//! Closed-form stationary and transient moments, the asymptotic covariance
//! objects of the clean CLS estimators, and the stationary generating
//! function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// A 2x2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

/// First three moments and the variance of the stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub var: f64,
}

/// Asymptotic variance of the CLS estimator of the thinning mean and the
/// joint asymptotic covariance with the innovation mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClsCovariance {
    /// Limit variance of `sqrt(n) (alpha_hat - alpha)` with the innovation mean known.
    pub sigma2_alpha: f64,
    /// Middle matrix of the sandwich.
    pub a_mat: Mat2,
    /// Limit covariance of `sqrt(n) (alpha_hat - alpha, mu_hat - mu)`.
    pub b_mat: Mat2,
}

/// Mean of `X_k` and variance of the martingale difference
/// `M_k = X_k - alpha X_{k-1} - mu` for a chain started with mean `EX_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientMoments {
    pub mean: f64,
    pub martingale_var: f64,
}

/// Stationary moments from the closed forms.
pub fn stationary_moments(model: &ModelSpec) -> StationaryMoments {
    let a = model.alpha();
    let mu = model.mu();
    let s2 = model.sigma2();
    let e3 = model.innovation.third_moment();
    let m1 = mu / (1.0 - a);
    let m2 = (s2 + a * mu) / (1.0 - a * a) + mu * mu / ((1.0 - a) * (1.0 - a));
    let m3 = (e3 - 3.0 * s2 * (1.0 + mu) - mu.powi(3) + 2.0 * mu) / (1.0 - a.powi(3))
        + 3.0 * (s2 + a * mu) / (1.0 - a * a)
        - 2.0 * mu / (1.0 - a)
        + 3.0 * mu * (s2 + a * mu) / ((1.0 - a) * (1.0 - a * a))
        + mu.powi(3) / (1.0 - a).powi(3);
    StationaryMoments {
        m1,
        m2,
        m3,
        var: m2 - m1 * m1,
    }
}

/// Stationary third moment from the recursive representation in terms of
/// the first two stationary moments.
pub fn third_moment_recursive(model: &ModelSpec) -> f64 {
    let a = model.alpha();
    let mu = model.mu();
    let s2 = model.sigma2();
    let e3 = model.innovation.third_moment();
    let m = stationary_moments(model);
    (3.0 * a * a * (1.0 - a) * m.m2
        + 3.0 * a * a * mu * m.m2
        + 3.0 * a * m.m1 * (s2 + mu * mu)
        + e3
        + 3.0 * a * (1.0 - a) * mu * m.m1
        + a * (1.0 - a) * (1.0 - 2.0 * a) * m.m1)
        / (1.0 - a.powi(3))
}

/// Inverse of the stationary second-moment matrix `[[m2, m1], [m1, 1]]`.
fn moment_matrix_inverse(m: &StationaryMoments) -> Result<Mat2> {
    if m.var.is_nan() || m.var <= 0.0 {
        return Err(Error::SingularMoment(m.var));
    }
    let v = m.var;
    Ok([[1.0 / v, -m.m1 / v], [-m.m1 / v, m.m2 / v]])
}

fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Asymptotic variance and covariance of the clean CLS estimators.
pub fn cls_covariance(model: &ModelSpec) -> Result<ClsCovariance> {
    let a = model.alpha();
    let s2 = model.sigma2();
    let m = stationary_moments(model);
    let sigma2_alpha = (a * (1.0 - a) * m.m3 + s2 * m.m2) / (m.m2 * m.m2);
    let w = a * (1.0 - a);
    let a_mat = [
        [w * m.m3 + s2 * m.m2, w * m.m2 + s2 * m.m1],
        [w * m.m2 + s2 * m.m1, w * m.m1 + s2],
    ];
    let inv = moment_matrix_inverse(&m)?;
    let b_mat = mat_mul(&mat_mul(&inv, &a_mat), &inv);
    Ok(ClsCovariance {
        sigma2_alpha,
        a_mat,
        b_mat,
    })
}

/// Transient mean and martingale-difference variance at step `k >= 1`.
pub fn transient_moments(model: &ModelSpec, k: u32, ex0: f64) -> TransientMoments {
    let a = model.alpha();
    let mu = model.mu();
    let s2 = model.sigma2();
    let ak = a.powi(k as i32);
    TransientMoments {
        mean: ak * ex0 + mu * (1.0 - ak) / (1.0 - a),
        martingale_var: a * mu * (1.0 - a.powi(k as i32 - 1)) + ak * (1.0 - a) * ex0 + s2,
    }
}

/// Variance of `(M_s - alpha M_{s+1}) / (1 + alpha^2)`, the deviation of the
/// limit of the single additive outlier estimator from the true size.
pub fn additive_limit_deviation_variance(model: &ModelSpec, s: u32, ex0: f64) -> f64 {
    let a = model.alpha();
    let mu = model.mu();
    let s2 = model.sigma2();
    let as_ = a.powi(s as i32);
    let as3 = a.powi(s as i32 + 3);
    let q = 1.0 + a * a;
    (mu * (a + a.powi(3) - as_ - as3) + s2 * q + (1.0 - a) * (as_ + as3) * ex0) / (q * q)
}

/// Variance of `Y_s - alpha Y_{s-1} - mu` for a single innovational outlier
/// at time `s` and a start with mean `EY_0`.
pub fn innovational_limit_variance(model: &ModelSpec, s: u32, ey0: f64) -> f64 {
    transient_moments(model, s, ey0).martingale_var
}

/// Number of factors of the truncated generating-function product.
pub fn pgf_truncation(model: &ModelSpec, s: f64, truncation_tol: f64) -> usize {
    let a = model.alpha();
    let mu = model.mu();
    let mut k = 0usize;
    let mut bound = (1.0 - s) * mu;
    while bound >= truncation_tol && k < 100_000 {
        k += 1;
        bound *= a;
    }
    k
}

/// Truncated product for `E s^X` under the stationary law, `0 <= s < 1`.
///
/// Factor `k` evaluates the innovation pgf at `(s - 1) alpha^k + 1`; the
/// product stops at the first `K` with `alpha^K (1 - s) mu < truncation_tol`.
pub fn stationary_pgf(model: &ModelSpec, s: f64, truncation_tol: f64) -> f64 {
    stationary_pgf_terms(model, s, pgf_truncation(model, s, truncation_tol))
}

/// The product with exactly `terms` factors after the leading one.
pub fn stationary_pgf_terms(model: &ModelSpec, s: f64, terms: usize) -> f64 {
    let a = model.alpha();
    let mut value = model.innovation.pgf(s);
    let mut ak = 1.0;
    for _ in 0..terms {
        ak *= a;
        value *= model.innovation.pgf((s - 1.0) * ak + 1.0);
    }
    value
}
