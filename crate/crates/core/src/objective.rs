//! The conditional least squares objective of every outlier scenario,
//! evaluated term by term together with its gradient and Hessian.
//!
//! Parameters are ordered as `(alpha', [mu'], theta'_1, [theta'_2])`, the
//! innovation mean being present only when it is estimated. For an additive
//! outlier at time `s` the one-step prediction error at time `k` is
//! `y_k - alpha' y_{k-1} - mu - sum_i theta'_i ([k = s_i] - alpha' [k - 1 = s_i])`;
//! for an innovational outlier the bracket reduces to `[k = s_i]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{Family, OutlierScenario, Series};

/// A point in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    /// Present only for scenarios that estimate the innovation mean.
    pub mu: Option<f64>,
    pub theta: Vec<f64>,
}

impl Params {
    /// Flattens to `(alpha, [mu], theta...)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.alpha];
        v.extend(self.mu);
        v.extend(&self.theta);
        v
    }
}

/// Residual of one step together with its first and second derivatives.
struct Term {
    r: f64,
    grad: Vec<f64>,
    /// Non-zero second derivatives `(i, j, value)` with `i < j`.
    cross: Vec<(usize, usize, f64)>,
}

struct Layout<'a> {
    series: &'a Series,
    additive: bool,
    times: &'a [usize],
    mu_fixed: Option<f64>,
}

impl<'a> Layout<'a> {
    fn new(series: &'a Series, scenario: &'a OutlierScenario, mu_eps: Option<f64>) -> Self {
        let mu_fixed = if scenario.mu_known() {
            Some(mu_eps.expect("validated scenario supplies the innovation mean"))
        } else {
            None
        };
        Layout {
            series,
            additive: scenario.family() == Family::Additive,
            times: scenario.times(),
            mu_fixed,
        }
    }

    fn dim(&self) -> usize {
        1 + usize::from(self.mu_fixed.is_none()) + self.times.len()
    }

    fn theta_offset(&self) -> usize {
        1 + usize::from(self.mu_fixed.is_none())
    }

    fn term(&self, k: usize, p: &Params) -> Term {
        let y = self.series.at(k);
        let x = self.series.at(k - 1);
        let a = p.alpha;
        let mu = self
            .mu_fixed
            .unwrap_or_else(|| p.mu.expect("parameters carry the innovation mean"));
        let mut grad = vec![0.0; self.dim()];
        let mut cross = Vec::new();
        let mut r = y - a * x - mu;
        grad[0] = -x;
        if self.mu_fixed.is_none() {
            grad[1] = -1.0;
        }
        let off = self.theta_offset();
        for (i, (&s, &th)) in self.times.iter().zip(&p.theta).enumerate() {
            let here = f64::from(u8::from(k == s));
            let before = if self.additive {
                f64::from(u8::from(k == s + 1))
            } else {
                0.0
            };
            r -= th * (here - a * before);
            grad[0] += th * before;
            grad[off + i] = -(here - a * before);
            if before != 0.0 {
                cross.push((0, off + i, before));
            }
        }
        Term { r, grad, cross }
    }

    fn terms(&'a self, p: &'a Params) -> impl Iterator<Item = Term> + 'a {
        (1..=self.series.n()).map(move |k| self.term(k, p))
    }
}

/// Sum of squared one-step prediction errors.
pub fn objective(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
    params: &Params,
) -> f64 {
    let layout = Layout::new(series, scenario, mu_eps);
    layout.terms(params).map(|t| t.r * t.r).sum()
}

/// Gradient in the parameter order `(alpha', [mu'], theta'...)`.
pub fn gradient(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
    params: &Params,
) -> Vec<f64> {
    let layout = Layout::new(series, scenario, mu_eps);
    let mut g = vec![0.0; layout.dim()];
    for t in layout.terms(params) {
        for (gi, di) in g.iter_mut().zip(&t.grad) {
            *gi += 2.0 * t.r * di;
        }
    }
    g
}

/// Hessian in the parameter order `(alpha', [mu'], theta'...)`.
pub fn hessian(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
    params: &Params,
) -> DMatrix<f64> {
    let layout = Layout::new(series, scenario, mu_eps);
    let d = layout.dim();
    let mut h = DMatrix::zeros(d, d);
    for t in layout.terms(params) {
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] += 2.0 * t.grad[i] * t.grad[j];
            }
        }
        for &(i, j, v) in &t.cross {
            h[(i, j)] += 2.0 * t.r * v;
            h[(j, i)] += 2.0 * t.r * v;
        }
    }
    h
}

/// Leading principal minors of a square matrix.
pub fn leading_minors(h: &DMatrix<f64>) -> Vec<f64> {
    (1..=h.nrows())
        .map(|k| h.view((0, 0), (k, k)).clone_owned().determinant())
        .collect()
}
