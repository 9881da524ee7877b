//! CLS estimation for one or two additive outliers, their almost sure
//! limits and their conditional asymptotic covariances.
//!
//! For a fixed thinning mean `a` the objective is quadratic in the linear
//! block `v = ([mu'], theta'_1, [theta'_2])`. Writing the prediction errors as
//! `c_k(a) - g_k(a)^T v`, the block is profiled out through the normal
//! equations `A_n(a) v = t_n(a)` with `A_n = sum g g^T` and `t_n = sum g c`,
//! leaving the profile `Q(a) = sum c^2 - t_n^T A_n^{-1} t_n`. All these
//! quantities depend on the path only through five sums and the values next
//! to the outlier times, so one profile evaluation costs O(1).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Family, ModelSpec, OutlierScenario, ScenarioTag, Series};
use crate::moments::{cls_covariance, Mat2};
use crate::objective::{self, leading_minors, Params};
use crate::poly::Poly;
use crate::report::{AsymptoticLaw, EstimateReport, Method, OptimizerInfo};

/// Lower end of the grid searched by [`Method::Grid`].
pub const GRID_LO: f64 = -1.0;
/// Upper end of the grid searched by [`Method::Grid`].
pub const GRID_HI: f64 = 2.0;
/// Number of grid points.
pub const GRID_POINTS: usize = 4001;
/// Width at which golden-section refinement stops.
const GOLDEN_WIDTH: f64 = 1e-12;
const NEWTON_STEPS: usize = 25;

#[derive(Debug, Clone, Copy)]
struct SufficientStats {
    n: f64,
    /// `sum y_k^2`
    syy: f64,
    /// `sum y_k y_{k-1}`
    syx: f64,
    /// `sum y_{k-1}^2`
    sxx: f64,
    /// `sum y_k`
    sy: f64,
    /// `sum y_{k-1}`
    sx: f64,
}

impl SufficientStats {
    fn new(series: &Series) -> Self {
        let v = series.values();
        let mut s = SufficientStats {
            n: series.n() as f64,
            syy: 0.0,
            syx: 0.0,
            sxx: 0.0,
            sy: 0.0,
            sx: 0.0,
        };
        for w in v.windows(2) {
            let (x, y) = (w[0] as f64, w[1] as f64);
            s.syy += y * y;
            s.syx += y * x;
            s.sxx += x * x;
            s.sy += y;
            s.sx += x;
        }
        s
    }
}

/// Normal equations of the linear block at a fixed thinning mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// `A_n(a)`
    pub matrix: DMatrix<f64>,
    /// `t_n(a)`
    pub rhs: DVector<f64>,
    /// `sum_k c_k(a)^2`
    pub sum_sq: f64,
}

/// The profile objective `a -> min_v Q_n(a, v)` of an additive scenario.
#[derive(Debug, Clone)]
pub struct ProfileObjective<'a> {
    series: &'a Series,
    tag: ScenarioTag,
    times: Vec<usize>,
    mu_fixed: Option<f64>,
    stats: SufficientStats,
}

impl<'a> ProfileObjective<'a> {
    /// Validates the scenario and precomputes the sufficient statistics.
    pub fn new(
        series: &'a Series,
        scenario: &OutlierScenario,
        mu_eps: Option<f64>,
    ) -> Result<Self> {
        if scenario.family() != Family::Additive {
            return Err(Error::InvalidParameter(
                "profile objective is defined for additive scenarios".into(),
            ));
        }
        let tag = crate::model::validate_scenario(series, scenario, mu_eps)?;
        Ok(ProfileObjective {
            series,
            tag,
            times: scenario.times().to_vec(),
            mu_fixed: if scenario.mu_known() { mu_eps } else { None },
            stats: SufficientStats::new(series),
        })
    }

    pub fn tag(&self) -> ScenarioTag {
        self.tag
    }

    fn estimates_mu(&self) -> bool {
        self.mu_fixed.is_none()
    }

    fn mu0(&self) -> f64 {
        self.mu_fixed.unwrap_or(0.0)
    }

    /// Prediction error `c_k(a)` without outlier terms.
    fn c(&self, k: usize, a: f64) -> f64 {
        self.series.at(k) - a * self.series.at(k - 1) - self.mu0()
    }

    /// Non-zero entries of the column of outlier `i`: `(k, coefficient)`.
    fn column(&self, i: usize, a: f64) -> [(usize, f64); 2] {
        let s = self.times[i];
        [(s, 1.0), (s + 1, -a)]
    }

    /// Normal equations at `a`.
    pub fn system(&self, a: f64) -> LinearSystem {
        let st = &self.stats;
        let m0 = self.mu0();
        let sum_sq = st.syy - 2.0 * a * st.syx + a * a * st.sxx - 2.0 * m0 * (st.sy - a * st.sx)
            + st.n * m0 * m0;
        let off = usize::from(self.estimates_mu());
        let d = off + self.times.len();
        let mut matrix = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        if self.estimates_mu() {
            matrix[(0, 0)] = st.n;
            rhs[0] = st.sy - a * st.sx;
        }
        for i in 0..self.times.len() {
            let ci = self.column(i, a);
            rhs[off + i] = ci.iter().map(|&(k, g)| g * self.c(k, a)).sum();
            if self.estimates_mu() {
                let total: f64 = ci.iter().map(|&(_, g)| g).sum();
                matrix[(0, off + i)] = total;
                matrix[(off + i, 0)] = total;
            }
            for j in 0..self.times.len() {
                let cj = self.column(j, a);
                matrix[(off + i, off + j)] = ci
                    .iter()
                    .flat_map(|&(k, g)| cj.iter().filter(move |&&(l, _)| l == k).map(move |&(_, h)| g * h))
                    .sum();
            }
        }
        LinearSystem {
            matrix,
            rhs,
            sum_sq,
        }
    }

    /// Solves the normal equations at `a`; `None` if `A_n(a)` is singular.
    pub fn backout(&self, a: f64) -> Option<Vec<f64>> {
        let sys = self.system(a);
        self.solve(a, &sys).map(|v| v.iter().copied().collect())
    }

    fn solve(&self, a: f64, sys: &LinearSystem) -> Option<DVector<f64>> {
        if self.tag == ScenarioTag::Add2AdjM {
            let inv = add2adjm_inverse(self.stats.n, a)?;
            return Some(inv * &sys.rhs);
        }
        sys.matrix.clone().lu().solve(&sys.rhs)
    }

    /// Profile value and the minimising linear block at `a`.
    pub fn eval(&self, a: f64) -> Option<(f64, Vec<f64>)> {
        let sys = self.system(a);
        let v = self.solve(a, &sys)?;
        let value = sys.sum_sq - sys.rhs.dot(&v);
        Some((value, v.iter().copied().collect()))
    }

    /// Profile value at `a`, `+inf` where undefined.
    pub fn value(&self, a: f64) -> f64 {
        self.eval(a).map_or(f64::INFINITY, |(q, _)| q)
    }

    /// Full parameter vector for thinning mean `a` and linear block `v`.
    pub fn params(&self, a: f64, v: &[f64]) -> Params {
        if self.estimates_mu() {
            Params {
                alpha: a,
                mu: Some(v[0]),
                theta: v[1..].to_vec(),
            }
        } else {
            Params {
                alpha: a,
                mu: None,
                theta: v.to_vec(),
            }
        }
    }

    /// Numerator and denominator of the profile, `Q(a) = R(a) / D(a)`, with
    /// `D = det A_n` and `R = D sum c^2 - t^T adj(A_n) t`.
    pub fn polynomials(&self) -> (Poly, Poly) {
        let st = &self.stats;
        let m0 = self.mu0();
        let x = Poly::x();
        let sum_sq = Poly::new(vec![
            st.syy - 2.0 * m0 * st.sy + st.n * m0 * m0,
            -2.0 * st.syx + 2.0 * m0 * st.sx,
            st.sxx,
        ]);
        let c = |k: usize| Poly::new(vec![self.series.at(k) - m0, -self.series.at(k - 1)]);
        let column = |i: usize| -> [(usize, Poly); 2] {
            let s = self.times[i];
            [(s, Poly::constant(1.0)), (s + 1, -&x)]
        };
        let off = usize::from(self.estimates_mu());
        let d = off + self.times.len();
        let mut m = vec![vec![Poly::constant(0.0); d]; d];
        let mut t = vec![Poly::constant(0.0); d];
        if self.estimates_mu() {
            m[0][0] = Poly::constant(st.n);
            t[0] = Poly::new(vec![st.sy, -st.sx]);
        }
        for i in 0..self.times.len() {
            let ci = column(i);
            t[off + i] = ci.iter().fold(Poly::constant(0.0), |acc, (k, g)| &acc + &(g * &c(*k)));
            if self.estimates_mu() {
                let total = &ci[0].1 + &ci[1].1;
                m[0][off + i] = total.clone();
                m[off + i][0] = total;
            }
            for j in 0..self.times.len() {
                let cj = column(j);
                let mut e = Poly::constant(0.0);
                for (k, g) in &ci {
                    for (l, h) in &cj {
                        if k == l {
                            e = &e + &(g * h);
                        }
                    }
                }
                m[off + i][off + j] = e;
            }
        }
        let (det, adj) = det_adj(&m);
        let mut quad = Poly::constant(0.0);
        for i in 0..d {
            for j in 0..d {
                quad = &quad + &(&(&t[i] * &adj[i][j]) * &t[j]);
            }
        }
        let deg_d = det.degree().unwrap_or(0);
        let r = (&(&det * &sum_sq) - &quad).truncate(deg_d + 2);
        (r, det)
    }

    /// Coefficient of `a^{deg D + 2}` in `R`; the profile diverges at
    /// `+-inf` exactly when it is positive.
    pub fn leading_coefficient(&self) -> f64 {
        let (r, d) = self.polynomials();
        r.coeff(d.degree().unwrap_or(0) + 2)
    }
}

/// Explicit inverse of `A_n(a)` for the adjacent pair with unknown innovation mean.
pub fn add2adjm_inverse(n: f64, a: f64) -> Option<DMatrix<f64>> {
    let a2 = a * a;
    let det = (1.0 + a + a2) * ((n - 2.0) * a2 - (n - 4.0) * a + n - 2.0);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let u = -(1.0 - a) * (1.0 + a + a2);
    let v = (1.0 - a) * (1.0 - a) + n * a;
    let w = n * (1.0 + a2) - (1.0 - a) * (1.0 - a);
    let top = 1.0 + a2 + a2 * a2;
    Some(DMatrix::from_row_slice(3, 3, &[top, u, u, u, w, v, u, v, w]) / det)
}

/// Determinant and adjugate of a polynomial matrix of size 1 to 3.
fn det_adj(m: &[Vec<Poly>]) -> (Poly, Vec<Vec<Poly>>) {
    let d = m.len();
    let one = Poly::constant(1.0);
    match d {
        1 => (m[0][0].clone(), vec![vec![one]]),
        2 => {
            let det = &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]);
            let adj = vec![
                vec![m[1][1].clone(), -&m[0][1]],
                vec![-&m[1][0], m[0][0].clone()],
            ];
            (det, adj)
        }
        3 => {
            let minor = |r: usize, c: usize| -> Poly {
                let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
                &(&m[rows[0]][cols[0]] * &m[rows[1]][cols[1]])
                    - &(&m[rows[0]][cols[1]] * &m[rows[1]][cols[0]])
            };
            // Adjugate: entry (c, r) is the signed (r, c) cofactor.
            let adj: Vec<Vec<Poly>> = (0..3)
                .map(|c| {
                    (0..3)
                        .map(|r| {
                            let cof = minor(r, c);
                            if (r + c) % 2 == 0 { cof } else { -&cof }
                        })
                        .collect()
                })
                .collect();
            let mut det = Poly::constant(0.0);
            for c in 0..3 {
                det = &det + &(&m[0][c] * &adj[c][0]);
            }
            (det, adj)
        }
        _ => unreachable!("at most three linear parameters"),
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, evals: &mut usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    *evals += 2;
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        *evals += 1;
        if x1 <= lo || x2 >= hi {
            break;
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Grid search over `[GRID_LO, GRID_HI]` followed by golden-section
/// refinement around the best grid point (ties go to the smaller point).
fn minimize_grid(profile: &ProfileObjective<'_>, evals: &mut usize) -> Result<f64> {
    let step = (GRID_HI - GRID_LO) / (GRID_POINTS - 1) as f64;
    let point = |i: usize| GRID_LO + step * i as f64;
    let mut best = (usize::MAX, f64::INFINITY);
    for i in 0..GRID_POINTS {
        let q = profile.value(point(i));
        if q < best.1 {
            best = (i, q);
        }
    }
    *evals += GRID_POINTS;
    if best.0 == usize::MAX {
        return Err(Error::OptimizerFailed("profile undefined on the whole grid".into()));
    }
    let lo = point(best.0.saturating_sub(1));
    let hi = point((best.0 + 1).min(GRID_POINTS - 1));
    let a = golden_section(|a| profile.value(a), lo, hi, evals);
    Ok(if profile.value(a) <= best.1 { a } else { point(best.0) })
}

/// Global minimiser among the real critical points of `R / D`.
fn minimize_poly(profile: &ProfileObjective<'_>, evals: &mut usize) -> Result<f64> {
    let (r, d) = profile.polynomials();
    let numer = &(&r.derivative() * &d) - &(&r * &d.derivative());
    let mut best: Option<(f64, f64)> = None;
    for root in numer.real_roots() {
        let q = profile.value(root);
        *evals += 1;
        if q.is_finite() && best.is_none_or(|(_, bq)| q < bq) {
            best = Some((root, q));
        }
    }
    best.map(|(a, _)| a)
        .ok_or_else(|| Error::OptimizerFailed("profile derivative has no real root".into()))
}

/// Newton iterations on the derivative of the profile.
///
/// The profile derivative equals the partial derivative of the full
/// objective in `alpha'` at the profiled linear block, and its second
/// derivative is the Schur complement of the linear block in the Hessian.
fn newton_polish(
    profile: &ProfileObjective<'_>,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
    mut a: f64,
    steps: &mut usize,
) -> f64 {
    let mut q = profile.value(a);
    for _ in 0..NEWTON_STEPS {
        let Some(v) = profile.backout(a) else { break };
        let p = profile.params(a, &v);
        let g = objective::gradient(profile.series, scenario, mu_eps, &p)[0];
        if g == 0.0 {
            break;
        }
        let h = objective::hessian(profile.series, scenario, mu_eps, &p);
        let d = h.nrows();
        let hvv = h.view((1, 1), (d - 1, d - 1)).clone_owned();
        let hva = h.view((1, 0), (d - 1, 1)).clone_owned();
        let Some(sol) = hvv.lu().solve(&hva) else { break };
        let curvature = h[(0, 0)] - hva.dot(&sol);
        if curvature.is_nan() || curvature <= 0.0 {
            break;
        }
        let next = a - g / curvature;
        let qn = profile.value(next);
        *steps += 1;
        let worse = qn.is_nan() || qn > q + 1e-12 * q.abs().max(1.0);
        if worse || next == a {
            break;
        }
        a = next;
        q = qn;
    }
    a
}

/// CLS estimate for an additive scenario.
pub fn estimate_additive(
    series: &Series,
    scenario: &OutlierScenario,
    mu_eps: Option<f64>,
    method: Method,
) -> Result<EstimateReport> {
    let profile = ProfileObjective::new(series, scenario, mu_eps)?;
    let lead = profile.leading_coefficient();
    if lead.is_nan() || lead <= 0.0 {
        return Err(Error::DegenerateDenominator(format!(
            "leading coefficient of the profile numerator is {lead}"
        )));
    }
    let mut iterations = 0;
    let (start, bracket) = match method {
        Method::Grid => (minimize_grid(&profile, &mut iterations)?, Some((GRID_LO, GRID_HI))),
        Method::Poly => (minimize_poly(&profile, &mut iterations)?, None),
        Method::ClosedForm => {
            return Err(Error::InvalidParameter(
                "additive scenarios have no closed-form estimator".into(),
            ))
        }
    };
    let a = newton_polish(&profile, scenario, mu_eps, start, &mut iterations);
    let (_, v) = profile
        .eval(a)
        .ok_or_else(|| Error::OptimizerFailed(format!("normal equations singular at {a}")))?;
    let params = profile.params(a, &v);
    let objective_value = objective::objective(series, scenario, mu_eps, &params);
    let grad = objective::gradient(series, scenario, mu_eps, &params);
    let hess = objective::hessian(series, scenario, mu_eps, &params);
    Ok(EstimateReport {
        tag: Some(profile.tag()),
        scenario: Some(scenario.clone()),
        alpha_hat: a,
        mu_hat: params.mu,
        theta_hat: params.theta,
        objective: objective_value,
        optimizer: OptimizerInfo {
            method,
            iterations,
            bracket,
        },
        certificate: leading_minors(&hess),
        gradient_norm: grad.iter().fold(0.0, |m, g| m.max(g.abs())),
    })
}

fn require_after(series: &Series, time: usize) -> Result<()> {
    if time > series.n() {
        Err(Error::BadTimes(format!(
            "limit needs the observation at time {time} but n = {}",
            series.n()
        )))
    } else {
        Ok(())
    }
}

fn single_limit(alpha: f64, mu: f64, series: &Series, s: usize) -> f64 {
    let q = 1.0 + alpha * alpha;
    series.at(s) - alpha / q * (series.at(s - 1) + series.at(s + 1)) - (1.0 - alpha) / q * mu
}

/// Almost sure limits of the outlier size estimators given the realised path.
pub fn additive_limit_values(
    alpha: f64,
    mu_eps: f64,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<Vec<f64>> {
    let tag = scenario.tag();
    let times = scenario.times();
    match tag {
        ScenarioTag::Add2Adj | ScenarioTag::Add2AdjM => {
            let s = times[0];
            require_after(series, s + 2)?;
            let a = alpha;
            let (a2, a3) = (a * a, a * a * a);
            let den = 1.0 + a2 + a2 * a2;
            let (before, after) = (series.at(s - 1), series.at(s + 2));
            let shift = (1.0 - a3) * mu_eps;
            Ok(vec![
                series.at(s) + (-a * (1.0 + a2) * before - a2 * after - shift) / den,
                series.at(s + 1) + (-a2 * before - a * (1.0 + a2) * after - shift) / den,
            ])
        }
        ScenarioTag::Add1 | ScenarioTag::Add1M | ScenarioTag::Add2Sep | ScenarioTag::Add2SepM => {
            times
                .iter()
                .map(|&s| {
                    require_after(series, s + 1)?;
                    Ok(single_limit(alpha, mu_eps, series, s))
                })
                .collect()
        }
        _ => Err(Error::InvalidParameter(format!(
            "{tag} is not an additive scenario"
        ))),
    }
}

/// Sensitivity of a single separated limit to the thinning mean.
fn separated_alpha_row(alpha: f64, mu: f64, series: &Series, s: usize) -> f64 {
    let a = alpha;
    let q = 1.0 + a * a;
    ((a * a - 1.0) * (series.at(s - 1) + series.at(s + 1)) + (1.0 + 2.0 * a - a * a) * mu) / (q * q)
}

/// Sensitivities of the adjacent-pair limits to the thinning mean.
fn adjacent_alpha_rows(alpha: f64, mu: f64, series: &Series, s: usize) -> [f64; 2] {
    let a = alpha;
    let a2 = a * a;
    let den = 1.0 + a2 + a2 * a2;
    let own = (a2 - 1.0) * (a2 * a2 + 3.0 * a2 + 1.0);
    let other = 2.0 * a * (a2 * a2 - 1.0);
    let level = a * (2.0 - a) * (1.0 + a + a2).powi(2) * mu;
    let (before, after) = (series.at(s - 1), series.at(s + 2));
    [
        (own * before + other * after + level) / (den * den),
        (other * before + own * after + level) / (den * den),
    ]
}

/// `C M C^T` for a `k x 2` matrix `C` and symmetric `M`.
fn sandwich(rows: &[[f64; 2]], m: &Mat2) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|ri| {
            rows.iter()
                .map(|rj| {
                    let mut acc = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            acc += ri[p] * m[p][q] * rj[q];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn outer(e: &[f64], scale: f64) -> Vec<Vec<f64>> {
    e.iter()
        .map(|ei| e.iter().map(|ej| scale * ei * ej).collect())
        .collect()
}

/// Limits and conditional asymptotic covariance of
/// `sqrt(n) (theta_hat - lim theta_hat)` for an additive scenario, given the
/// realised path values next to the outlier times.
pub fn additive_conditional_law(
    model: &ModelSpec,
    series: &Series,
    scenario: &OutlierScenario,
) -> Result<AsymptoticLaw> {
    let alpha = model.alpha();
    let mu = model.mu();
    let limits = additive_limit_values(alpha, mu, series, scenario)?;
    let cov_parts = cls_covariance(model)?;
    let s2a = cov_parts.sigma2_alpha;
    let b = cov_parts.b_mat;
    let times = scenario.times();
    let q = 1.0 + alpha * alpha;
    let mu_row = -(1.0 - alpha) / q;
    let cov = match scenario.tag() {
        ScenarioTag::Add1 => {
            let e = separated_alpha_row(alpha, mu, series, times[0]);
            vec![vec![s2a * e * e]]
        }
        ScenarioTag::Add2Sep => {
            let e: Vec<f64> = times
                .iter()
                .map(|&s| separated_alpha_row(alpha, mu, series, s))
                .collect();
            outer(&e, s2a)
        }
        ScenarioTag::Add1M | ScenarioTag::Add2SepM => {
            let rows: Vec<[f64; 2]> = times
                .iter()
                .map(|&s| [separated_alpha_row(alpha, mu, series, s), mu_row])
                .collect();
            sandwich(&rows, &b)
        }
        ScenarioTag::Add2Adj => outer(&adjacent_alpha_rows(alpha, mu, series, times[0]), s2a),
        ScenarioTag::Add2AdjM => {
            let f = adjacent_alpha_rows(alpha, mu, series, times[0]);
            let a2 = alpha * alpha;
            let m = (alpha.powi(3) - 1.0) / (1.0 + a2 + a2 * a2);
            sandwich(&[[f[0], m], [f[1], m]], &b)
        }
        tag => {
            return Err(Error::InvalidParameter(format!(
                "{tag} is not an additive scenario"
            )))
        }
    };
    Ok(AsymptoticLaw {
        limits,
        cov,
        sigma2_alpha: s2a,
    })
}
