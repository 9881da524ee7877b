//! Additive-outlier estimation: hand values, back-out systems, polynomial
//! structure, brute-force agreement, limits and conditional laws.

mod common;

use approx::assert_relative_eq;
use common::{brute_force, derivative, raw_objective, sample, sample_with};
use inar_outliers::additive::{
    add2adjm_inverse, additive_conditional_law, additive_limit_values, estimate_additive,
    ProfileObjective,
};
use inar_outliers::moments::{additive_limit_deviation_variance, cls_covariance};
use inar_outliers::objective::{self, Params};
use inar_outliers::simulator::{simulate_inar1, contaminate_additive};
use inar_outliers::{
    Error, Family, Method, ModelSpec, Outlier, OutlierPlan, OutlierScenario, ScenarioTag, Series,
    SimConfig,
};

const ADDITIVE: [ScenarioTag; 6] = [
    ScenarioTag::Add1,
    ScenarioTag::Add1M,
    ScenarioTag::Add2Sep,
    ScenarioTag::Add2SepM,
    ScenarioTag::Add2Adj,
    ScenarioTag::Add2AdjM,
];

fn scenario(times: Vec<usize>, mu_known: bool) -> OutlierScenario {
    OutlierScenario::new(Family::Additive, times, mu_known).unwrap()
}

fn series(v: &[u64]) -> Series {
    Series::new(v.to_vec()).unwrap()
}

#[test]
fn single_outlier_objective_hand_value() {
    let y = series(&[1, 2, 8, 4]);
    let sc = scenario(vec![2], true);
    let p = Params {
        alpha: 0.0,
        mu: None,
        theta: vec![7.0],
    };
    assert_eq!(objective::objective(&y, &sc, Some(1.0), &p), 10.0);
}

#[test]
fn back_out_solves_reference_systems_for_every_alpha() {
    for &tag in &ADDITIVE {
        let smp = sample(tag, 200, 3);
        let prof = ProfileObjective::new(&smp.series, &smp.scenario, smp.mu_eps).unwrap();
        let n = smp.series.n() as f64;
        let y = |k: usize| smp.series.at(k);
        let t = smp.scenario.times();
        for a in [-0.7, 0.0, 0.3, 0.5, 1.4] {
            let sys = prof.system(a);
            let q = 1.0 + a * a;
            // Reference matrices for each scenario, written out by hand.
            let expected: Vec<Vec<f64>> = match tag {
                ScenarioTag::Add1 => vec![vec![q]],
                ScenarioTag::Add1M => vec![vec![n, 1.0 - a], vec![1.0 - a, q]],
                ScenarioTag::Add2Sep => vec![vec![q, 0.0], vec![0.0, q]],
                ScenarioTag::Add2Adj => vec![vec![q, -a], vec![-a, q]],
                ScenarioTag::Add2SepM => vec![
                    vec![n, 1.0 - a, 1.0 - a],
                    vec![1.0 - a, q, 0.0],
                    vec![1.0 - a, 0.0, q],
                ],
                ScenarioTag::Add2AdjM => vec![
                    vec![n, 1.0 - a, 1.0 - a],
                    vec![1.0 - a, q, -a],
                    vec![1.0 - a, -a, q],
                ],
                _ => unreachable!(),
            };
            for (i, row) in expected.iter().enumerate() {
                for (j, &e) in row.iter().enumerate() {
                    assert_relative_eq!(sys.matrix[(i, j)], e, epsilon = 1e-12);
                }
            }
            let det = sys.matrix.determinant();
            let reference_det = match tag {
                ScenarioTag::Add2SepM => q * ((n - 2.0) * a * a + 4.0 * a + n - 2.0),
                ScenarioTag::Add2AdjM => (1.0 + a + a * a) * ((n - 2.0) * a * a - (n - 4.0) * a + n - 2.0),
                _ => det,
            };
            assert_relative_eq!(det, reference_det, max_relative = 1e-12);
            let v = prof.backout(a).unwrap();
            let lhs = &sys.matrix * nalgebra::DVector::from_vec(v.clone());
            for i in 0..v.len() {
                assert_relative_eq!(lhs[i], sys.rhs[i], epsilon = 1e-10 * sys.rhs[i].abs().max(1.0));
            }
            // Reference right-hand sides for the separated and adjacent shapes.
            let off = usize::from(tag.estimates_mu());
            let mu = smp.mu_eps.unwrap_or(0.0);
            for (i, &s) in t.iter().enumerate() {
                let rhs = q * y(s) - a * (y(s - 1) + y(s + 1)) - (1.0 - a) * mu;
                assert_relative_eq!(sys.rhs[off + i], rhs, epsilon = 1e-10 * rhs.abs().max(1.0));
            }
            if off == 1 {
                let total: f64 = (1..=smp.series.n()).map(|k| y(k) - a * y(k - 1)).sum();
                assert_relative_eq!(sys.rhs[0], total, max_relative = 1e-12);
            }
        }
    }
}

#[test]
fn explicit_adjacent_inverse_matches_generic_solve() {
    let smp = sample(ScenarioTag::Add2AdjM, 150, 8);
    let prof = ProfileObjective::new(&smp.series, &smp.scenario, None).unwrap();
    for a in [-0.9, -0.2, 0.0, 0.4, 0.99, 1.7] {
        let sys = prof.system(a);
        let inv = add2adjm_inverse(smp.series.n() as f64, a).unwrap();
        let generic = sys.matrix.clone().try_inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(inv[(i, j)], generic[(i, j)], epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn profile_polynomials_reproduce_profile_and_leading_coefficients() {
    for &tag in &ADDITIVE {
        let smp = sample(tag, 200, 5);
        let prof = ProfileObjective::new(&smp.series, &smp.scenario, smp.mu_eps).unwrap();
        let (r, d) = prof.polynomials();
        for a in [-0.8, 0.1, 0.5, 1.9] {
            assert_relative_eq!(r.eval(a) / d.eval(a), prof.value(a), max_relative = 1e-9);
        }
        let y = |k: usize| smp.series.at(k);
        let n = smp.series.n();
        let sxx: f64 = (1..=n).map(|k| y(k - 1).powi(2)).sum();
        let sx: f64 = (1..=n).map(|k| y(k - 1)).sum();
        let nf = n as f64;
        let t = smp.scenario.times();
        // Reference leading coefficients; for the separated pair with unknown
        // mean the two outlier values enter symmetrically.
        let reference = match tag {
            ScenarioTag::Add1 => sxx - y(t[0]).powi(2),
            ScenarioTag::Add1M => {
                (nf - 1.0) * sxx - sx * sx + 2.0 * sx * y(t[0]) - nf * y(t[0]).powi(2)
            }
            ScenarioTag::Add2Sep | ScenarioTag::Add2Adj => {
                sxx - y(t[0]).powi(2) - y(t[1]).powi(2)
            }
            ScenarioTag::Add2SepM | ScenarioTag::Add2AdjM => {
                let (a, b) = (y(t[0]), y(t[1]));
                (nf - 2.0) * sxx - sx * sx - (nf - 1.0) * (a * a + b * b) + 2.0 * (a + b) * sx
                    - 2.0 * a * b
            }
            _ => unreachable!(),
        };
        assert_relative_eq!(prof.leading_coefficient(), reference, max_relative = 1e-9);
    }
}

#[test]
fn estimates_match_brute_force_and_are_stationary() {
    for &tag in &ADDITIVE {
        for seed in 0..3 {
            let smp = sample(tag, 200, 100 + seed);
            let rep = estimate_additive(&smp.series, &smp.scenario, smp.mu_eps, Method::Grid).unwrap();
            let bf = brute_force(&smp.series, &smp.scenario, smp.mu_eps);
            assert!((rep.alpha_hat - bf.alpha).abs() < 1e-4, "{tag} seed {seed}");
            if let Some(m) = rep.mu_hat {
                assert!((m - bf.mu).abs() < 1e-4, "{tag} seed {seed}");
            }
            for (a, b) in rep.theta_hat.iter().zip(&bf.theta) {
                assert!((a - b).abs() < 1e-4, "{tag} seed {seed}");
            }
            assert!(rep.objective <= bf.value + 1e-9 * bf.value.max(1.0));
            assert!(rep.gradient_norm < 1e-8, "{tag}: gradient {}", rep.gradient_norm);
            assert!(rep.certified(), "{tag}: {:?}", rep.certificate);
            let mu = rep.mu_hat.or(smp.mu_eps).unwrap();
            let direct = raw_objective(
                smp.series.values(),
                Family::Additive,
                smp.scenario.times(),
                rep.alpha_hat,
                mu,
                &rep.theta_hat,
            );
            assert_relative_eq!(direct, rep.objective, max_relative = 1e-12);
        }
    }
}

#[test]
fn polynomial_method_agrees_with_grid() {
    for &tag in &ADDITIVE {
        let smp = sample(tag, 300, 21);
        let g = estimate_additive(&smp.series, &smp.scenario, smp.mu_eps, Method::Grid).unwrap();
        let p = estimate_additive(&smp.series, &smp.scenario, smp.mu_eps, Method::Poly).unwrap();
        assert!((g.alpha_hat - p.alpha_hat).abs() < 1e-9, "{tag}");
        for (a, b) in g.theta_hat.iter().zip(&p.theta_hat) {
            assert!((a - b).abs() < 1e-8, "{tag}");
        }
    }
}

#[test]
fn single_outlier_back_out_formula_holds() {
    let smp = sample(ScenarioTag::Add1, 400, 9);
    let r = estimate_additive(&smp.series, &smp.scenario, smp.mu_eps, Method::Grid).unwrap();
    let (a, s) = (r.alpha_hat, 50);
    let y = |k: usize| smp.series.at(k);
    let expect = y(s) - a / (1.0 + a * a) * (y(s - 1) + y(s + 1)) - (1.0 - a) / (1.0 + a * a);
    assert!((r.theta_hat[0] - expect).abs() < 1e-10);
}

#[test]
fn degenerate_leading_coefficient_is_rejected() {
    // All mass at the outlier time: leading coefficient = sum y_{k-1}^2 - y_s^2 = 0.
    let y = series(&[0, 0, 5, 0, 0]);
    let sc = scenario(vec![2], true);
    assert!(matches!(
        estimate_additive(&y, &sc, Some(1.0), Method::Grid),
        Err(Error::DegenerateDenominator(_))
    ));
}

#[test]
fn limit_value_examples() {
    let sc = scenario(vec![2], true);
    let y = series(&[0, 2, 10, 3, 1]);
    assert_relative_eq!(additive_limit_values(0.5, 1.0, &y, &sc).unwrap()[0], 7.6, epsilon = 1e-12);
    assert_relative_eq!(additive_limit_values(0.0, 1.0, &y, &sc).unwrap()[0], 9.0, epsilon = 1e-12);
    let adj = scenario(vec![2, 3], true);
    let l = additive_limit_values(0.0, 1.0, &y, &adj).unwrap();
    assert_eq!(l, vec![9.0, 2.0]);
    let late = scenario(vec![4], true);
    assert!(matches!(
        additive_limit_values(0.5, 1.0, &y, &late),
        Err(Error::BadTimes(_))
    ));
}

#[test]
fn conditional_variance_examples() {
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let sc = scenario(vec![2], true);
    let y = series(&[0, 2, 10, 3, 1]);
    let law = additive_conditional_law(&model, &y, &sc).unwrap();
    let expect = (11.5 / 36.0) / 1.25f64.powi(4) * (-0.75f64 * 5.0 + 1.75).powi(2);
    assert_relative_eq!(law.cov[0][0], expect, max_relative = 1e-12);
    assert_relative_eq!(law.cov[0][0], 0.5233777777777777, max_relative = 1e-12);

    // The squared factor vanishes when y_{s-1} + y_{s+1} = (1+2a-a^2) mu / (1-a^2).
    let alpha = 1.0 / 3.0;
    let model = ModelSpec::poisson(alpha, 8.0 / 7.0 * 2.0).unwrap();
    let mu = model.mu();
    let target = (1.0 + 2.0 * alpha - alpha * alpha) * mu / (1.0 - alpha * alpha);
    assert_relative_eq!(target, 4.0, epsilon = 1e-12);
    let y = series(&[0, 1, 7, 3, 2]);
    let law = additive_conditional_law(&model, &y, &sc).unwrap();
    assert!(law.cov[0][0].abs() < 1e-24);

    // Known and estimated innovation means give different variances.
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let y = series(&[0, 2, 10, 3, 1, 2, 2]);
    let known = additive_conditional_law(&model, &y, &sc).unwrap().cov[0][0];
    let unknown = additive_conditional_law(&model, &y, &scenario(vec![2], false)).unwrap().cov[0][0];
    assert!((known - unknown).abs() / known > 1e-3);
}

/// Finite-difference Jacobian of the limits in `(alpha, mu)`.
fn limit_jacobian(alpha: f64, mu: f64, y: &Series, sc: &OutlierScenario) -> Vec<[f64; 2]> {
    let k = sc.times().len();
    (0..k)
        .map(|i| {
            [
                derivative(|a| additive_limit_values(a, mu, y, sc).unwrap()[i], alpha, 1e-5),
                derivative(|m| additive_limit_values(alpha, m, y, sc).unwrap()[i], mu, 1e-5),
            ]
        })
        .collect()
}

#[test]
fn conditional_covariances_are_delta_method_of_the_limits() {
    let model = ModelSpec::poisson(0.4, 1.5).unwrap();
    let c = cls_covariance(&model).unwrap();
    for &tag in &ADDITIVE {
        let smp = sample_with(&model, tag, 200, 4);
        let law = additive_conditional_law(&model, &smp.series, &smp.scenario).unwrap();
        let j = limit_jacobian(model.alpha(), model.mu(), &smp.series, &smp.scenario);
        let k = j.len();
        for p in 0..k {
            for q in 0..k {
                let expect = if tag.estimates_mu() {
                    let mut acc = 0.0;
                    for u in 0..2 {
                        for v in 0..2 {
                            acc += j[p][u] * c.b_mat[u][v] * j[q][v];
                        }
                    }
                    acc
                } else {
                    c.sigma2_alpha * j[p][0] * j[q][0]
                };
                assert_relative_eq!(law.cov[p][q], expect, epsilon = 1e-6 * expect.abs().max(1.0));
            }
        }
        // Symmetric, non-negative diagonal, PSD.
        if k == 2 {
            assert_relative_eq!(law.cov[0][1], law.cov[1][0], max_relative = 1e-14);
            let det = law.cov[0][0] * law.cov[1][1] - law.cov[0][1] * law.cov[1][0];
            assert!(det >= -1e-10 * law.cov[0][0] * law.cov[1][1]);
        }
        assert!(law.cov.iter().enumerate().all(|(i, r)| r[i] >= 0.0));
    }
}

/// Moving a size from the truth to `theta + 1` changes the objective by
/// `1 + a^2 - 2 e_s + 2 a e_{s+1}` with centred clean prediction errors `e`,
/// so the expected change is `1 + a^2`.
#[test]
fn shifted_size_raises_the_objective_on_average() {
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let sc = scenario(vec![50], true);
    let diffs: Vec<f64> = (0..200)
        .map(|seed| {
            let smp = sample_with(&model, ScenarioTag::Add1, 2000, 7000 + seed);
            let eval = |theta: f64| {
                raw_objective(smp.series.values(), Family::Additive, sc.times(), 0.5, 1.0, &[theta])
            };
            eval(11.0) - eval(10.0)
        })
        .collect();
    let m = inar_outliers::stats::mean(&diffs);
    let se = inar_outliers::stats::standard_error(&diffs);
    assert!(m > 0.0);
    assert!((m - 1.25).abs() < 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn size_error_is_bounded_by_the_clean_path() {
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let plan = OutlierPlan::new(Family::Additive, vec![Outlier { time: 50, size: 10 }]).unwrap();
    let sc = plan.scenario(true);
    for seed in 0..50 {
        let cfg = SimConfig::new(model.clone(), 500, seed).unwrap();
        let x = simulate_inar1(&cfg);
        let y = contaminate_additive(&x, &plan).unwrap();
        let r = estimate_additive(&y, &sc, Some(1.0), Method::Grid).unwrap();
        let bound = x.at(50) + 0.5 * (x.at(49) + x.at(51)) + 1.5;
        assert!((r.theta_hat[0] - 10.0).abs() <= bound + 1e-9, "seed {seed}");
    }
}

#[test]
fn certificates_are_positive_at_moderate_n() {
    for &tag in &ADDITIVE {
        for seed in 0..5 {
            let smp = sample(tag, 1500, 300 + seed);
            let r = estimate_additive(&smp.series, &smp.scenario, smp.mu_eps, Method::Grid).unwrap();
            assert!(r.certified(), "{tag} seed {seed}: {:?}", r.certificate);
        }
    }
}

#[test]
fn limit_deviation_variance_single_step_case() {
    // Direct evaluation of the closed-form variance at s = 1 with a fixed start.
    let model = ModelSpec::poisson(0.5, 1.0).unwrap();
    let (a, mu, s2, ex0) = (0.5f64, 1.0, 1.0, 3.0);
    let s = 1;
    let num = mu * (a + a.powi(3) - a.powi(s) - a.powi(s + 3))
        + s2 * (1.0 + a * a)
        + (1.0 - a) * (a.powi(s) + a.powi(s + 3)) * ex0;
    let expect = num / (1.0 + a * a).powi(2);
    assert_relative_eq!(
        additive_limit_deviation_variance(&model, s as u32, ex0),
        expect,
        max_relative = 1e-12
    );
}
