//! CLS estimation for the outlier-free model.

use crate::error::{Error, Result};
use crate::model::Series;
use crate::report::{EstimateReport, Method, OptimizerInfo};

/// CLS estimate of the thinning mean with the innovation mean known:
/// `sum (X_k - mu) X_{k-1} / sum X_{k-1}^2` over `k = 1..=n`.
pub fn cls_alpha(series: &Series, mu_eps: f64) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for w in series.values().windows(2) {
        let (x, y) = (w[0] as f64, w[1] as f64);
        num += (y - mu_eps) * x;
        den += x * x;
    }
    if den.is_nan() || den <= 0.0 {
        return Err(Error::DegenerateDenominator(
            "all lagged values are zero".into(),
        ));
    }
    Ok(num / den)
}

/// Joint CLS estimate of the thinning and innovation means.
pub fn cls_joint(series: &Series) -> Result<(f64, f64)> {
    let n = series.n() as f64;
    let (mut sxy, mut sxx, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for w in series.values().windows(2) {
        let (x, y) = (w[0] as f64, w[1] as f64);
        sxy += x * y;
        sxx += x * x;
        sx += x;
        sy += y;
    }
    let den = n * sxx - sx * sx;
    if den.is_nan() || den <= 0.0 {
        return Err(Error::DegenerateDenominator(
            "lagged values are constant".into(),
        ));
    }
    let alpha = (n * sxy - sx * sy) / den;
    Ok((alpha, (sy - alpha * sx) / n))
}

/// Clean CLS estimate packaged as a report; the innovation mean is
/// estimated when `mu_eps` is `None`.
pub fn estimate_clean(series: &Series, mu_eps: Option<f64>) -> Result<EstimateReport> {
    let (alpha, mu_hat, mu) = match mu_eps {
        Some(mu) => (cls_alpha(series, mu)?, None, mu),
        None => {
            let (a, m) = cls_joint(series)?;
            (a, Some(m), m)
        }
    };
    let (mut q, mut ga, mut gm) = (0.0, 0.0, 0.0);
    let (mut haa, mut ham, mut hmm) = (0.0, 0.0, 0.0);
    for w in series.values().windows(2) {
        let (x, y) = (w[0] as f64, w[1] as f64);
        let r = y - alpha * x - mu;
        q += r * r;
        ga -= 2.0 * r * x;
        gm -= 2.0 * r;
        haa += 2.0 * x * x;
        ham += 2.0 * x;
        hmm += 2.0;
    }
    let (certificate, gradient_norm) = if mu_hat.is_some() {
        (vec![haa, haa * hmm - ham * ham], ga.abs().max(gm.abs()))
    } else {
        (vec![haa], ga.abs())
    };
    Ok(EstimateReport {
        tag: None,
        scenario: None,
        alpha_hat: alpha,
        mu_hat,
        theta_hat: Vec::new(),
        objective: q,
        optimizer: OptimizerInfo {
            method: Method::ClosedForm,
            iterations: 0,
            bracket: None,
        },
        certificate,
        gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let x = Series::new(vec![1, 2, 1, 3]).unwrap();
        assert!((cls_alpha(&x, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let x = Series::new(vec![0, 1, 0, 1, 0]).unwrap();
        let (a, m) = cls_joint(&x).unwrap();
        assert!((a + 1.0).abs() < 1e-15 && (m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_series() {
        let x = Series::new(vec![4; 10]).unwrap();
        assert!((cls_alpha(&x, 1.5).unwrap() - 2.5 / 4.0).abs() < 1e-15);
        assert!(matches!(cls_joint(&x), Err(Error::DegenerateDenominator(_))));
        let z = Series::new(vec![0; 5]).unwrap();
        assert!(matches!(cls_alpha(&z, 1.0), Err(Error::DegenerateDenominator(_))));
    }
}
