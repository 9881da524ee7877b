//! Small descriptive statistics used by the Monte Carlo checks.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; `NaN` with fewer than two values.
pub fn variance(x: &[f64]) -> f64 {
    covariance(x, x)
}

/// Unbiased sample covariance of two equally long slices.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "covariance needs equal lengths");
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() as f64 - 1.0)
}

/// Standard error of the mean of independent values.
pub fn standard_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Standard error of the mean of a serially dependent sequence, from the
/// spread of the means of `batches` contiguous batches.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&x[b * size..(b + 1) * size]))
        .collect();
    standard_error(&means)
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (variance(x) * variance(y)).sqrt()
}

/// Kolmogorov-Smirnov distance between the empirical law of `x` and the
/// standard normal law.
#[cfg(feature = "mc")]
pub fn ks_standard_normal(x: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::standard();
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &value)| {
            let f = normal.cdf(value);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
