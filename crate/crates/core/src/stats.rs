//! Summary statistics used by the Monte Carlo harness.

use crate::normal;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator; `0` for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical CDF and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_standard_normal(values: &[f64]) -> f64 {
    ks_statistic(values, normal::cdf)
}

/// Asymptotic two-sided KS critical value `c(α)/√n` for α ∈ {0.10, 0.05, 0.01}.
pub fn ks_critical_value(n: usize, alpha: f64) -> Option<f64> {
    let (_, c) = [(0.10, 1.224), (0.05, 1.358), (0.01, 1.628)].into_iter().find(|(a, _)| *a == alpha)?;
    Some(c / (n as f64).sqrt())
}
