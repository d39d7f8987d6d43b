//! Standard normal distribution helpers.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 − Φ(x)` without cancellation for large `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`, polished with one Newton step on the accurate CDF.
pub fn quantile(p: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // work in the tail holding p so the residual keeps relative precision
    let resid = if x < 0.0 { cdf(x) - p } else { (1.0 - p) - sf(x) };
    x - resid / pdf(x)
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
