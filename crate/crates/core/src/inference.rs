//! Central-limit normalisations of the density, mean and variance
//! estimators, the quantile of the maximum of `N` independent |N(0,1)|
//! variables, and joint confidence bands built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_bandwidth, check_design, Estimator, Residuals, DENSITY_FLOOR};
use crate::kernel::KernelConstants;
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandTarget {
    Density,
    Mean,
    Variance,
}

impl BandTarget {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandTarget::Density => "density",
            BandTarget::Mean => "mean",
            BandTarget::Variance => "variance",
        }
    }
}

impl std::str::FromStr for BandTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(BandTarget::Density),
            "mean" => Ok(BandTarget::Mean),
            "variance" => Ok(BandTarget::Variance),
            other => Err(Error::InvalidInput(format!("unknown band target '{other}'"))),
        }
    }
}

/// Which bandwidth sits under the `√(n·bandwidth)` in a band half-width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandScale {
    /// Each target uses the bandwidth of its own estimator: `b` for the
    /// density and mean, `h` for the variance.
    #[default]
    PerTarget,
    /// All three targets divide by `√(n·h)`.
    CommonVarianceBandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedScores {
    pub design_points: Vec<f64>,
    pub scores: Vec<f64>,
    pub target: BandTarget,
}

/// `q` with `P(max_{j≤N} |ξ_j| > q) = τ` for i.i.d. standard normal `ξ_j`.
///
/// Closed form `Φ⁻¹((1 + (1−τ)^{1/N})/2)`, evaluated through the upper
/// tail so that small `τ/N` keeps full precision.
pub fn max_abs_normal_quantile(n: usize, tau: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("number of design points must be at least 1".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    // 1 − (1−τ)^{1/N}
    let tail = -((-tau).ln_1p() / n as f64).exp_m1();
    Ok(-normal::quantile(tail / 2.0))
}

fn check_lengths(xs: &[f64], others: &[&[f64]]) -> Result<()> {
    for o in others {
        if o.len() != xs.len() {
            return Err(Error::InvalidInput(format!("expected {} values per design point, got {}", xs.len(), o.len())));
        }
    }
    Ok(())
}

fn check_positive(name: &str, values: &[f64], xs: &[f64]) -> Result<()> {
    match values.iter().zip(xs).find(|(v, _)| !(**v > 0.0)) {
        Some((v, x)) => Err(Error::Domain(format!("{name} must be positive, got {v} at x = {x}"))),
        None => Ok(()),
    }
}

fn finite_scores(xs: &[f64], scores: Vec<f64>, target: BandTarget) -> Result<NormalizedScores> {
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::DegenerateDensity { x: xs[i] });
    }
    Ok(NormalizedScores { design_points: xs.to_vec(), scores, target })
}

/// `√(n·b/‖K‖²)·(f̂ − f)/√f`
pub fn density_scores(
    n: usize,
    b: f64,
    kc: &KernelConstants,
    xs: &[f64],
    estimate: &[f64],
    truth_f: &[f64],
) -> Result<NormalizedScores> {
    check_lengths(xs, &[estimate, truth_f])?;
    check_positive("density", truth_f, xs)?;
    let scale = (n as f64 * b / kc.l2_norm_sq).sqrt();
    let scores = estimate.iter().zip(truth_f).map(|(e, f)| scale * (e - f) / f.sqrt()).collect();
    finite_scores(xs, scores, BandTarget::Density)
}

/// `√(n·b/‖K‖²)·√f·(μ̂ − μ)/σ`
#[allow(clippy::too_many_arguments)]
pub fn mean_scores(
    n: usize,
    b: f64,
    kc: &KernelConstants,
    xs: &[f64],
    estimate: &[f64],
    truth_mu: &[f64],
    truth_sigma2: &[f64],
    truth_f: &[f64],
) -> Result<NormalizedScores> {
    check_lengths(xs, &[estimate, truth_mu, truth_sigma2, truth_f])?;
    check_positive("variance", truth_sigma2, xs)?;
    check_positive("density", truth_f, xs)?;
    let scale = (n as f64 * b / kc.l2_norm_sq).sqrt();
    let scores = (0..xs.len())
        .map(|j| scale * truth_f[j].sqrt() * (estimate[j] - truth_mu[j]) / truth_sigma2[j].sqrt())
        .collect();
    finite_scores(xs, scores, BandTarget::Mean)
}

/// `√(n·h/(V₄‖K‖²))·√f·(σ̂² − σ²)/σ²`
#[allow(clippy::too_many_arguments)]
pub fn variance_scores(
    n: usize,
    h: f64,
    v4: f64,
    kc: &KernelConstants,
    xs: &[f64],
    estimate: &[f64],
    truth_sigma2: &[f64],
    truth_f: &[f64],
) -> Result<NormalizedScores> {
    if !(v4 > 0.0) {
        return Err(Error::Domain(format!("V4 must be positive, got {v4}")));
    }
    check_lengths(xs, &[estimate, truth_sigma2, truth_f])?;
    check_positive("variance", truth_sigma2, xs)?;
    check_positive("density", truth_f, xs)?;
    let scale = (n as f64 * h / (v4 * kc.l2_norm_sq)).sqrt();
    let scores =
        (0..xs.len()).map(|j| scale * truth_f[j].sqrt() * (estimate[j] - truth_sigma2[j]) / truth_sigma2[j]).collect();
    finite_scores(xs, scores, BandTarget::Variance)
}

pub fn normalize_density(
    est: &Estimator<'_>,
    xs: &[f64],
    b: f64,
    truth_f: &[f64],
    kc: &KernelConstants,
) -> Result<NormalizedScores> {
    let curve = est.density(xs, b)?;
    let values = curve.require_all()?;
    density_scores(est.data().n(), b, kc, xs, &values, truth_f)
}

pub fn normalize_mean(
    est: &Estimator<'_>,
    xs: &[f64],
    b: f64,
    truth_mu: &[f64],
    truth_sigma2: &[f64],
    truth_f: &[f64],
    kc: &KernelConstants,
) -> Result<NormalizedScores> {
    let values = est.nw_mean(xs, b)?.require_all()?;
    mean_scores(est.data().n(), b, kc, xs, &values, truth_mu, truth_sigma2, truth_f)
}

#[allow(clippy::too_many_arguments)]
pub fn normalize_variance(
    est: &Estimator<'_>,
    xs: &[f64],
    h: f64,
    b: f64,
    truth_sigma2: &[f64],
    truth_f: &[f64],
    v4: f64,
    kc: &KernelConstants,
) -> Result<NormalizedScores> {
    if !(v4 > 0.0) {
        return Err(Error::Domain(format!("V4 must be positive, got {v4}")));
    }
    let values = est.variance(xs, h, b)?.curve.require_all()?;
    variance_scores(est.data().n(), h, v4, kc, xs, &values, truth_sigma2, truth_f)
}

/// Joint band `F̂₁(x_j) ± q_τ·F̂₂(x_j)/√(n·bandwidth)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub design_points: Vec<f64>,
    pub centers: Vec<f64>,
    pub half_widths: Vec<f64>,
    /// `F̂₂(x_j)/√(n·bandwidth)`; `half_widths = q_tau · std_errors`.
    pub std_errors: Vec<f64>,
    pub tau: f64,
    pub q_tau: f64,
    pub target: BandTarget,
    /// Bandwidth in the `√(n·bandwidth)` denominator.
    pub bandwidth: f64,
    pub scale: BandScale,
    /// Trimmed fourth-moment estimate, variance bands only.
    pub v4: Option<f64>,
}

impl ConfidenceBand {
    pub fn lower(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.half_widths).map(|(c, w)| c - w).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.half_widths).map(|(c, w)| c + w).collect()
    }

    /// True when `truth[j]` lies in the closed interval at every design point.
    pub fn contains(&self, truth: &[f64]) -> bool {
        truth.len() == self.centers.len()
            && (0..truth.len()).all(|j| (self.centers[j] - truth[j]).abs() <= self.half_widths[j])
    }

    /// `(F̂₁ − truth)/(F̂₂/√(n·bandwidth))`, the studentised deviation the band thresholds at `q_τ`.
    pub fn plugin_scores(&self, truth: &[f64]) -> Vec<f64> {
        (0..self.centers.len()).map(|j| (self.centers[j] - truth[j]) / self.std_errors[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub target: BandTarget,
    pub b: f64,
    pub h: f64,
    pub tau: f64,
    pub scale: BandScale,
}

pub fn confidence_band(
    est: &Estimator<'_>,
    xs: &[f64],
    spec: &BandSpec,
    kc: &KernelConstants,
) -> Result<ConfidenceBand> {
    match spec.target {
        BandTarget::Density => band_with_residuals(est, None, xs, spec, kc),
        _ => {
            let residuals = est.residuals(spec.b)?;
            band_with_residuals(est, Some(&residuals), xs, spec, kc)
        }
    }
}

/// As [`confidence_band`], reusing residuals already computed at bandwidth `spec.b`.
pub fn band_with_residuals(
    est: &Estimator<'_>,
    residuals: Option<&Residuals>,
    xs: &[f64],
    spec: &BandSpec,
    kc: &KernelConstants,
) -> Result<ConfidenceBand> {
    check_design(xs)?;
    check_bandwidth(spec.b)?;
    check_bandwidth(spec.h)?;
    let q_tau = max_abs_normal_quantile(xs.len(), spec.tau)?;
    let n = est.data().n() as f64;
    let norm = kc.l2_norm_sq.sqrt();
    let own = match spec.target {
        BandTarget::Density | BandTarget::Mean => spec.b,
        BandTarget::Variance => spec.h,
    };
    let bandwidth = match spec.scale {
        BandScale::PerTarget => own,
        BandScale::CommonVarianceBandwidth => spec.h,
    };
    let root_nh = (n * bandwidth).sqrt();

    // f̂ at the target estimator's own bandwidth; zero density is degenerate
    let density_at = |x: f64, bw: f64| -> Result<f64> {
        let f = est.density_at(x, bw);
        if f * n * bw < DENSITY_FLOOR {
            Err(Error::DegenerateDensity { x })
        } else {
            Ok(f)
        }
    };
    let need_residuals = || -> Result<&Residuals> {
        match residuals {
            Some(r) if r.bandwidth == spec.b => Ok(r),
            Some(r) => Err(Error::InvalidInput(format!(
                "residuals computed at bandwidth {} but band uses {}",
                r.bandwidth, spec.b
            ))),
            None => Err(Error::InvalidInput("mean and variance bands need residuals".into())),
        }
    };

    let mut centers = Vec::with_capacity(xs.len());
    let mut std_errors = Vec::with_capacity(xs.len());
    let mut v4 = None;
    match spec.target {
        BandTarget::Density => {
            for &x in xs {
                let f = density_at(x, spec.b)?;
                centers.push(f);
                std_errors.push(f.sqrt() * norm / root_nh);
            }
        }
        BandTarget::Mean => {
            let res = need_residuals()?;
            for &x in xs {
                let f = density_at(x, spec.b)?;
                let mu = est.nw_at(x, spec.b).ok_or(Error::DegenerateDensity { x })?;
                let s2 = est.variance_at(res, x, spec.h).ok_or(Error::DegenerateDensity { x })?;
                centers.push(mu);
                std_errors.push(s2.sqrt() * norm / f.sqrt() / root_nh);
            }
        }
        BandTarget::Variance => {
            let res = need_residuals()?;
            // pointwise pieces first so a degenerate design point is reported as such
            let mut pieces = Vec::with_capacity(xs.len());
            for &x in xs {
                let f = density_at(x, spec.h)?;
                let s2 = est.variance_at(res, x, spec.h).ok_or(Error::DegenerateDensity { x })?;
                pieces.push((f, s2));
            }
            let interval = (xs[0], xs[xs.len() - 1]);
            let v = est.v4_from_residuals(res, interval, spec.h)?;
            if !(v > 0.0) {
                return Err(Error::NonpositiveV4(v));
            }
            v4 = Some(v);
            for (f, s2) in pieces {
                centers.push(s2);
                std_errors.push(s2 * norm * (v / f).sqrt() / root_nh);
            }
        }
    }
    let half_widths = std_errors.iter().map(|s| s * q_tau).collect();
    Ok(ConfidenceBand {
        design_points: xs.to_vec(),
        centers,
        half_widths,
        std_errors,
        tau: spec.tau,
        q_tau,
        target: spec.target,
        bandwidth,
        scale: spec.scale,
        v4,
    })
}
