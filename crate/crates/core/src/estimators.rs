//! Kernel density, Nadaraya–Watson mean, jackknife mean, residual-based
//! conditional variance and the trimmed excess-fourth-moment estimator.
//!
//! Mean and variance curves are self-normalised kernel ratios: the
//! `1/(n·b)` factors of the density in the denominator cancel against the
//! numerator. Each ratio uses its own bandwidth, so the density that
//! normalises the variance smoother is the `h`-bandwidth one.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// A design point is degenerate when its kernel-weight sum falls below this.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Minimum `σ̂²(X_j)` for an observation to enter the fourth-moment estimate.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Observed sample `{(s_j, X(s_j), Y(s_j))}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    locations: Vec<(f64, f64)>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SpatialDataset {
    pub fn new(locations: Vec<(f64, f64)>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = locations.len();
        if x.len() != n || y.len() != n {
            return Err(Error::InvalidInput(format!("length mismatch: {} locations, {} x, {} y", n, x.len(), y.len())));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 observations, got {n}")));
        }
        if let Some(bad) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at index {}", bad % n)));
        }
        let mut seen = HashSet::with_capacity(n);
        for (i, &(u, v)) in locations.iter().enumerate() {
            if !u.is_finite() || !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite location at index {i}")));
            }
            // -0.0 and 0.0 are the same site
            let key = ((u + 0.0).to_bits(), (v + 0.0).to_bits());
            if !seen.insert(key) {
                let first = locations[..i].iter().position(|&p| p == (u, v)).unwrap_or(0);
                return Err(Error::DuplicateLocation { first, second: i });
            }
        }
        Ok(SpatialDataset { locations, x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn locations(&self) -> &[(f64, f64)] {
        &self.locations
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Same sites and covariates with a new response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        SpatialDataset::new(self.locations.clone(), self.x.clone(), y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Density,
    Mean,
    JackknifeMean,
    Variance,
}

impl EstimatorTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorTag::Density => "density",
            EstimatorTag::Mean => "mean",
            EstimatorTag::JackknifeMean => "jackknife_mean",
            EstimatorTag::Variance => "variance",
        }
    }
}

/// Estimated curve on a design grid. `None` marks a degenerate design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub design_points: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub bandwidth: f64,
    pub estimator_tag: EstimatorTag,
}

impl CurveEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn degenerate_points(&self) -> Vec<f64> {
        self.design_points.iter().zip(&self.values).filter(|(_, v)| v.is_none()).map(|(&x, _)| x).collect()
    }

    /// All values, or `DegenerateDensity` at the first degenerate point.
    pub fn require_all(&self) -> Result<Vec<f64>> {
        self.design_points.iter().zip(&self.values).map(|(&x, v)| v.ok_or(Error::DegenerateDensity { x })).collect()
    }
}

/// Residuals `Y_j − μ̂*_b(X_j)`; `None` where the jackknife mean is degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub bandwidth: f64,
    pub values: Vec<Option<f64>>,
}

impl Residuals {
    pub fn excluded(&self) -> usize {
        self.values.iter().filter(|r| r.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub curve: CurveEstimate,
    /// Observations dropped because their residual was undefined.
    pub excluded: usize,
}

/// Anything that can produce a kernel mean at `x` with bandwidth `b`.
pub trait MeanSmoother {
    fn mean_at(&self, x: f64, b: f64) -> Option<f64>;
}

/// `2·m(x, b) − m(x, √2·b)`.
pub fn jackknife_value<S: MeanSmoother + ?Sized>(s: &S, x: f64, b: f64) -> Option<f64> {
    let fine = s.mean_at(x, b)?;
    let coarse = s.mean_at(x, std::f64::consts::SQRT_2 * b)?;
    Some(2.0 * fine - coarse)
}

pub fn jackknife_with<S: MeanSmoother + ?Sized>(s: &S, xs: &[f64], b: f64) -> Result<CurveEstimate> {
    check_design(xs)?;
    check_bandwidth(b)?;
    Ok(CurveEstimate {
        design_points: xs.to_vec(),
        values: xs.iter().map(|&x| jackknife_value(s, x, b)).collect(),
        bandwidth: b,
        estimator_tag: EstimatorTag::JackknifeMean,
    })
}

pub(crate) fn check_bandwidth(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("bandwidth must be positive and finite, got {b}")))
    }
}

pub(crate) fn check_design(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty design grid".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite design point".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("design points must be strictly increasing".into()));
    }
    Ok(())
}

/// Kernel smoother bound to a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Estimator<'a> {
    data: &'a SpatialDataset,
    kernel: Kernel,
}

impl<'a> Estimator<'a> {
    pub fn new(data: &'a SpatialDataset, kernel: Kernel) -> Self {
        Estimator { data, kernel }
    }

    pub fn data(&self) -> &'a SpatialDataset {
        self.data
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// `(Σ K((x−X_j)/b), Σ Y_j K((x−X_j)/b))`
    #[inline]
    fn weight_sums(&self, x: f64, b: f64) -> (f64, f64) {
        let mut den = 0.0;
        let mut num = 0.0;
        for (&xj, &yj) in self.data.x.iter().zip(&self.data.y) {
            let w = self.kernel.eval((x - xj) / b);
            if w != 0.0 {
                den += w;
                num += w * yj;
            }
        }
        (den, num)
    }

    pub fn density_at(&self, x: f64, b: f64) -> f64 {
        let den: f64 = self.data.x.iter().map(|&xj| self.kernel.eval((x - xj) / b)).sum();
        den / (self.data.n() as f64 * b)
    }

    pub fn nw_at(&self, x: f64, b: f64) -> Option<f64> {
        let (den, num) = self.weight_sums(x, b);
        (den >= DENSITY_FLOOR).then(|| num / den)
    }

    pub fn jackknife_at(&self, x: f64, b: f64) -> Option<f64> {
        jackknife_value(self, x, b)
    }

    pub fn density(&self, xs: &[f64], b: f64) -> Result<CurveEstimate> {
        check_design(xs)?;
        check_bandwidth(b)?;
        Ok(CurveEstimate {
            design_points: xs.to_vec(),
            values: xs.iter().map(|&x| Some(self.density_at(x, b))).collect(),
            bandwidth: b,
            estimator_tag: EstimatorTag::Density,
        })
    }

    pub fn nw_mean(&self, xs: &[f64], b: f64) -> Result<CurveEstimate> {
        check_design(xs)?;
        check_bandwidth(b)?;
        Ok(CurveEstimate {
            design_points: xs.to_vec(),
            values: xs.iter().map(|&x| self.nw_at(x, b)).collect(),
            bandwidth: b,
            estimator_tag: EstimatorTag::Mean,
        })
    }

    pub fn jackknife_mean(&self, xs: &[f64], b: f64) -> Result<CurveEstimate> {
        jackknife_with(self, xs, b)
    }

    /// Residuals against the jackknife mean evaluated at each observed `X_j`.
    pub fn residuals(&self, b: f64) -> Result<Residuals> {
        check_bandwidth(b)?;
        let values =
            self.data.x.iter().zip(&self.data.y).map(|(&xj, &yj)| self.jackknife_at(xj, b).map(|m| yj - m)).collect();
        Ok(Residuals { bandwidth: b, values })
    }

    /// Kernel-weighted mean of squared residuals at `x` with bandwidth `h`.
    pub fn variance_at(&self, residuals: &Residuals, x: f64, h: f64) -> Option<f64> {
        let mut den = 0.0;
        let mut num = 0.0;
        for (&xj, r) in self.data.x.iter().zip(&residuals.values) {
            let Some(r) = r else { continue };
            let w = self.kernel.eval((x - xj) / h);
            if w != 0.0 {
                den += w;
                num += w * r * r;
            }
        }
        (den >= DENSITY_FLOOR).then(|| num / den)
    }

    pub fn variance_from_residuals(&self, residuals: &Residuals, xs: &[f64], h: f64) -> Result<VarianceEstimate> {
        check_design(xs)?;
        check_bandwidth(h)?;
        let curve = CurveEstimate {
            design_points: xs.to_vec(),
            values: xs.iter().map(|&x| self.variance_at(residuals, x, h)).collect(),
            bandwidth: h,
            estimator_tag: EstimatorTag::Variance,
        };
        Ok(VarianceEstimate { curve, excluded: residuals.excluded() })
    }

    /// `σ̂²_h` on `xs` with residuals from the jackknife mean at bandwidth `b`.
    pub fn variance(&self, xs: &[f64], h: f64, b: f64) -> Result<VarianceEstimate> {
        check_bandwidth(h)?;
        let residuals = self.residuals(b)?;
        self.variance_from_residuals(&residuals, xs, h)
    }

    /// Excess fourth moment of standardised residuals, trimmed to
    /// observations with `X_j ∈ [lo, hi]`.
    pub fn v4(&self, interval: (f64, f64), b: f64, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        let residuals = self.residuals(b)?;
        self.v4_from_residuals(&residuals, interval, h)
    }

    pub fn v4_from_residuals(&self, residuals: &Residuals, interval: (f64, f64), h: f64) -> Result<f64> {
        let (lo, hi) = interval;
        if !(lo <= hi) {
            return Err(Error::InvalidInput(format!("interval [{lo}, {hi}] is empty")));
        }
        let inside: Vec<usize> = (0..self.data.n()).filter(|&j| (lo..=hi).contains(&self.data.x[j])).collect();
        if inside.is_empty() {
            return Err(Error::EmptyInterval { lo, hi });
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in inside {
            let Some(r) = residuals.values[j] else { continue };
            let Some(s2) = self.variance_at(residuals, self.data.x[j], h) else { continue };
            if s2 < VARIANCE_FLOOR {
                continue;
            }
            let z2 = r * r / s2;
            sum += z2 * z2;
            count += 1;
        }
        if count == 0 {
            return Err(Error::DegenerateVariance);
        }
        Ok(sum / count as f64 - 1.0)
    }
}

impl MeanSmoother for Estimator<'_> {
    fn mean_at(&self, x: f64, b: f64) -> Option<f64> {
        self.nw_at(x, b)
    }
}

/// `(Σ V⁴ / count) − 1` for already standardised residuals.
pub fn excess_fourth_moment(standardized: &[f64]) -> Result<f64> {
    if standardized.is_empty() {
        return Err(Error::InvalidInput("no standardized residuals".into()));
    }
    let s: f64 = standardized.iter().map(|v| v.powi(4)).sum();
    Ok(s / standardized.len() as f64 - 1.0)
}
