//! Bandwidth selection by stabilisation of adjacent curve estimates.
//!
//! For a grid `b_ℓ = ℓ·b^P/L` the rule picks the smallest `ℓ ≥ 2` whose
//! sup-distance to the previous curve is strictly below `threshold` times
//! the smallest such distance over the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CurveEstimate, Estimator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    pilot: f64,
    count: usize,
    threshold: f64,
}

impl BandwidthGrid {
    pub fn new(pilot: f64, count: usize, threshold: f64) -> Result<Self> {
        if !(pilot > 0.0 && pilot.is_finite()) {
            return Err(Error::Domain(format!("pilot bandwidth must be positive, got {pilot}")));
        }
        if count < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 bandwidths, got {count}")));
        }
        if !(threshold > 1.0 && threshold.is_finite()) {
            return Err(Error::Domain(format!("threshold must exceed 1, got {threshold}")));
        }
        Ok(BandwidthGrid { pilot, count, threshold })
    }

    pub fn pilot(&self) -> f64 {
        self.pilot
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Bandwidth `b_ℓ` for the 1-based index `ℓ`.
    pub fn bandwidth(&self, index: usize) -> f64 {
        index as f64 * self.pilot / self.count as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (1..=self.count).map(|l| self.bandwidth(l)).collect()
    }
}

impl Default for BandwidthGrid {
    fn default() -> Self {
        BandwidthGrid { pilot: 1.0, count: 20, threshold: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    /// `d_ℓ` for `ℓ = 2..=L`; entry `i` belongs to `ℓ = i + 2`.
    pub adjacent_distances: Vec<f64>,
    pub chosen_index: usize,
    pub chosen_bandwidth: f64,
}

/// Sup-distance between consecutive curves, skipping design points that are
/// degenerate in either curve.
pub fn adjacent_distances(estimates: &[CurveEstimate]) -> Result<Vec<f64>> {
    if estimates.len() < 2 {
        return Err(Error::InvalidInput("need at least two curves".into()));
    }
    let points = &estimates[0].design_points;
    for (i, c) in estimates.iter().enumerate() {
        if c.design_points != *points {
            return Err(Error::InvalidInput(format!("curve {i} uses different design points")));
        }
        if c.values.iter().all(Option::is_none) {
            return Err(Error::AllDegenerate { curve: i });
        }
    }
    estimates
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            pair[1]
                .values
                .iter()
                .zip(&pair[0].values)
                .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
                .reduce(f64::max)
                .ok_or(Error::AllDegenerate { curve: i + 1 })
        })
        .collect()
}

pub fn select_bandwidth(distances: &[f64], grid: &BandwidthGrid) -> Result<SelectionTrace> {
    if distances.len() + 1 != grid.count() {
        return Err(Error::InvalidInput(format!(
            "expected {} adjacent distances, got {}",
            grid.count() - 1,
            distances.len()
        )));
    }
    if let Some(d) = distances.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid adjacent distance {d}")));
    }
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let pos = if min == 0.0 {
        distances.iter().position(|&d| d == 0.0)
    } else {
        let cut = grid.threshold() * min;
        distances.iter().position(|&d| d < cut)
    }
    .expect("the minimum always satisfies the rule");
    let chosen_index = pos + 2;
    Ok(SelectionTrace {
        adjacent_distances: distances.to_vec(),
        chosen_index,
        chosen_bandwidth: grid.bandwidth(chosen_index),
    })
}

/// Runs the rule on curves produced by `fit` at every grid bandwidth.
pub fn select_over_grid<F>(grid: &BandwidthGrid, mut fit: F) -> Result<SelectionTrace>
where
    F: FnMut(f64) -> Result<CurveEstimate>,
{
    let curves = grid.grid().into_iter().map(&mut fit).collect::<Result<Vec<_>>>()?;
    select_bandwidth(&adjacent_distances(&curves)?, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageSelection {
    pub b_hat: f64,
    pub h_hat: f64,
    pub mean_trace: SelectionTrace,
    pub variance_trace: SelectionTrace,
}

/// Select `b̂` on mean curves, then `ĥ` on variance curves given `b̂`.
pub fn select_two_stage_with<M, V>(
    grid_mu: &BandwidthGrid,
    grid_sigma: &BandwidthGrid,
    mean_curve: M,
    mut variance_curve: V,
) -> Result<TwoStageSelection>
where
    M: FnMut(f64) -> Result<CurveEstimate>,
    V: FnMut(f64, f64) -> Result<CurveEstimate>,
{
    let mean_trace = select_over_grid(grid_mu, mean_curve)?;
    let b_hat = mean_trace.chosen_bandwidth;
    let variance_trace = select_over_grid(grid_sigma, |h| variance_curve(b_hat, h))?;
    Ok(TwoStageSelection { b_hat, h_hat: variance_trace.chosen_bandwidth, mean_trace, variance_trace })
}

/// Two-stage selection with jackknife-mean and residual-variance curves.
pub fn select_two_stage(
    est: &Estimator<'_>,
    xs: &[f64],
    grid_mu: &BandwidthGrid,
    grid_sigma: &BandwidthGrid,
) -> Result<TwoStageSelection> {
    let mut cached: Option<crate::estimators::Residuals> = None;
    select_two_stage_with(
        grid_mu,
        grid_sigma,
        |b| est.jackknife_mean(xs, b),
        |b, h| {
            if cached.as_ref().map(|r| r.bandwidth) != Some(b) {
                cached = Some(est.residuals(b)?);
            }
            let res = cached.as_ref().expect("residuals cached above");
            Ok(est.variance_from_residuals(res, xs, h)?.curve)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorTag;

    fn curve(values: &[f64]) -> CurveEstimate {
        CurveEstimate {
            design_points: (0..values.len()).map(|i| i as f64).collect(),
            values: values.iter().map(|&v| Some(v)).collect(),
            bandwidth: 1.0,
            estimator_tag: EstimatorTag::Mean,
        }
    }

    #[test]
    fn grid_values() {
        let g = BandwidthGrid::default();
        let b = g.grid();
        assert_eq!(b.len(), 20);
        assert!((b[0] - 0.05).abs() < 1e-15);
        assert_eq!(b[19], 1.0);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(BandwidthGrid::new(0.0, 20, 2.0).is_err());
        assert!(BandwidthGrid::new(1.0, 1, 2.0).is_err());
        assert!(BandwidthGrid::new(1.0, 20, 1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let same = vec![curve(&[1.0, 2.0]); 4];
        assert_eq!(adjacent_distances(&same).unwrap(), vec![0.0; 3]);
        let consts: Vec<_> = (1..=5).map(|l| curve(&[l as f64; 3])).collect();
        assert_eq!(adjacent_distances(&consts).unwrap(), vec![1.0; 4]);
        let d = adjacent_distances(&[curve(&[1.0, 2.0]), curve(&[1.5, 1.8])]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distances_skip_degenerate_points() {
        let mut a = curve(&[1.0, 2.0, 3.0]);
        a.values[2] = None;
        let b = curve(&[1.1, 2.0, 10.0]);
        let d = adjacent_distances(&[a, b]).unwrap();
        assert!((d[0] - 0.1).abs() < 1e-12);

        let mut dead = curve(&[1.0, 2.0]);
        dead.values = vec![None, None];
        let err = adjacent_distances(&[curve(&[1.0, 2.0]), dead]).unwrap_err();
        assert_eq!(err, Error::AllDegenerate { curve: 1 });
    }

    #[test]
    fn rule_examples() {
        let g = BandwidthGrid::new(1.0, 6, 2.0).unwrap();
        let t = select_bandwidth(&[0.9, 0.5, 0.19, 0.3, 0.25], &g).unwrap();
        assert_eq!(t.chosen_index, 4);
        assert!((t.chosen_bandwidth - 4.0 / 6.0).abs() < 1e-15);
        let t = select_bandwidth(&[0.8, 0.4, 0.2, 0.1, 0.05], &g).unwrap();
        assert_eq!(t.chosen_index, 6);
        let t = select_bandwidth(&[0.3; 5], &g).unwrap();
        assert_eq!(t.chosen_index, 2);
        let t = select_bandwidth(&[0.4, 0.2, 0.0, 0.1, 0.0], &g).unwrap();
        assert_eq!(t.chosen_index, 4);
        assert!(select_bandwidth(&[0.1; 4], &g).is_err());
        assert!(select_bandwidth(&[0.1, -0.1, 0.1, 0.1, 0.1], &g).is_err());
    }

    #[test]
    fn two_stage_with_stub_curves() {
        let g = BandwidthGrid::new(1.0, 6, 2.0).unwrap();
        let levels = [0.0, 0.9, 1.4, 1.59, 1.89, 2.14];
        let index = |bw: f64| (bw * 6.0).round() as usize;
        let sel = select_two_stage_with(
            &g,
            &g,
            |b| Ok(curve(&[levels[index(b) - 1]])),
            |b_hat, h| {
                assert!((b_hat - 4.0 / 6.0).abs() < 1e-15);
                Ok(curve(&[levels[index(h) - 1]]))
            },
        )
        .unwrap();
        assert_eq!(sel.mean_trace.chosen_index, 4);
        assert_eq!(sel.variance_trace.chosen_index, 4);
        assert_eq!(sel.b_hat, sel.h_hat);
    }
}
