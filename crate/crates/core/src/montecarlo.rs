//! Seeded replication engine for the limit-theorem, coverage,
//! loss-curve and bandwidth-selection experiments.
//!
//! Replication `r` draws its data from `replication_seed(base_seed, r)`,
//! so results do not depend on the number of worker threads or on the
//! order in which replications finish. Aggregation always runs in
//! replication order with compensated sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{adjacent_distances, select_two_stage, BandwidthGrid};
use crate::dgp::{DgpConfig, SimulatedSample, Truths};
use crate::error::{Error, Result};
use crate::estimators::{check_design, CurveEstimate, Estimator};
use crate::inference::{band_with_residuals, mean_scores, variance_scores, BandScale, BandSpec, BandTarget};
use crate::kernel::Kernel;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub n: usize,
    pub b: f64,
    pub h: f64,
    pub design_points: Vec<f64>,
    pub tau_list: Vec<f64>,
    pub base_seed: u64,
    pub dgp: DgpConfig,
    pub kernel: Kernel,
    pub band_scale: BandScale,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 250,
            n: 750,
            b: 0.5,
            h: 0.5,
            design_points: vec![-0.25, 0.0, 0.25],
            tau_list: vec![0.05],
            base_seed: 0,
            dgp: DgpConfig::default(),
            kernel: Kernel::EPANECHNIKOV,
            band_scale: BandScale::PerTarget,
        }
    }
}

impl McConfig {
    /// Sample size `n` on an `n × n` lattice.
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self.dgp.lattice.side = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if !(self.b > 0.0 && self.h > 0.0) {
            return Err(Error::Domain("bandwidths must be positive".into()));
        }
        check_design(&self.design_points)?;
        if let Some(t) = self.tau_list.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Domain(format!("tau must lie in (0, 1), got {t}")));
        }
        self.dgp.validate()
    }
}

/// Counter-based seed for replication `r`: SplitMix64 finalisation of `base ⊕ mix(r)`.
pub fn replication_seed(base_seed: u64, replication: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(replication as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub replication: usize,
    pub x: f64,
    pub target: BandTarget,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub x: f64,
    pub target: BandTarget,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub replication: usize,
    pub target: BandTarget,
    pub tau: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRate {
    pub target: BandTarget,
    pub tau: f64,
    pub covered: usize,
    pub valid: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub replication: usize,
    pub bandwidth_index: usize,
    pub bandwidth: f64,
    pub loss_mean: Option<f64>,
    pub loss_jackknife: Option<f64>,
    pub loss_variance: Option<f64>,
    /// Sup-distance to the previous bandwidth's curve; absent for the first bandwidth.
    pub adjacent_mean: Option<f64>,
    pub adjacent_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub replication: usize,
    pub b_hat: f64,
    pub h_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub replication: usize,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub experiment: String,
    pub config: McConfig,
    /// Where the population curves came from.
    pub truth_provenance: String,
    pub notes: Vec<String>,
    pub degeneracies: Vec<Degeneracy>,
    pub score_stats: Vec<ScoreStats>,
    pub scores: Vec<ScoreRecord>,
    pub coverage: Vec<CoverageRate>,
    pub coverage_records: Vec<CoverageRecord>,
    pub losses: Vec<LossRecord>,
    pub selections: Vec<SelectionRecord>,
}

impl McSummary {
    fn empty(experiment: &str, cfg: &McConfig) -> Self {
        McSummary {
            experiment: experiment.to_string(),
            config: cfg.clone(),
            truth_provenance: "analytic: covariate density N(0, sum of squared stencil weights); \
                               mean and variance from the regression spec; V4 from the noise law"
                .to_string(),
            notes: Vec::new(),
            degeneracies: Vec::new(),
            score_stats: Vec::new(),
            scores: Vec::new(),
            coverage: Vec::new(),
            coverage_records: Vec::new(),
            losses: Vec::new(),
            selections: Vec::new(),
        }
    }

    pub fn stats_for(&self, x: f64, target: BandTarget) -> Option<&ScoreStats> {
        self.score_stats.iter().find(|s| s.x == x && s.target == target)
    }

    pub fn coverage_for(&self, target: BandTarget, tau: f64) -> Option<&CoverageRate> {
        self.coverage.iter().find(|c| c.target == target && c.tau == tau)
    }

    /// Share of `(replication, bandwidth ≥ min_bandwidth)` cells where the
    /// jackknife sup-loss does not exceed the plain one, with the cell count.
    pub fn jackknife_win_fraction(&self, min_bandwidth: f64) -> (f64, usize) {
        let cells: Vec<bool> = self
            .losses
            .iter()
            .filter(|l| l.bandwidth >= min_bandwidth - 1e-12)
            .filter_map(|l| Some(l.loss_jackknife? <= l.loss_mean?))
            .collect();
        let wins = cells.iter().filter(|w| **w).count();
        (wins as f64 / cells.len().max(1) as f64, cells.len())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

/// Runs `body` on every replication's sample, returning results in replication order.
fn replicate<T, F>(cfg: &McConfig, workers: usize, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &SimulatedSample) -> T + Sync,
{
    cfg.validate()?;
    pool(workers)?.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let sample = cfg.dgp.simulate(cfg.n, replication_seed(cfg.base_seed, r))?;
                Ok(body(r, &sample))
            })
            .collect()
    })
}

fn degeneracy(replication: usize, stage: &str, err: &Error) -> Degeneracy {
    Degeneracy { replication, stage: stage.to_string(), message: err.to_string() }
}

fn summarize_scores(xs: &[f64], targets: &[BandTarget], scores: &[ScoreRecord]) -> Vec<ScoreStats> {
    let mut out = Vec::new();
    for &target in targets {
        for &x in xs {
            let v: Vec<f64> = scores.iter().filter(|s| s.target == target && s.x == x).map(|s| s.score).collect();
            if v.is_empty() {
                continue;
            }
            out.push(ScoreStats {
                x,
                target,
                count: v.len(),
                mean: stats::mean(&v),
                sd: stats::std_dev(&v),
                ks: stats::ks_standard_normal(&v),
            });
        }
    }
    out
}

type RepScores = (Vec<ScoreRecord>, Vec<Degeneracy>);

fn clt_replication(cfg: &McConfig, truths: &Truths, r: usize, sample: &SimulatedSample) -> RepScores {
    let xs = &cfg.design_points;
    let kc = cfg.kernel.constants();
    let est = Estimator::new(&sample.dataset, cfg.kernel);
    let n = sample.dataset.n();
    let mut records = Vec::new();
    let mut degenerate = Vec::new();

    let mean = est
        .nw_mean(xs, cfg.b)
        .and_then(|c| c.require_all())
        .and_then(|m| mean_scores(n, cfg.b, &kc, xs, &m, &truths.mu, &truths.sigma2, &truths.density));
    match mean {
        Ok(s) => records.extend(s.design_points.iter().zip(&s.scores).map(|(&x, &score)| ScoreRecord {
            replication: r,
            x,
            target: BandTarget::Mean,
            score,
        })),
        Err(e) => degenerate.push(degeneracy(r, "mean", &e)),
    }

    let var = est
        .variance(xs, cfg.h, cfg.b)
        .and_then(|v| v.curve.require_all())
        .and_then(|s2| variance_scores(n, cfg.h, truths.v4, &kc, xs, &s2, &truths.sigma2, &truths.density));
    match var {
        Ok(s) => records.extend(s.design_points.iter().zip(&s.scores).map(|(&x, &score)| ScoreRecord {
            replication: r,
            x,
            target: BandTarget::Variance,
            score,
        })),
        Err(e) => degenerate.push(degeneracy(r, "variance", &e)),
    }
    (records, degenerate)
}

/// Normalised mean and variance deviations at the design points against analytic truths.
pub fn run_clt_experiment(cfg: &McConfig, workers: usize) -> Result<McSummary> {
    let truths = cfg.dgp.truths(&cfg.design_points);
    let per_rep = replicate(cfg, workers, |r, s| clt_replication(cfg, &truths, r, s))?;
    let mut summary = McSummary::empty("clt", cfg);
    for (records, degenerate) in per_rep {
        summary.scores.extend(records);
        summary.degeneracies.extend(degenerate);
    }
    summary.score_stats =
        summarize_scores(&cfg.design_points, &[BandTarget::Mean, BandTarget::Variance], &summary.scores);
    Ok(summary)
}

type RepCoverage = (Vec<CoverageRecord>, Vec<Degeneracy>);

fn coverage_replication(cfg: &McConfig, truths: &Truths, r: usize, sample: &SimulatedSample) -> RepCoverage {
    let xs = &cfg.design_points;
    let kc = cfg.kernel.constants();
    let est = Estimator::new(&sample.dataset, cfg.kernel);
    let mut records = Vec::new();
    let mut degenerate = Vec::new();
    let residuals = match est.residuals(cfg.b) {
        Ok(r) => r,
        Err(e) => {
            degenerate.push(degeneracy(r, "residuals", &e));
            return (records, degenerate);
        }
    };
    for target in [BandTarget::Mean, BandTarget::Variance] {
        let truth = match target {
            BandTarget::Mean => &truths.mu,
            _ => &truths.sigma2,
        };
        for &tau in &cfg.tau_list {
            let spec = BandSpec { target, b: cfg.b, h: cfg.h, tau, scale: cfg.band_scale };
            match band_with_residuals(&est, Some(&residuals), xs, &spec, &kc) {
                Ok(band) => records.push(CoverageRecord { replication: r, target, tau, covered: band.contains(truth) }),
                Err(e) => degenerate.push(degeneracy(r, target.as_str(), &e)),
            }
        }
    }
    (records, degenerate)
}

pub fn coverage_rates(records: &[CoverageRecord], taus: &[f64], targets: &[BandTarget]) -> Vec<CoverageRate> {
    let mut out = Vec::new();
    for &target in targets {
        for &tau in taus {
            let subset: Vec<bool> =
                records.iter().filter(|c| c.target == target && c.tau == tau).map(|c| c.covered).collect();
            let covered = subset.iter().filter(|c| **c).count();
            let valid = subset.len();
            let rate = if valid == 0 { f64::NAN } else { covered as f64 / valid as f64 };
            out.push(CoverageRate { target, tau, covered, valid, rate });
        }
    }
    out
}

/// Joint coverage of the mean and variance bands over replications.
pub fn run_coverage_experiment(cfg: &McConfig, workers: usize) -> Result<McSummary> {
    let truths = cfg.dgp.truths(&cfg.design_points);
    let per_rep = replicate(cfg, workers, |r, s| coverage_replication(cfg, &truths, r, s))?;
    let mut summary = McSummary::empty("coverage", cfg);
    summary.notes.push(
        "repeated-sampling coverage of the joint bands; the band construction is shown on a single \
         realisation in its original setting, replication is an extension"
            .to_string(),
    );
    if cfg.band_scale == BandScale::CommonVarianceBandwidth {
        summary.notes.push("all band half-widths divide by sqrt(n*h)".to_string());
    }
    for (records, degenerate) in per_rep {
        summary.coverage_records.extend(records);
        summary.degeneracies.extend(degenerate);
    }
    summary.coverage =
        coverage_rates(&summary.coverage_records, &cfg.tau_list, &[BandTarget::Mean, BandTarget::Variance]);
    Ok(summary)
}

fn sup_loss(curve: &CurveEstimate, truth: &[f64]) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (v, t) in curve.values.iter().zip(truth) {
        let d = (v.as_ref()? - t).abs();
        worst = Some(worst.map_or(d, |w: f64| w.max(d)));
    }
    worst
}

type RepLosses = (Vec<LossRecord>, Vec<Degeneracy>);

fn loss_replication(
    cfg: &McConfig,
    grid: &BandwidthGrid,
    truths: &Truths,
    r: usize,
    sample: &SimulatedSample,
) -> Result<RepLosses> {
    let xs = &cfg.design_points;
    let est = Estimator::new(&sample.dataset, cfg.kernel);
    let residuals = est.residuals(cfg.b)?;
    let mut records = Vec::new();
    let mut degenerate = Vec::new();
    let mut prev: Option<(CurveEstimate, CurveEstimate)> = None;
    for (i, bw) in grid.grid().into_iter().enumerate() {
        let mean = est.nw_mean(xs, bw)?;
        let jack = est.jackknife_mean(xs, bw)?;
        let var = est.variance_from_residuals(&residuals, xs, bw)?.curve;
        for (name, c) in [("mean", &mean), ("jackknife_mean", &jack), ("variance", &var)] {
            if !c.degenerate_points().is_empty() {
                let e = Error::DegenerateDensity { x: c.degenerate_points()[0] };
                degenerate.push(degeneracy(r, &format!("{name} at bandwidth {bw}"), &e));
            }
        }
        let adjacent =
            |a: &CurveEstimate, b: &CurveEstimate| adjacent_distances(&[a.clone(), b.clone()]).ok().map(|d| d[0]);
        let (adjacent_mean, adjacent_variance) = match &prev {
            Some((pm, pv)) => (adjacent(pm, &mean), adjacent(pv, &var)),
            None => (None, None),
        };
        records.push(LossRecord {
            replication: r,
            bandwidth_index: i + 1,
            bandwidth: bw,
            loss_mean: sup_loss(&mean, &truths.mu),
            loss_jackknife: sup_loss(&jack, &truths.mu),
            loss_variance: sup_loss(&var, &truths.sigma2),
            adjacent_mean,
            adjacent_variance,
        });
        prev = Some((mean, var));
    }
    Ok((records, degenerate))
}

/// Discrete sup-losses of the plain, jackknife and variance estimators
/// across a bandwidth grid. The variance curves use residuals from the
/// jackknife mean at `cfg.b`.
pub fn run_loss_curves(cfg: &McConfig, grid: &BandwidthGrid, workers: usize) -> Result<McSummary> {
    let truths = cfg.dgp.truths(&cfg.design_points);
    let per_rep = replicate(cfg, workers, |r, s| loss_replication(cfg, grid, &truths, r, s))?;
    let mut summary = McSummary::empty("loss_curves", cfg);
    summary.notes.push(format!("bandwidth grid: pilot {}, {} candidates", grid.pilot(), grid.count()));
    for (r, rep) in per_rep.into_iter().enumerate() {
        match rep {
            Ok((records, degenerate)) => {
                summary.losses.extend(records);
                summary.degeneracies.extend(degenerate);
            }
            Err(e) => summary.degeneracies.push(degeneracy(r, "loss_curves", &e)),
        }
    }
    Ok(summary)
}

/// Two-stage bandwidth selection on each replication.
pub fn run_selection_experiment(
    cfg: &McConfig,
    grid_mu: &BandwidthGrid,
    grid_sigma: &BandwidthGrid,
    workers: usize,
) -> Result<McSummary> {
    let per_rep = replicate(cfg, workers, |_, s| {
        let est = Estimator::new(&s.dataset, cfg.kernel);
        select_two_stage(&est, &cfg.design_points, grid_mu, grid_sigma)
    })?;
    let mut summary = McSummary::empty("bandwidth_selection", cfg);
    for (r, rep) in per_rep.into_iter().enumerate() {
        match rep {
            Ok(sel) => summary.selections.push(SelectionRecord { replication: r, b_hat: sel.b_hat, h_hat: sel.h_hat }),
            Err(e) => summary.degeneracies.push(degeneracy(r, "selection", &e)),
        }
    }
    Ok(summary)
}
