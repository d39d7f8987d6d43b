//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use npreg_core::bandwidth::BandwidthGrid;
use npreg_core::dgp::{dei_metrics, lattice_dei_metrics, LatticeConfig};
use npreg_core::estimators::{Estimator, SpatialDataset};
use npreg_core::grid::unit_interval_points;
use npreg_core::inference::{max_abs_normal_quantile, BandTarget};
use npreg_core::kernel::Kernel;
use npreg_core::montecarlo::{
    run_clt_experiment, run_coverage_experiment, run_loss_curves, run_selection_experiment, McConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn within_time(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

// ---------------------------------------------------------------------------
// 1. kernel constants

fn kernel_constants() -> Outcome {
    let start = Instant::now();
    let c = Kernel::EPANECHNIKOV.constants();
    let dl2 = (c.l2_norm_sq - 0.6).abs();
    let dck = (c.c_k - 0.2).abs();
    let t = start.elapsed();
    Outcome {
        pass: dl2 <= 1e-6 && dck <= 1e-6 && within_time(t, Duration::from_secs(1)),
        detail: format!("|K|^2 = {:.12} (err {dl2:.1e}), c_K = {:.12} (err {dck:.1e}), {t:?}", c.l2_norm_sq, c.c_k),
    }
}

// ---------------------------------------------------------------------------
// 2. oracle equivalence against naive double loops written from the defining sums

struct Naive<'a> {
    x: &'a [f64],
    y: &'a [f64],
    k: Kernel,
}

impl Naive<'_> {
    fn n(&self) -> f64 {
        self.x.len() as f64
    }

    fn f_hat(&self, pt: f64, b: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.x.len() {
            s += self.k.eval((pt - self.x[j]) / b);
        }
        s / (self.n() * b)
    }

    fn mu_hat(&self, pt: f64, b: f64) -> Option<f64> {
        let f = self.f_hat(pt, b);
        if f * self.n() * b < 1e-12 {
            return None;
        }
        let mut s = 0.0;
        for j in 0..self.x.len() {
            s += self.y[j] * self.k.eval((pt - self.x[j]) / b);
        }
        Some(s / (self.n() * b * f))
    }

    fn mu_star(&self, pt: f64, b: f64) -> Option<f64> {
        Some(2.0 * self.mu_hat(pt, b)? - self.mu_hat(pt, 2f64.sqrt() * b)?)
    }

    // observations whose residual is undefined drop out of both sums
    fn sigma2_hat(&self, pt: f64, h: f64, b: f64) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.x.len() {
            let Some(m) = self.mu_star(self.x[j], b) else { continue };
            let w = self.k.eval((pt - self.x[j]) / h);
            num += (self.y[j] - m).powi(2) * w;
            den += w;
        }
        (den >= 1e-12).then(|| num / den)
    }

    fn v4_hat(&self, lo: f64, hi: f64, b: f64, h: f64) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.x.len() {
            if self.x[j] < lo || self.x[j] > hi {
                continue;
            }
            let (Some(m), Some(s2)) = (self.mu_star(self.x[j], b), self.sigma2_hat(self.x[j], h, b)) else {
                continue;
            };
            if s2 < 1e-8 {
                continue;
            }
            num += ((self.y[j] - m) / s2.sqrt()).powi(4);
            den += 1.0;
        }
        (den > 0.0).then(|| num / den - 1.0)
    }
}

// relative for |b| >= 1, absolute below; values that cancel to ~0 have no meaningful relative error
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    let mut mismatched_none = 0;
    let mut compared = 0usize;
    for inst in 0..200 {
        let n = rng.random_range(2..=50);
        let kernel = [Kernel::EPANECHNIKOV, Kernel::UNIFORM, Kernel::TRIANGULAR][inst % 3];
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y: Vec<f64> = x.iter().map(|x| 0.1 + 0.3 * x + rng.sample::<f64, _>(StandardNormal)).collect();
        let locs = (0..n).map(|i| (i as f64 * 0.3, (i % 7) as f64)).collect();
        let d = SpatialDataset::new(locs, x.clone(), y.clone()).unwrap();
        let est = Estimator::new(&d, kernel);
        let naive = Naive { x: &x, y: &y, k: kernel };
        let b = rng.random_range(0.15..1.0);
        let h = rng.random_range(0.15..1.0);
        let mut xs: Vec<f64> = (0..7).map(|_| rng.random_range(-1.2..1.2)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let mut check = |a: Option<f64>, r: Option<f64>| match (a, r) {
            (Some(a), Some(r)) => {
                if std::env::var("ORACLE_DEBUG").is_ok() && rel_err(a, r) > 1e-12 {
                    eprintln!("inst {inst} n {n}: impl {a} naive {r}");
                }
                worst = worst.max(rel_err(a, r));
                compared += 1;
            }
            (None, None) => {}
            (a, r) => {
                if std::env::var("ORACLE_DEBUG").is_ok() {
                    eprintln!("inst {inst} n {n}: impl {a:?} naive {r:?}");
                }
                mismatched_none += 1
            }
        };
        let dens = est.density(&xs, b).unwrap();
        let mean = est.nw_mean(&xs, b).unwrap();
        let jack = est.jackknife_mean(&xs, b).unwrap();
        let var = est.variance(&xs, h, b).unwrap();
        for (j, &pt) in xs.iter().enumerate() {
            check(dens.values[j], Some(naive.f_hat(pt, b)));
            check(mean.values[j], naive.mu_hat(pt, b));
            check(jack.values[j], naive.mu_star(pt, b));
            check(var.curve.values[j], naive.sigma2_hat(pt, h, b));
        }
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        check(est.v4((lo, hi), b, h).ok(), naive.v4_hat(lo, hi, b, h));
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-12 && mismatched_none == 0 && within_time(t, Duration::from_secs(10)),
        detail: format!("{compared} values on 200 instances, max rel err {worst:.2e}, definedness mismatches {mismatched_none}, {t:?}"),
    }
}

// ---------------------------------------------------------------------------
// 3. max-normal quantile vs simulation

fn quantile_simulation() -> Outcome {
    let start = Instant::now();
    let draws = 1_000_000usize;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (i, &n) in [1usize, 5, 11, 50].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + i as u64);
        let mut maxima: Vec<f64> = (0..draws)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).fold(0.0, f64::max))
            .collect();
        maxima.sort_by(f64::total_cmp);
        for &tau in &[0.01, 0.05, 0.15] {
            let idx = ((1.0 - tau) * draws as f64).ceil() as usize - 1;
            let empirical = maxima[idx];
            let closed = max_abs_normal_quantile(n, tau).unwrap();
            worst = worst.max((empirical - closed).abs());
            lines.push(format!("N={n},tau={tau}: {closed:.4}/{empirical:.4}"));
        }
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 0.01 && within_time(t, Duration::from_secs(30)),
        detail: format!("max |closed - simulated| = {worst:.4}, {t:?}; {}", lines.join(" ")),
    }
}

// ---------------------------------------------------------------------------
// 4. limit-theorem reproduction

fn clt_reproduction() -> Outcome {
    let start = Instant::now();
    let cfg = McConfig { replications: 250, base_seed: 4, ..McConfig::default() }.with_n(750);
    let s = run_clt_experiment(&cfg, workers()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for target in [BandTarget::Mean, BandTarget::Variance] {
        for &x in &[-0.25, 0.0, 0.25] {
            let st = s.stats_for(x, target).expect("stats present");
            let ok = st.mean.abs() <= 0.25 && (0.8..=1.2).contains(&st.sd) && st.ks <= 0.12;
            pass &= ok;
            parts.push(format!(
                "{}@{x}: mean {:+.3} sd {:.3} ks {:.3} n={}{}",
                target.as_str(),
                st.mean,
                st.sd,
                st.ks,
                st.count,
                if ok { "" } else { " <-" }
            ));
        }
    }
    let t = start.elapsed();
    pass &= within_time(t, Duration::from_secs(300));
    Outcome { pass, detail: format!("{}; degeneracies {}; {t:?}", parts.join(" | "), s.degeneracies.len()) }
}

// ---------------------------------------------------------------------------
// 5. joint band coverage

fn band_coverage() -> Outcome {
    let start = Instant::now();
    let cfg = McConfig {
        replications: 500,
        base_seed: 5,
        design_points: unit_interval_points(),
        tau_list: vec![0.05],
        ..McConfig::default()
    }
    .with_n(750);
    let s = run_coverage_experiment(&cfg, workers()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for target in [BandTarget::Mean, BandTarget::Variance] {
        let c = s.coverage_for(target, 0.05).unwrap();
        let ok = (0.88..=0.99).contains(&c.rate);
        pass &= ok;
        parts.push(format!("{} {:.3} ({}/{})", target.as_str(), c.rate, c.covered, c.valid));
    }
    let t = start.elapsed();
    pass &= within_time(t, Duration::from_secs(600));
    Outcome { pass, detail: format!("{}; degeneracies {}; {t:?}", parts.join(", "), s.degeneracies.len()) }
}

// ---------------------------------------------------------------------------
// 6. jackknife trend at large bandwidths

fn jackknife_trend() -> Outcome {
    let start = Instant::now();
    let grid = BandwidthGrid::default();
    let mut wins = 0.0;
    let mut cells = 0usize;
    let mut parts = Vec::new();
    for (i, &n) in [750usize, 1250].iter().enumerate() {
        let cfg = McConfig {
            replications: 50,
            base_seed: 60 + i as u64,
            design_points: unit_interval_points(),
            ..McConfig::default()
        }
        .with_n(n);
        let s = run_loss_curves(&cfg, &grid, workers()).unwrap();
        let (frac, count) = s.jackknife_win_fraction(0.6);
        parts.push(format!("n={n}: {frac:.3} of {count}"));
        wins += frac * count as f64;
        cells += count;
    }
    let overall = wins / cells as f64;
    Outcome {
        pass: overall > 0.5,
        detail: format!("fraction {overall:.3} over {cells} cells ({}); {:?}", parts.join(", "), start.elapsed()),
    }
}

// ---------------------------------------------------------------------------
// 7. bandwidth rule

fn bandwidth_rule() -> Outcome {
    let start = Instant::now();
    let cfg = McConfig { replications: 50, base_seed: 7, design_points: unit_interval_points(), ..McConfig::default() }
        .with_n(750);
    let grid = BandwidthGrid::new(1.0, 20, 2.0).unwrap();
    let s = run_selection_experiment(&cfg, &grid, &grid, workers()).unwrap();
    let in_range = |v: f64| (0.3 - 1e-12..=0.8 + 1e-12).contains(&v);
    let b_ok = s.selections.iter().filter(|r| in_range(r.b_hat)).count();
    let h_ok = s.selections.iter().filter(|r| in_range(r.h_hat)).count();
    let total = cfg.replications as f64;
    let fb = b_ok as f64 / total;
    let fh = h_ok as f64 / total;
    let hist = |f: &dyn Fn(&npreg_core::montecarlo::SelectionRecord) -> f64| {
        let mut v: Vec<f64> = s.selections.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((v.len() - 1) as f64 * p) as usize];
        format!("[{:.2} {:.2} {:.2}]", q(0.1), q(0.5), q(0.9))
    };
    Outcome {
        pass: fb >= 0.8 && fh >= 0.8,
        detail: format!(
            "b in range {fb:.2}, h in range {fh:.2}; deciles/median b {} h {}; degeneracies {}; {:?}",
            hist(&|r| r.b_hat),
            hist(&|r| r.h_hat),
            s.degeneracies.len(),
            start.elapsed()
        ),
    }
}

// ---------------------------------------------------------------------------
// 8. DEI diagnostics

fn dei_diagnostics() -> Outcome {
    let lattice = LatticeConfig { side: 30, ..LatticeConfig::default() };
    let sites: Vec<_> = (0..30).flat_map(|p| (0..30).map(move |q| (p, q))).map(|(p, q)| lattice.site(p, q)).collect();
    let coords: Vec<(f64, f64)> = sites.iter().map(|s| (s.u, s.v)).collect();
    let m = dei_metrics(&coords).unwrap();
    let exact = lattice_dei_metrics(&sites, lattice.spacing).unwrap();
    let hand = dei_metrics(&[(0.0, 0.0), (0.0, 1.0), (0.0, 3.0)]).unwrap();
    Outcome {
        pass: (m.delta_n - 0.3).abs() <= 1e-12
            && exact.delta_n == 0.3
            && hand.delta_n == 2.0
            && hand.big_delta_n == 2.0,
        detail: format!(
            "full 30x30 lattice delta_n = {:.15} from coordinates, {} from indices; hand example ({}, {})",
            m.delta_n, exact.delta_n, hand.delta_n, hand.big_delta_n
        ),
    }
}

// ---------------------------------------------------------------------------
// 9. determinism

fn determinism() -> Outcome {
    let cfg = McConfig {
        replications: 12,
        base_seed: 9,
        design_points: unit_interval_points(),
        tau_list: vec![0.05, 0.15],
        ..McConfig::default()
    }
    .with_n(300);
    let echo = serde_json::to_string(&cfg).unwrap();
    let replay: McConfig = serde_json::from_str(&echo).unwrap();
    let grid = BandwidthGrid::new(1.0, 8, 2.0).unwrap();
    let w = workers().max(2);

    let clt_a = run_clt_experiment(&cfg, 1).unwrap();
    let clt_b = run_clt_experiment(&replay, w).unwrap();
    let cov_a = run_coverage_experiment(&cfg, 1).unwrap();
    let cov_b = run_coverage_experiment(&replay, w).unwrap();
    let loss_a = run_loss_curves(&cfg, &grid, 1).unwrap();
    let loss_b = run_loss_curves(&replay, &grid, w).unwrap();
    let sel_a = run_selection_experiment(&cfg, &grid, &grid, 1).unwrap();
    let sel_b = run_selection_experiment(&replay, &grid, &grid, w).unwrap();

    let bits = |a: &npreg_core::montecarlo::McSummary, b: &npreg_core::montecarlo::McSummary| {
        serde_json::to_string(a).unwrap() == serde_json::to_string(b).unwrap() && a == b
    };
    let checks = [
        ("clt", bits(&clt_a, &clt_b)),
        ("coverage", bits(&cov_a, &cov_b)),
        ("loss", bits(&loss_a, &loss_b)),
        ("selection", bits(&sel_a, &sel_b)),
    ];
    let scores_bitwise = clt_a.scores.iter().zip(&clt_b.scores).all(|(a, b)| a.score.to_bits() == b.score.to_bits());
    Outcome {
        pass: checks.iter().all(|c| c.1) && scores_bitwise,
        detail: format!(
            "1 vs {w} workers via config echo: {}",
            checks.iter().map(|(n, ok)| format!("{n}={ok}")).collect::<Vec<_>>().join(" ")
        ),
    }
}

fn main() {
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 kernel constants", kernel_constants),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 quantile vs simulation", quantile_simulation),
        ("4 CLT reproduction", clt_reproduction),
        ("5 band coverage", band_coverage),
        ("6 jackknife trend", jackknife_trend),
        ("7 bandwidth rule", bandwidth_rule),
        ("8 DEI diagnostics", dei_diagnostics),
        ("9 determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let out = run();
        println!("[{}] criterion {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        if !out.pass {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
