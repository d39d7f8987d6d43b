use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use npreg_core::bandwidth::{select_two_stage, BandwidthGrid};
use npreg_core::dgp::{lattice_dei_metrics, DgpConfig};
use npreg_core::grid::parse_grid;
use npreg_core::inference::{confidence_band, BandScale, BandSpec, BandTarget};
use npreg_core::io::{
    read_dataset, write_band, write_coverage, write_curve, write_dataset, write_losses, write_scores,
};
use npreg_core::montecarlo::{
    run_clt_experiment, run_coverage_experiment, run_loss_curves, run_selection_experiment, McConfig, McSummary,
};
use npreg_core::{Error, Estimator, SpatialDataset};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Degenerate(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Degenerate(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
            Failure::Degenerate(_) => "degenerate",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Degenerate(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if e.is_degeneracy() {
            return Failure::Degenerate(msg);
        }
        match e {
            Error::InvalidInput(_) | Error::Domain(_) => Failure::Usage(msg),
            _ => Failure::Data(msg),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

pub fn run(cli: &Cli) -> Outcome {
    let echo = serde_json::to_value(cli).expect("arguments serialise");
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(a) => simulate(g, a, echo),
        Command::Estimate(a) => estimate(g, a, echo),
        Command::Band(a) => band(g, a, echo),
        Command::SelectBandwidth(a) => select(g, a, echo),
        Command::McClt(a) => monte_carlo(g, a, echo, false),
        Command::McCoverage(a) => monte_carlo(g, a, echo, true),
        Command::LossCurves(a) => grid_experiment(g, a, echo, false),
        Command::McSelect(a) => grid_experiment(g, a, echo, true),
        Command::Replay(a) => replay(g, a),
    }
}

fn workers(g: &Global) -> Result<usize, Failure> {
    match g.workers {
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn read_input(path: &Path) -> Result<SpatialDataset, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    read_dataset(io::BufReader::new(file)).map_err(|e| match e {
        e if e.is_degeneracy() => Failure::Degenerate(e.to_string()),
        e => Failure::Data(format!("{}: {e}", path.display())),
    })
}

fn points(spec: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(spec).map_err(|e| Failure::Usage(format!("--points: {e}")))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Outcome {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w).map_err(|e| io_failure(p, e))?;
            w.flush().map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush().map_err(|e| Failure::Data(e.to_string()))
        }
    }
}

fn emit_json(path: Option<&Path>, value: &Value) -> Outcome {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

/// `data.csv` → `data.json`; falls back to appending when the output is already JSON.
fn sidecar(out: &Path) -> PathBuf {
    let path = out.with_extension("json");
    if path == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        path
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable output")
}

fn simulate(g: &Global, a: &SimulateArgs, echo: Value) -> Outcome {
    let mut dgp = DgpConfig::default();
    dgp.lattice.side = a.side.unwrap_or(a.n);
    let sample = dgp.simulate(a.n, g.seed)?;
    emit(Some(&a.out), |w| write_dataset(w, &sample.dataset))?;
    let dei = lattice_dei_metrics(&sample.sites, dgp.lattice.spacing)?;
    let meta = json!({ "config": echo, "n": a.n, "seed": g.seed, "dgp": dgp, "dei": dei });
    emit_json(Some(&sidecar(&a.out)), &meta)
}

fn estimate(g: &Global, a: &EstimateArgs, echo: Value) -> Outcome {
    let data = read_input(&a.input)?;
    let xs = points(&a.points)?;
    let est = Estimator::new(&data, g.kernel);
    let (curve, excluded) = match a.target {
        EstimateTarget::Density => (est.density(&xs, a.bandwidth)?, 0),
        EstimateTarget::Mean => (est.nw_mean(&xs, a.bandwidth)?, 0),
        EstimateTarget::Jackknife => (est.jackknife_mean(&xs, a.bandwidth)?, 0),
        EstimateTarget::Variance => {
            let v = est.variance(&xs, a.bandwidth, a.mean_bandwidth)?;
            (v.curve, v.excluded)
        }
    };
    let meta = json!({
        "config": echo,
        "degenerate_points": curve.degenerate_points(),
        "excluded_residuals": excluded,
    });
    match g.format {
        Format::Csv => {
            emit(a.out.as_deref(), |w| write_curve(w, &curve))?;
            match &a.out {
                Some(out) => emit_json(Some(&sidecar(out)), &meta),
                None => Ok(()),
            }
        }
        Format::Json => {
            let mut v = meta;
            v["curve"] = to_value(&curve);
            emit_json(a.out.as_deref(), &v)
        }
    }
}

fn band(g: &Global, a: &BandArgs, echo: Value) -> Outcome {
    let data = read_input(&a.input)?;
    let xs = points(&a.points)?;
    let est = Estimator::new(&data, g.kernel);
    let target = match a.target {
        BandTargetArg::Density => BandTarget::Density,
        BandTargetArg::Mean => BandTarget::Mean,
        BandTargetArg::Variance => BandTarget::Variance,
    };
    let scale = if a.common_variance_bandwidth { BandScale::CommonVarianceBandwidth } else { BandScale::PerTarget };
    let spec = BandSpec { target, b: a.b, h: a.h, tau: a.tau, scale };
    let band = confidence_band(&est, &xs, &spec, &g.kernel.constants())?;
    match g.format {
        Format::Csv => {
            emit(a.out.as_deref(), |w| write_band(w, &band))?;
            match &a.out {
                Some(out) => emit_json(Some(&sidecar(out)), &json!({ "config": echo, "v4": band.v4 })),
                None => Ok(()),
            }
        }
        Format::Json => emit_json(a.out.as_deref(), &json!({ "config": echo, "band": band })),
    }
}

fn grids(a: &GridArgs) -> Result<(BandwidthGrid, BandwidthGrid), Failure> {
    Ok((
        BandwidthGrid::new(a.pilot_mean, a.grid_size, a.threshold)?,
        BandwidthGrid::new(a.pilot_variance, a.grid_size, a.threshold)?,
    ))
}

fn select(g: &Global, a: &SelectArgs, echo: Value) -> Outcome {
    let data = read_input(&a.input)?;
    let xs = points(&a.points)?;
    let (gm, gs) = grids(&a.grid)?;
    let est = Estimator::new(&data, g.kernel);
    let sel = select_two_stage(&est, &xs, &gm, &gs)?;
    emit_json(
        a.out.as_deref(),
        &json!({ "config": echo, "mean_grid": gm.grid(), "variance_grid": gs.grid(), "selection": sel }),
    )
}

fn mc_config(g: &Global, n: usize, replications: usize, xs: Vec<f64>) -> McConfig {
    McConfig { replications, design_points: xs, base_seed: g.seed, kernel: g.kernel, ..McConfig::default() }.with_n(n)
}

fn monte_carlo(g: &Global, a: &McArgs, echo: Value, coverage: bool) -> Outcome {
    let default_points = if coverage { "-0.5:0.1:0.5" } else { "-0.25:0.25:0.25" };
    let xs = points(a.points.as_deref().unwrap_or(default_points))?;
    let reps = a.replications.unwrap_or(if coverage { 500 } else { 250 });
    let mut cfg = mc_config(g, a.n, reps, xs);
    cfg.b = a.b;
    cfg.h = a.h;
    cfg.tau_list = a.tau.clone();
    if a.common_variance_bandwidth {
        cfg.band_scale = BandScale::CommonVarianceBandwidth;
    }
    let w = workers(g)?;
    let summary = if coverage { run_coverage_experiment(&cfg, w)? } else { run_clt_experiment(&cfg, w)? };
    write_mc(&a.out_dir, &summary, echo)
}

fn grid_experiment(g: &Global, a: &LossArgs, echo: Value, selection: bool) -> Outcome {
    let xs = points(&a.points)?;
    let mut cfg = mc_config(g, a.n, a.replications, xs);
    cfg.b = a.b;
    let (gm, gs) = grids(&a.grid)?;
    let w = workers(g)?;
    let summary = if selection { run_selection_experiment(&cfg, &gm, &gs, w)? } else { run_loss_curves(&cfg, &gm, w)? };
    write_mc(&a.out_dir, &summary, echo)
}

fn write_mc(dir: &Path, summary: &McSummary, echo: Value) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    emit(Some(&dir.join("scores.csv")), |w| write_scores(w, &summary.scores))?;
    emit(Some(&dir.join("coverage.csv")), |w| write_coverage(w, &summary.coverage))?;
    emit(Some(&dir.join("losses.csv")), |w| write_losses(w, &summary.losses))?;
    let doc = json!({
        "config": echo,
        "degeneracy_count": summary.degeneracies.len(),
        "summary": summary,
    });
    emit_json(Some(&dir.join("summary.json")), &doc)
}

/// An explicit `--workers` on the replay overrides the echoed count.
fn replay(g: &Global, a: &ReplayArgs) -> Outcome {
    let text = fs::read_to_string(&a.config).map_err(|e| io_failure(&a.config, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| io_failure(&a.config, e))?;
    let echo = doc.get("config").cloned().unwrap_or(doc);
    let mut cli: Cli = serde_json::from_value(echo)
        .map_err(|e| Failure::Data(format!("{}: not a config echo: {e}", a.config.display())))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Failure::Usage("a replay echo cannot be replayed".into()));
    }
    if let Some(out) = &a.out {
        cli.command.redirect(out.clone());
    }
    if g.workers.is_some() {
        cli.global.workers = g.workers;
    }
    run(&cli)
}
