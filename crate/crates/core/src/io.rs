//! CSV formats for datasets, curves, bands and Monte Carlo tables.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimators::{CurveEstimate, SpatialDataset};
use crate::inference::ConfidenceBand;
use crate::montecarlo::{CoverageRate, LossRecord, ScoreRecord};

pub const DATASET_HEADER: [&str; 4] = ["u", "v", "x", "y"];
pub const CURVE_HEADER: [&str; 4] = ["x", "value", "estimator", "bandwidth"];
pub const BAND_HEADER: [&str; 8] = ["x", "center", "lo", "hi", "target", "tau", "q_tau", "bandwidth"];

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parse { line, message: format!("{other:?}") },
    }
}

/// Reads `u,v,x,y` rows. Errors carry the 1-based line number of the offending row.
pub fn read_dataset<R: Read>(reader: R) -> Result<SpatialDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 'u,v,x,y', found '{}'", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut lines = Vec::new();
    let (mut locs, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 4 {
            return Err(Error::Parse { line, message: format!("expected 4 fields, found {}", rec.len()) });
        }
        let mut vals = [0.0; 4];
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("field '{}' is not a number: '{field}'", DATASET_HEADER[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, message: format!("field '{}' is not finite", DATASET_HEADER[i]) });
            }
            vals[i] = v;
        }
        lines.push(line);
        locs.push((vals[0], vals[1]));
        xs.push(vals[2]);
        ys.push(vals[3]);
    }
    SpatialDataset::new(locs, xs, ys).map_err(|e| match e {
        Error::DuplicateLocation { first, second } => Error::Parse {
            line: lines[second],
            message: format!("location duplicates the one on line {}", lines[first]),
        },
        other => other,
    })
}

pub fn write_dataset<W: Write>(writer: W, data: &SpatialDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DATASET_HEADER).map_err(csv_err)?;
    for j in 0..data.n() {
        let (u, v) = data.locations()[j];
        w.write_record([u, v, data.x()[j], data.y()[j]].map(|f| f.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Degenerate points are written with an empty `value` field.
pub fn write_curve<W: Write>(writer: W, curve: &CurveEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for (x, v) in curve.design_points.iter().zip(&curve.values) {
        let value = v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([x.to_string(), value, curve.estimator_tag.as_str().to_string(), curve.bandwidth.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_band<W: Write>(writer: W, band: &ConfidenceBand) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BAND_HEADER).map_err(csv_err)?;
    let (lo, hi) = (band.lower(), band.upper());
    for j in 0..band.centers.len() {
        w.write_record([
            band.design_points[j].to_string(),
            band.centers[j].to_string(),
            lo[j].to_string(),
            hi[j].to_string(),
            band.target.as_str().to_string(),
            band.tau.to_string(),
            band.q_tau.to_string(),
            band.bandwidth.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scores<W: Write>(writer: W, scores: &[ScoreRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replication", "x", "target", "score"]).map_err(csv_err)?;
    for s in scores {
        w.write_record([
            s.replication.to_string(),
            s.x.to_string(),
            s.target.as_str().to_string(),
            s.score.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coverage<W: Write>(writer: W, rates: &[CoverageRate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["target", "tau", "covered", "valid", "rate"]).map_err(csv_err)?;
    for c in rates {
        w.write_record([
            c.target.as_str().to_string(),
            c.tau.to_string(),
            c.covered.to_string(),
            c.valid.to_string(),
            c.rate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_losses<W: Write>(writer: W, losses: &[LossRecord]) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "replication",
        "bandwidth_index",
        "bandwidth",
        "loss_mean",
        "loss_jackknife",
        "loss_variance",
        "adjacent_mean",
        "adjacent_variance",
    ])
    .map_err(csv_err)?;
    for l in losses {
        w.write_record([
            l.replication.to_string(),
            l.bandwidth_index.to_string(),
            l.bandwidth.to_string(),
            opt(l.loss_mean),
            opt(l.loss_jackknife),
            opt(l.loss_variance),
            opt(l.adjacent_mean),
            opt(l.adjacent_variance),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
