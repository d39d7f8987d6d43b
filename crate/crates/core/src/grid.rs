//! Design-point grids written as `start:step:stop`.

use crate::error::{Error, Result};

/// Inclusive grid from `start` towards `stop` in increments of `step`.
///
/// The number of intervals is `round((stop − start)/step)`. Points are
/// weighted averages of the snapped endpoints, which keeps short decimal
/// grids such as `-0.5:0.1:0.5` exact.
pub fn linspace_step(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
        return Err(Error::InvalidInput("grid bounds must be finite".into()));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
    }
    if stop < start {
        return Err(Error::InvalidInput(format!("grid stop {stop} is below start {start}")));
    }
    let intervals = ((stop - start) / step).round();
    if intervals > 1e7 {
        return Err(Error::InvalidInput(format!("grid with {intervals} intervals is too large")));
    }
    let k = intervals as usize;
    if k == 0 {
        return Ok(vec![start]);
    }
    let end = start + k as f64 * step;
    let kf = k as f64;
    Ok((0..=k).map(|i| (start * (kf - i as f64) + end * i as f64) / kf).collect())
}

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number '{s}' in grid '{spec}'")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [a, s, b] => linspace_step(num(a)?, num(s)?, num(b)?),
        _ => Err(Error::InvalidInput(format!("grid '{spec}' is not start:step:stop"))),
    }
}

/// `x_j = −0.5 + (j − 1)·0.1`, `j = 1..11`.
pub fn unit_interval_points() -> Vec<f64> {
    linspace_step(-0.5, 0.1, 0.5).expect("static grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_points() {
        let xs = unit_interval_points();
        assert_eq!(xs.len(), 11);
        assert_eq!(xs[0], -0.5);
        assert_eq!(xs[5], 0.0);
        assert_eq!(xs[10], 0.5);
        for (j, x) in xs.iter().enumerate() {
            assert!((x - (-0.5 + j as f64 * 0.1)).abs() < 1e-15);
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_grid("-0.5:0.1:0.5").unwrap().len(), 11);
        assert_eq!(parse_grid("0.25").unwrap(), vec![0.25]);
        assert_eq!(parse_grid("-0.25:0.25:0.25").unwrap(), vec![-0.25, 0.0, 0.25]);
        // stop snapped to the rounded interval count
        assert_eq!(parse_grid("0:1:2.4").unwrap(), vec![0.0, 1.0, 2.0]);
        assert!(parse_grid("0:0:1").is_err());
        assert!(parse_grid("1:0.1:0").is_err());
        assert!(parse_grid("a:b").is_err());
    }
}
