//! θ grids and CSV series output.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `start:stop:step`, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        if stop < start {
            return Err(Error::Config(format!("grid stop {stop} is below start {start}")));
        }
        if (stop - start) / step > 1e7 {
            return Err(Error::Config("grid has more than 10^7 points".into()));
        }
        Ok(Self { start, stop, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid '{s}' is not start:stop:step")));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad grid value '{t}' in '{s}'")));
        Grid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

/// 17 significant digits; `-0` prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// `theta,value` rows.
pub fn write_series(points: &[(f64, f64)]) -> String {
    let mut out = String::from("theta,value\n");
    for (t, v) in points {
        let _ = writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    out
}

/// `theta,value,series` rows, one block per named series.
pub fn write_multi_series(series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::from("theta,value,series\n");
    for (name, pts) in series {
        for (t, v) in pts {
            let _ = writeln!(out, "{},{},{name}", fmt_f64(*t), fmt_f64(*v));
        }
    }
    out
}

/// Parses the first two columns of a `theta,value[,series]` file.
pub fn read_series(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = || {
            cols.next()
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("row {}: expected two numbers", i + 1)))
        };
        out.push((next()?, next()?));
    }
    Ok(out)
}

/// Grid point with the largest value.
pub fn argmax(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    points.iter().copied().filter(|p| p.1.is_finite()).max_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:1:0.25".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("0:10:0.01".parse::<Grid>().unwrap().points().len(), 1001);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:inf:1".parse::<Grid>().is_err());
    }

    #[test]
    fn round_trip() {
        let pts = vec![(0.0, 1.0), (0.1, std::f64::consts::PI)];
        let back = read_series(&write_series(&pts)).unwrap();
        assert_eq!(pts, back);
        assert_eq!(argmax(&pts), Some((0.1, std::f64::consts::PI)));
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
    }
}
