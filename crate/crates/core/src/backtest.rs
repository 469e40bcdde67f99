//! Price-file ingestion and replay of a PDE strategy surface on observed prices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::closed_form::ControlPair;
use crate::model::ModelParams;
use crate::pde::{Grid, StrategySurface};
use crate::sim::wealth_from_log_prices;
use crate::{Error, Result};

/// Default observation spacing: one trading day in years.
pub const TRADING_DAY: f64 = 1.0 / 251.0;

/// Two aligned daily price series.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// Years per observation.
    pub dt: f64,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Time between the first and last observation, in years.
    pub fn span(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn log_prices(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.s1.iter().map(|v| v.ln()).collect(),
            self.s2.iter().map(|v| v.ln()).collect(),
        )
    }
}

pub fn load_csv(path: &Path) -> Result<PriceSeries> {
    load_csv_with_dt(path, TRADING_DAY)
}

/// Reads a `date,s1,s2` file; `dt` is the spacing assigned to every row.
pub fn load_csv_with_dt(path: &Path, dt: f64) -> Result<PriceSeries> {
    let name = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "empty file".into())),
    };
    if header.iter().map(str::trim).ne(["date", "s1", "s2"]) {
        return Err(parse_err(
            1,
            format!("header must be `date,s1,s2`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let (mut dates, mut s1, mut s2) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date `{}`: {e}", &rec[0])))?;
        let price = |col: usize| -> Result<f64> {
            let v: f64 = rec[col]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad price `{}`", &rec[col])))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(parse_err(line, format!("price must be positive, found {v}")));
            }
            Ok(v)
        };
        let (p1, p2) = (price(1)?, price(2)?);
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(parse_err(line, format!("date {date} does not follow {prev}")));
            }
        }
        dates.push(date);
        s1.push(p1);
        s2.push(p2);
    }
    if dates.len() < 2 {
        return Err(parse_err(1, format!("need at least two rows, found {}", dates.len())));
    }
    Ok(PriceSeries { dates, s1, s2, dt })
}

/// Outcome of replaying a strategy surface on a price series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    /// Date at the end of each step.
    pub dates: Vec<NaiveDate>,
    /// Controls held over each step.
    pub controls: Vec<ControlPair>,
    pub returns: Vec<f64>,
    /// `W_n / W_0 - 1` after each step.
    pub cum_pnl: Vec<f64>,
    pub terminal_pnl: f64,
    pub bankrupt: bool,
    /// Observations that fell outside the grid and were clamped.
    pub boundary_warnings: usize,
}

/// Level of the solution for time `t` after the first observation.
fn level_for(t: f64, grid: &Grid) -> usize {
    if grid.nk == 0 {
        return 0;
    }
    let steps = (t / grid.dt).round() as usize;
    grid.nk - steps.min(grid.nk)
}

/// Bilinear interpolation of both controls on level `k`; the second value
/// reports whether `(x, y)` had to be clamped into the grid.
pub fn interpolate(surface: &StrategySurface, grid: &Grid, k: usize, x: f64, y: f64) -> (ControlPair, bool) {
    let locate = |v: f64, lo: f64, hi: f64, h: f64, n: usize| {
        let clamped = v < lo || v > hi;
        let mut s = (v.clamp(lo, hi) - lo) / h;
        // snap coordinates that are a node up to rounding onto it
        if (s - s.round()).abs() < 1e-9 {
            s = s.round();
        }
        let i0 = (s.floor() as usize).min(n - 2);
        (i0, (s - i0 as f64).clamp(0.0, 1.0), clamped)
    };
    let (i0, wx, cx) = locate(x, grid.xmin, grid.xmax, grid.dx, grid.ni);
    let (j0, wy, cy) = locate(y, grid.ymin, grid.ymax, grid.dy, grid.nj);
    let blend = |a: &ndarray::Array3<f64>| {
        let v = |i: usize, j: usize| a[[k, i, j]];
        let lower = (1.0 - wy) * v(i0, j0) + wy * v(i0, j0 + 1);
        let upper = (1.0 - wy) * v(i0 + 1, j0) + wy * v(i0 + 1, j0 + 1);
        (1.0 - wx) * lower + wx * upper
    };
    (ControlPair::new(blend(&surface.pi1), blend(&surface.pi2)), cx || cy)
}

/// Trades `series` with the controls of `surface` starting from wealth `w0`.
/// Observation `n` uses the level nearest to time `n dt` after the start.
pub fn run_backtest(
    series: &PriceSeries,
    params: &ModelParams,
    grid: &Grid,
    surface: &StrategySurface,
    w0: f64,
) -> Result<BacktestReport> {
    if surface.pi1.dim() != (grid.nk + 1, grid.ni, grid.nj) {
        return Err(Error::ShapeMismatch(format!(
            "surface {:?} does not match grid ({}, {}, {})",
            surface.pi1.dim(),
            grid.nk + 1,
            grid.ni,
            grid.nj
        )));
    }
    if series.len() < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    // allow rounding slack of half a grid step
    if series.span() > grid.horizon + 0.5 * grid.dt.max(series.dt) {
        return Err(Error::InvalidInput(format!(
            "data span {:.6} years exceeds the solved horizon {:.6}",
            series.span(),
            grid.horizon
        )));
    }
    let (x, y) = series.log_prices();
    let steps = series.len() - 1;
    let mut controls = Vec::with_capacity(steps);
    let mut warnings = 0;
    for n in 0..steps {
        let k = level_for(n as f64 * series.dt, grid);
        let (pi, clamped) = interpolate(surface, grid, k, x[n], y[n]);
        warnings += clamped as usize;
        controls.push(pi);
    }
    if warnings == steps {
        return Err(Error::InvalidInput(format!(
            "all {steps} observations lie outside the grid [{}, {}] x [{}, {}]",
            grid.xmin, grid.xmax, grid.ymin, grid.ymax
        )));
    }
    if warnings > 0 {
        log::warn!("{warnings} of {steps} observations clamped to the grid boundary");
    }
    let wealth = wealth_from_log_prices(&x, &y, &controls, w0, params.r, series.dt)?;
    let done = wealth.returns.len();
    controls.truncate(done);
    let mut cum_pnl = Vec::with_capacity(done);
    let mut growth = 1.0;
    for r in &wealth.returns {
        growth *= 1.0 + r;
        cum_pnl.push(growth - 1.0);
    }
    Ok(BacktestReport {
        dates: series.dates[1..=done].to_vec(),
        controls,
        returns: wealth.returns,
        terminal_pnl: cum_pnl.last().copied().unwrap_or(0.0),
        cum_pnl,
        bankrupt: wealth.bankrupt,
        boundary_warnings: warnings,
    })
}

/// Writes `date,pi1,pi2,return,cum_pnl`, one row per step.
pub fn write_pnl_csv(report: &BacktestReport, file: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(file)?));
    w.write_record(["date", "pi1", "pi2", "return", "cum_pnl"])?;
    for n in 0..report.returns.len() {
        w.write_record([
            report.dates[n].format("%Y-%m-%d").to_string(),
            report.controls[n].pi1.to_string(),
            report.controls[n].pi2.to_string(),
            report.returns[n].to_string(),
            report.cum_pnl[n].to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}
