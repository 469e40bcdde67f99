//! Euler-Maruyama simulation of the co-integrated CEV log-prices, the
//! volatility-corrected spread `z'` and wealth under a given strategy.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::closed_form::ControlPair;
use crate::model::ModelParams;
use crate::{Error, Result};

/// Simulation settings. Time starts at 0 and advances by `dt` years per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_steps: usize,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Initial log-prices.
    pub x0: f64,
    pub y0: f64,
}

/// One simulated path; index `n` is time `n dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub dt: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub seed: u64,
    pub path_index: usize,
}

impl PricePath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn s1(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.exp()).collect()
    }

    pub fn s2(&self) -> Vec<f64> {
        self.y.iter().map(|v| v.exp()).collect()
    }
}

/// Generator for path `index`: ChaCha20 keyed by `seed`, stream `index`.
pub fn path_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulates `spec.n_paths` independent paths of `spec.n_steps` steps.
///
/// Volatilities are frozen at the left endpoint and the second shock is
/// `rho xi1 + sqrt(1 - rho^2) xi2`.
pub fn simulate_paths(params: &ModelParams, spec: &SimSpec) -> Result<Vec<PricePath>> {
    let p = params.validated()?;
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt = {} must be positive", spec.dt)));
    }
    if !(spec.x0.is_finite() && spec.y0.is_finite()) {
        return Err(Error::InvalidInput("initial log-prices must be finite".into()));
    }
    Ok((0..spec.n_paths)
        .map(|index| simulate_one(&p, spec, index))
        .collect())
}

fn simulate_one(p: &ModelParams, spec: &SimSpec, index: usize) -> PricePath {
    let mut rng = path_rng(spec.seed, index);
    let n = spec.n_steps + 1;
    let dt = spec.dt;
    let sq = dt.sqrt();
    let rho_c = (1.0 - p.rho * p.rho).sqrt();
    let (mut x, mut y, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut xn, mut yn) = (spec.x0, spec.y0);
    for step in 0..n {
        let t = step as f64 * dt;
        let zn = p.z(t, xn, yn);
        x.push(xn);
        y.push(yn);
        z.push(zn);
        if step + 1 == n {
            break;
        }
        let xi1: f64 = rng.sample(StandardNormal);
        let xi2: f64 = rng.sample(StandardNormal);
        let e2 = p.rho * xi1 + rho_c * xi2;
        let (v1, v2) = (p.vol1(xn), p.vol2(yn));
        xn += (p.mu1 - 0.5 * v1 * v1 + p.delta1 * zn) * dt + v1 * sq * xi1;
        yn += (p.mu2 - 0.5 * v2 * v2 + p.delta2 * zn) * dt + v2 * sq * e2;
    }
    PricePath {
        dt,
        x,
        y,
        z,
        seed: spec.seed,
        path_index: index,
    }
}

/// Standardized shocks `(xi1, xi2)` implied by consecutive points of a path.
pub fn normalized_increments(path: &PricePath, params: &ModelParams) -> Vec<(f64, f64)> {
    let p = params;
    let sq = path.dt.sqrt();
    (0..path.len().saturating_sub(1))
        .map(|n| {
            let (xn, yn, zn) = (path.x[n], path.y[n], path.z[n]);
            let (v1, v2) = (p.vol1(xn), p.vol2(yn));
            let d1 = path.x[n + 1] - xn - (p.mu1 - 0.5 * v1 * v1 + p.delta1 * zn) * path.dt;
            let d2 = path.y[n + 1] - yn - (p.mu2 - 0.5 * v2 * v2 + p.delta2 * zn) * path.dt;
            (d1 / (v1 * sq), d2 / (v2 * sq))
        })
        .collect()
}

/// `z'` from index `start` on: `z` plus the discounted volatility correction
/// `int_start^s e^{alpha (u - s)} (sigma1(x_u)^2 + beta sigma2(y_u)^2) / 2 du`,
/// with the integral taken as a left Riemann sum on the path grid.
pub fn z_prime(path: &PricePath, params: &ModelParams, start: usize) -> Result<Vec<f64>> {
    if start >= path.len() {
        return Err(Error::InvalidInput(format!(
            "start index {start} beyond path of length {}",
            path.len()
        )));
    }
    let p = params;
    let alpha = p.derive().alpha;
    let decay = (-alpha * path.dt).exp();
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(path.len() - start);
    for n in start..path.len() {
        out.push(path.z[n] + integral);
        let (v1, v2) = (p.vol1(path.x[n]), p.vol2(path.y[n]));
        let g = 0.5 * v1 * v1 + 0.5 * p.beta * v2 * v2;
        integral = decay * (integral + g * path.dt);
    }
    Ok(out)
}

/// Wealth trajectory; truncated at the first step where wealth would drop to zero or below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthPath {
    pub w: Vec<f64>,
    /// Fractional return of each step; includes the bankrupting step if any.
    pub returns: Vec<f64>,
    pub bankrupt: bool,
}

/// Simple-return wealth dynamics on log-price series `x`, `y`; control `n`
/// is held over step `n`.
pub fn wealth_from_log_prices(
    x: &[f64],
    y: &[f64],
    strategy: &[ControlPair],
    w0: f64,
    r: f64,
    dt: f64,
) -> Result<WealthPath> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::InvalidInput(format!("w0 = {w0} must be positive")));
    }
    if x.len() != y.len() || strategy.len() + 1 != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} and {} prices need {} controls, got {}",
            x.len(),
            y.len(),
            x.len().saturating_sub(1),
            strategy.len()
        )));
    }
    let mut w = Vec::with_capacity(x.len());
    let mut returns = Vec::with_capacity(strategy.len());
    w.push(w0);
    let mut current = w0;
    for (n, pi) in strategy.iter().enumerate() {
        let ret1 = (x[n + 1] - x[n]).exp_m1();
        let ret2 = (y[n + 1] - y[n]).exp_m1();
        let ret = r * dt + pi.pi1 * (ret1 - r * dt) + pi.pi2 * (ret2 - r * dt);
        returns.push(ret);
        current *= 1.0 + ret;
        if !(current > 0.0) {
            return Ok(WealthPath {
                w,
                returns,
                bankrupt: true,
            });
        }
        w.push(current);
    }
    Ok(WealthPath {
        w,
        returns,
        bankrupt: false,
    })
}

pub fn wealth_path(
    path: &PricePath,
    strategy: &[ControlPair],
    w0: f64,
    r: f64,
) -> Result<WealthPath> {
    wealth_from_log_prices(&path.x, &path.y, strategy, w0, r, path.dt)
}

/// First synthetic trading date of exported paths (a Monday).
pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

/// `count` consecutive weekdays from `start` (moved forward off a weekend).
pub fn weekdays(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Writes `date,s1,s2` with one synthetic weekday per observation.
pub fn write_price_csv(path: &PricePath, file: &Path, start: NaiveDate) -> Result<()> {
    let dates = weekdays(start, path.len());
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(file)?));
    w.write_record(["date", "s1", "s2"])?;
    for (n, d) in dates.iter().enumerate() {
        w.write_record([
            d.format("%Y-%m-%d").to_string(),
            path.x[n].exp().to_string(),
            path.y[n].exp().to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}
