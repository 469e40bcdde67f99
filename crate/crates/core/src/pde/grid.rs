use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Domain and resolution as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    /// Node count along x.
    #[serde(rename = "I")]
    pub ni: usize,
    /// Node count along y.
    #[serde(rename = "J")]
    pub nj: usize,
    /// Number of time steps.
    #[serde(rename = "K")]
    pub nk: usize,
}

/// Uniform space-time grid. Nodes are `0..ni` and `0..nj`, Neumann rows sit
/// at the first and last index of each axis. Level `k` is physical time
/// `horizon - k dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub ni: usize,
    pub nj: usize,
    pub nk: usize,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub horizon: f64,
}

/// Builds the grid; `nk = 0` is allowed and gives `dt = 0` (initial level only).
pub fn build_grid(spec: &GridSpec, horizon: f64) -> Result<Grid> {
    let finite = [spec.xmin, spec.xmax, spec.ymin, spec.ymax, horizon]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidInput("grid bounds must be finite".into()));
    }
    if spec.xmax <= spec.xmin || spec.ymax <= spec.ymin {
        return Err(Error::InvalidInput(format!(
            "degenerate domain [{}, {}] x [{}, {}]",
            spec.xmin, spec.xmax, spec.ymin, spec.ymax
        )));
    }
    if spec.ni < 3 || spec.nj < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 nodes per axis, got I = {}, J = {}",
            spec.ni, spec.nj
        )));
    }
    if horizon <= 0.0 {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
    }
    Ok(Grid {
        xmin: spec.xmin,
        xmax: spec.xmax,
        ymin: spec.ymin,
        ymax: spec.ymax,
        ni: spec.ni,
        nj: spec.nj,
        nk: spec.nk,
        dx: (spec.xmax - spec.xmin) / (spec.ni - 1) as f64,
        dy: (spec.ymax - spec.ymin) / (spec.nj - 1) as f64,
        dt: if spec.nk == 0 { 0.0 } else { horizon / spec.nk as f64 },
        horizon,
    })
}

impl Grid {
    /// Grid from step sizes; node and step counts are rounded to the nearest
    /// integer and the steps recomputed from them.
    #[allow(clippy::too_many_arguments)]
    pub fn from_steps(
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        dx: f64,
        dy: f64,
        dt: f64,
        horizon: f64,
    ) -> Result<Grid> {
        if !(dx > 0.0 && dy > 0.0 && dt > 0.0) {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        let count = |span: f64, h: f64| -> Result<usize> {
            let n = (span / h).round();
            if !n.is_finite() || n < 0.0 || n > 1e8 {
                return Err(Error::InvalidInput(format!("step {h} gives no usable node count")));
            }
            Ok(n as usize)
        };
        let spec = GridSpec {
            xmin,
            xmax,
            ymin,
            ymax,
            ni: count(xmax - xmin, dx)? + 1,
            nj: count(ymax - ymin, dy)? + 1,
            nk: count(horizon, dt)?,
        };
        build_grid(&spec, horizon)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            xmin: self.xmin,
            xmax: self.xmax,
            ymin: self.ymin,
            ymax: self.ymax,
            ni: self.ni,
            nj: self.nj,
            nk: self.nk,
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.ymin + j as f64 * self.dy
    }

    /// Physical time of level `k`.
    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.horizon - k as f64 * self.dt
    }

    /// Unknowns per level.
    pub fn n_nodes(&self) -> usize {
        self.ni * self.nj
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nj + j
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.ni || j + 1 == self.nj
    }
}
