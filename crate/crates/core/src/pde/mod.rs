//! Implicit upwind finite-difference solver for the linear `phi` equation of
//! the CEV problem, plus control extraction and export.

mod assembly;
mod compare;
mod controls;
mod export;
mod grid;

use ndarray::{Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg::{bicgstab, Ilu0, SolveStats, SolverOptions};
use crate::model::{ModelParams, Utility};
use crate::{Error, Result};

pub use assembly::{assemble_implicit_system, max_growth_coefficient, SchemeOptions};
pub use compare::{closed_form_phi, linf_error, LinfError};
pub use controls::{extract_controls, StrategySurface};
pub use export::{read_surface_csv, write_surface, SurfaceMetadata, SurfaceRecord};
pub use grid::{build_grid, Grid, GridSpec};

/// Value of `phi` at the horizon.
pub fn initial_phi(gamma: f64) -> f64 {
    (1.0 - gamma).powf(1.0 / (1.0 - gamma))
}

/// Solver settings for a full run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub scheme: SchemeOptions,
    pub linear: SolverOptions,
}

/// Per-level linear solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `phi` and `z` on every level, indexed `[k, i, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub grid: Grid,
    pub phi: Array3<f64>,
    pub z_field: Array3<f64>,
    pub stats: Vec<LevelStats>,
}

impl PdeSolution {
    pub fn level(&self, k: usize) -> ArrayView2<'_, f64> {
        self.phi.index_axis(ndarray::Axis(0), k)
    }
}

/// Advances one level: solves `M phi^{k+1} = phi^k` with `phi^k` as initial guess.
pub fn step(
    k: usize,
    phi_k: &[f64],
    grid: &Grid,
    params: &ModelParams,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let (m, rhs) = assemble_implicit_system(k, grid, params, phi_k, &opts.scheme)?;
    let ilu = Ilu0::new(&m)?;
    let mut next = phi_k.to_vec();
    let stats = bicgstab(&m, &ilu, &rhs, &mut next, &opts.linear)?;
    if let Some(v) = next.iter().find(|v| !v.is_finite()) {
        return Err(Error::SolverDivergence {
            iterations: stats.iterations,
            residual: *v,
        });
    }
    Ok((next, stats))
}

/// Solves from the horizon (level 0) back to `t = 0` (level `nk`).
pub fn solve(params: &ModelParams, grid: &Grid) -> Result<PdeSolution> {
    solve_with(params, grid, &SolveOptions::default())
}

pub fn solve_with(params: &ModelParams, grid: &Grid, opts: &SolveOptions) -> Result<PdeSolution> {
    let params = params.validated()?;
    if params.utility != Utility::Power {
        return Err(Error::InvalidInput(
            "the finite-difference solver covers power utility only".into(),
        ));
    }
    if (grid.horizon - params.horizon).abs() > 1e-12 * params.horizon.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "grid horizon {} differs from model horizon {}",
            grid.horizon, params.horizon
        )));
    }
    let (ni, nj, nk) = (grid.ni, grid.nj, grid.nk);
    let mut phi = Array3::<f64>::zeros((nk + 1, ni, nj));
    let mut z_field = Array3::<f64>::zeros((nk + 1, ni, nj));
    for k in 0..=nk {
        let t = grid.t(k);
        for i in 0..ni {
            for j in 0..nj {
                z_field[[k, i, j]] = params.z(t, grid.x(i), grid.y(j));
            }
        }
    }

    let mut current = vec![initial_phi(params.gamma); grid.n_nodes()];
    let mut stats = Vec::with_capacity(nk);
    store_level(&mut phi, 0, &current, grid);
    for k in 0..nk {
        let (next, s) = step(k, &current, grid, &params, opts).map_err(|e| Error::AtLevel {
            level: k + 1,
            source: Box::new(e),
        })?;
        log::debug!(
            "level {}: {} iterations, residual {:.2e}",
            k + 1,
            s.iterations,
            s.relative_residual
        );
        stats.push(LevelStats {
            iterations: s.iterations,
            relative_residual: s.relative_residual,
        });
        current = next;
        store_level(&mut phi, k + 1, &current, grid);
    }
    Ok(PdeSolution {
        grid: *grid,
        phi,
        z_field,
        stats,
    })
}

fn store_level(phi: &mut Array3<f64>, k: usize, values: &[f64], grid: &Grid) {
    let level = ArrayView2::from_shape((grid.ni, grid.nj), values).expect("node count matches grid");
    phi.index_axis_mut(ndarray::Axis(0), k).assign(&level);
}

/// Boundary mask of the grid (true on Neumann nodes).
pub fn boundary_mask(grid: &Grid) -> Array2<bool> {
    Array2::from_shape_fn((grid.ni, grid.nj), |(i, j)| grid.is_boundary(i, j))
}
