use super::Grid;
use crate::linalg::{CsrBuilder, CsrMatrix};
use crate::model::ModelParams;
use crate::{Error, Result};

/// Switches for the implicit scheme; the default is the full scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    /// Keep the `phi` coefficient terms (Sharpe form and `r gamma/(1-gamma)`).
    pub zeroth_order: bool,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self { zeroth_order: true }
    }
}

/// Combined first-order coefficient along one axis.
#[inline]
fn drift(mu: f64, delta: f64, z: f64, r: f64, gamma: f64, var: f64) -> f64 {
    (mu + delta * z - r * gamma) / (gamma - 1.0) + 0.5 * var
}

/// Growth coefficient multiplying `phi` at a node.
#[inline]
fn growth(params: &ModelParams, z: f64, vol1: f64, vol2: f64) -> f64 {
    params.sharpe_form(z, vol1, vol2) + params.r * params.gamma / (1.0 - params.gamma)
}

/// Largest positive growth coefficient over the nodes of the level computed
/// from level `k`. The implicit step is an M-matrix for `rho = 0` when
/// `dt` times this value is below one.
pub fn max_growth_coefficient(grid: &Grid, params: &ModelParams, k: usize) -> f64 {
    let t = grid.t(k + 1);
    let mut c_max: f64 = 0.0;
    for i in 1..grid.ni - 1 {
        for j in 1..grid.nj - 1 {
            let (x, y) = (grid.x(i), grid.y(j));
            let c = growth(params, params.z(t, x, y), params.vol1(x), params.vol2(y));
            c_max = c_max.max(c);
        }
    }
    c_max
}

/// System `M phi^{k+1} = rhs` advancing level `k` to `k + 1`.
///
/// Interior rows are the upwind implicit scheme multiplied by `dt`, so that
/// `M = I + dt L` there and the right-hand side is `phi^k`. Boundary rows read
/// `phi_edge - phi_adjacent = 0`; rows on an `x` edge take precedence at corners.
pub fn assemble_implicit_system(
    k: usize,
    grid: &Grid,
    params: &ModelParams,
    phi_k: &[f64],
    opts: &SchemeOptions,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = grid.n_nodes();
    if phi_k.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "phi has {} entries, grid has {n} nodes",
            phi_k.len()
        )));
    }
    if k >= grid.nk {
        return Err(Error::InvalidInput(format!(
            "level {k} has no successor on a grid with {} steps",
            grid.nk
        )));
    }
    let p = params;
    let (ni, nj) = (grid.ni, grid.nj);
    let (dx, dy, dt) = (grid.dx, grid.dy, grid.dt);
    let t = grid.t(k + 1);
    let idx = |i: usize, j: usize| grid.index(i, j);

    let mut m = CsrBuilder::new(n, 9 * n);
    let mut rhs = vec![0.0; n];
    for i in 0..ni {
        for j in 0..nj {
            let row = idx(i, j);
            let neighbour = if i == 0 {
                Some(idx(1, j))
            } else if i == ni - 1 {
                Some(idx(ni - 2, j))
            } else if j == 0 {
                Some(idx(i, 1))
            } else if j == nj - 1 {
                Some(idx(i, nj - 2))
            } else {
                None
            };
            if let Some(adj) = neighbour {
                m.add(row, 1.0);
                m.add(adj, -1.0);
                m.finish_row();
                continue;
            }

            let (x, y) = (grid.x(i), grid.y(j));
            let z = p.z(t, x, y);
            let (vol1, vol2) = (p.vol1(x), p.vol2(y));
            let (var1, var2) = (vol1 * vol1, vol2 * vol2);

            let mut diag = 1.0;
            if opts.zeroth_order {
                diag -= dt * growth(p, z, vol1, vol2);
            }

            let a1 = drift(p.mu1, p.delta1, z, p.r, p.gamma, var1);
            let a2 = drift(p.mu2, p.delta2, z, p.r, p.gamma, var2);
            let (a1p, a1m) = (a1.max(0.0) * dt / dx, (-a1).max(0.0) * dt / dx);
            let (a2p, a2m) = (a2.max(0.0) * dt / dy, (-a2).max(0.0) * dt / dy);
            diag += a1p + a1m + a2p + a2m;
            m.add(idx(i - 1, j), -a1p);
            m.add(idx(i + 1, j), -a1m);
            m.add(idx(i, j - 1), -a2p);
            m.add(idx(i, j + 1), -a2m);

            let cx = 0.5 * var1 * dt / (dx * dx);
            let cy = 0.5 * var2 * dt / (dy * dy);
            diag += 2.0 * cx + 2.0 * cy;
            m.add(idx(i - 1, j), -cx);
            m.add(idx(i + 1, j), -cx);
            m.add(idx(i, j - 1), -cy);
            m.add(idx(i, j + 1), -cy);

            let cr = p.rho * vol1 * vol2 * dt / (2.0 * dx * dy);
            if p.rho > 0.0 {
                diag -= 2.0 * cr;
                m.add(idx(i + 1, j + 1), -cr);
                m.add(idx(i - 1, j - 1), -cr);
                for q in [idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)] {
                    m.add(q, cr);
                }
            } else if p.rho < 0.0 {
                diag += 2.0 * cr;
                m.add(idx(i + 1, j - 1), cr);
                m.add(idx(i - 1, j + 1), cr);
                for q in [idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)] {
                    m.add(q, -cr);
                }
            }

            m.add(row, diag);
            m.finish_row();
            rhs[row] = phi_k[row];
        }
    }
    Ok((m.build()?, rhs))
}
