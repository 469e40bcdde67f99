use ndarray::{Array2, Array3};

use super::{boundary_mask, PdeSolution};
use crate::closed_form::ControlPair;
use crate::model::ModelParams;
use crate::{Error, Result};

/// Optimal fractions on every node and level, indexed `[k, i, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySurface {
    pub pi1: Array3<f64>,
    pub pi2: Array3<f64>,
    /// Nodes whose gradient uses one-sided differences; their controls are
    /// less reliable than interior ones.
    pub low_confidence: Array2<bool>,
}

impl StrategySurface {
    pub fn at(&self, k: usize, i: usize, j: usize) -> ControlPair {
        ControlPair::new(self.pi1[[k, i, j]], self.pi2[[k, i, j]])
    }

    pub fn levels(&self) -> usize {
        self.pi1.dim().0
    }

    /// Overwrites every control with `value`.
    pub fn fill(&mut self, value: ControlPair) {
        self.pi1.fill(value.pi1);
        self.pi2.fill(value.pi2);
    }
}

/// Evaluates the controls from `phi`: the myopic terms with local
/// volatilities plus `phi_x / phi` and `phi_y / phi`, differenced centrally
/// inside the domain and one-sidedly on the edges.
pub fn extract_controls(sol: &PdeSolution, params: &ModelParams) -> Result<StrategySurface> {
    let g = &sol.grid;
    let (nk1, ni, nj) = sol.phi.dim();
    if let Some(((k, i, j), &value)) = sol.phi.indexed_iter().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositivePhi { k, i, j, value });
    }
    let mut pi1 = Array3::<f64>::zeros((nk1, ni, nj));
    let mut pi2 = Array3::<f64>::zeros((nk1, ni, nj));
    for k in 0..nk1 {
        for i in 0..ni {
            let x = g.x(i);
            let vol1 = params.vol1(x);
            for j in 0..nj {
                let y = g.y(j);
                let vol2 = params.vol2(y);
                let z = sol.z_field[[k, i, j]];
                let (m1, m2) = params.myopic_fractions(z, vol1, vol2);
                let phi = |a: usize, b: usize| sol.phi[[k, a, b]];
                let phi_x = if i == 0 {
                    (phi(1, j) - phi(0, j)) / g.dx
                } else if i == ni - 1 {
                    (phi(i, j) - phi(i - 1, j)) / g.dx
                } else {
                    (phi(i + 1, j) - phi(i - 1, j)) / (2.0 * g.dx)
                };
                let phi_y = if j == 0 {
                    (phi(i, 1) - phi(i, 0)) / g.dy
                } else if j == nj - 1 {
                    (phi(i, j) - phi(i, j - 1)) / g.dy
                } else {
                    (phi(i, j + 1) - phi(i, j - 1)) / (2.0 * g.dy)
                };
                let centre = phi(i, j);
                pi1[[k, i, j]] = m1 + phi_x / centre;
                pi2[[k, i, j]] = m2 + phi_y / centre;
            }
        }
    }
    Ok(StrategySurface {
        pi1,
        pi2,
        low_confidence: boundary_mask(g),
    })
}
