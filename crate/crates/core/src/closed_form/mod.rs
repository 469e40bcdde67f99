//! Exact solutions of the constant-volatility problem.
//!
//! For power utility the reduced value function is
//! `phi(t, z) = exp(f2(t) z^2 + f1(t) z + f0(t))`: `f2` solves a Riccati equation
//! with a closed form, `f1` and `f0` are obtained by quadrature. Exponential
//! utility has fully polynomial coefficients. Both feed the optimal controls and
//! the finite-difference cross-checks.

mod exponential;
mod power;
mod theorem;

use serde::{Deserialize, Serialize};

use crate::model::Utility;

pub use exponential::{exponential_coefficients, exponential_controls};
pub use power::{
    f0_quadrature, f1_quadrature, f2_blow_up_time, f2_closed, power_controls,
    power_value_function, PowerOde, QUADRATURE_INTERVALS,
};
pub use theorem::{check_theorem_conditions, TheoremConditions};

/// Fractions of wealth held in each risky asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub pi1: f64,
    pub pi2: f64,
}

impl ControlPair {
    pub const ZERO: ControlPair = ControlPair { pi1: 0.0, pi2: 0.0 };

    pub fn new(pi1: f64, pi2: f64) -> Self {
        Self { pi1, pi2 }
    }

    pub fn is_finite(&self) -> bool {
        self.pi1.is_finite() && self.pi2.is_finite()
    }
}

/// Quadratic-exponent coefficients tabulated on an ascending time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeCoefficients {
    pub t_grid: Vec<f64>,
    pub f2: Vec<f64>,
    pub f1: Vec<f64>,
    pub f0: Vec<f64>,
    pub utility: Utility,
}

impl OdeCoefficients {
    /// `(f2, f1, f0)` at `t`; exact on grid nodes, linear in between.
    /// `None` outside the grid.
    pub fn at(&self, t: f64) -> Option<(f64, f64, f64)> {
        let grid = &self.t_grid;
        let (&first, &last) = (grid.first()?, grid.last()?);
        if t < first || t > last {
            return None;
        }
        let hi = grid.partition_point(|&s| s < t);
        if grid[hi] == t {
            return Some((self.f2[hi], self.f1[hi], self.f0[hi]));
        }
        let lo = hi - 1;
        let w = (t - grid[lo]) / (grid[hi] - grid[lo]);
        let lerp = |v: &[f64]| v[lo] + w * (v[hi] - v[lo]);
        Some((lerp(&self.f2), lerp(&self.f1), lerp(&self.f0)))
    }

    /// `ln phi = f2 z^2 + f1 z + f0` at grid index `k`.
    pub fn exponent(&self, k: usize, z: f64) -> f64 {
        (self.f2[k] * z + self.f1[k]) * z + self.f0[k]
    }
}

/// Validates an ascending grid inside `[0, horizon]`.
pub(crate) fn check_time_grid(t_grid: &[f64], horizon: f64) -> crate::Result<()> {
    if t_grid.is_empty() {
        return Err(crate::Error::InvalidInput("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::InvalidInput(
            "time grid must be strictly ascending".into(),
        ));
    }
    if t_grid[0] < 0.0 || *t_grid.last().unwrap() > horizon {
        return Err(crate::Error::InvalidInput(format!(
            "time grid must lie in [0, {horizon}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_exact_on_nodes() {
        let c = OdeCoefficients {
            t_grid: vec![0.0, 0.5, 1.0],
            f2: vec![1.0, 2.0, 3.0],
            f1: vec![0.0, -1.0, 0.0],
            f0: vec![5.0, 5.0, 5.0],
            utility: Utility::Power,
        };
        assert_eq!(c.at(0.5), Some((2.0, -1.0, 5.0)));
        assert_eq!(c.at(0.0), Some((1.0, 0.0, 5.0)));
        assert_eq!(c.at(0.25), Some((1.5, -0.5, 5.0)));
        assert_eq!(c.at(1.5), None);
    }

    #[test]
    fn grid_checks() {
        assert!(check_time_grid(&[0.0, 0.5, 1.0], 1.0).is_ok());
        assert!(check_time_grid(&[0.0, 0.5, 0.5], 1.0).is_err());
        assert!(check_time_grid(&[0.0, 1.5], 1.0).is_err());
        assert!(check_time_grid(&[], 1.0).is_err());
    }
}
