use ndarray::{Array3, ArrayView3};
use serde::Serialize;

use super::Grid;
use crate::closed_form::OdeCoefficients;
use crate::model::ModelParams;
use crate::{Error, Result};

/// Largest absolute difference and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinfError {
    pub value: f64,
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

/// Elementwise maximum of `|a - b|`; ties keep the first node in `[k, i, j]` order.
pub fn linf_error(a: ArrayView3<'_, f64>, b: ArrayView3<'_, f64>) -> Result<LinfError> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if a.is_empty() {
        return Err(Error::ShapeMismatch("empty fields".into()));
    }
    let mut best = LinfError {
        value: 0.0,
        k: 0,
        i: 0,
        j: 0,
    };
    for (((k, i, j), &u), &v) in a.indexed_iter().zip(b.iter()) {
        let d = (u - v).abs();
        if d > best.value || d.is_nan() {
            best = LinfError { value: d, k, i, j };
            if d.is_nan() {
                break;
            }
        }
    }
    Ok(best)
}

/// Constant-volatility closed-form `phi` on every node and level of `grid`.
pub fn closed_form_phi(params: &ModelParams, grid: &Grid) -> Result<Array3<f64>> {
    let nk = grid.nk;
    // ascending physical times; entry m is level nk - m
    let mut t_asc: Vec<f64> = (0..=nk).map(|m| grid.t(nk - m).max(0.0)).collect();
    t_asc[nk] = grid.horizon;
    let coeffs = OdeCoefficients::power(params, &t_asc)?;
    Ok(Array3::from_shape_fn((nk + 1, grid.ni, grid.nj), |(k, i, j)| {
        let z = params.z(grid.t(k), grid.x(i), grid.y(j));
        coeffs.exponent(nk - k, z).exp()
    }))
}
