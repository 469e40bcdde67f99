use nalgebra::DMatrix;

use super::{
    Lambda, LogSeries, A, B, BETA, DELTA1, DELTA2, MU1, MU2, N_MOMENTS, RHO, SIGMA1, SIGMA2,
    THETA1, THETA2,
};
use crate::{Error, Result};

/// One transition's quantities shared by the residuals and the moments.
struct Transition {
    eps1: f64,
    eps2: f64,
    var1: f64,
    var2: f64,
    t: f64,
    x: f64,
    y: f64,
}

#[inline]
fn transition(series: &LogSeries, lam: &Lambda, n: usize) -> Transition {
    let dt = series.dt;
    let (x, y) = (series.x[n], series.y[n]);
    let t = n as f64 * dt;
    let z = lam[A] + lam[B] * t + x + lam[BETA] * y;
    let var1 = lam[SIGMA1] * lam[SIGMA1] * (2.0 * lam[THETA1] * x).exp();
    let var2 = lam[SIGMA2] * lam[SIGMA2] * (2.0 * lam[THETA2] * y).exp();
    let eps1 = series.x[n + 1] - x - (lam[MU1] - 0.5 * var1 + lam[DELTA1] * z) * dt;
    let eps2 = series.y[n + 1] - y - (lam[MU2] - 0.5 * var2 + lam[DELTA2] * z) * dt;
    Transition {
        eps1,
        eps2,
        var1,
        var2,
        t,
        x,
        y,
    }
}

#[inline]
fn record(tr: &Transition, lam: &Lambda, dt: f64) -> [f64; N_MOMENTS] {
    let base = [
        tr.eps1,
        tr.eps2,
        tr.eps1 * tr.eps1 - tr.var1 * dt,
        tr.eps2 * tr.eps2 - tr.var2 * dt,
        tr.eps1 * tr.eps2 - lam[RHO] * (tr.var1 * tr.var2).sqrt() * dt,
    ];
    let inst = [1.0, tr.t, tr.x, tr.y];
    let mut out = [0.0; N_MOMENTS];
    for (b, &e) in base.iter().enumerate() {
        for (i, &z) in inst.iter().enumerate() {
            out[4 * b + i] = e * z;
        }
    }
    out
}

/// Residual pairs `(eps1, eps2)`, one per transition.
pub fn residuals(series: &LogSeries, lam: &Lambda) -> (Vec<f64>, Vec<f64>) {
    (0..series.transitions())
        .map(|n| {
            let tr = transition(series, lam, n);
            (tr.eps1, tr.eps2)
        })
        .unzip()
}

/// Moment records in base-major order: residual functions outer, instruments
/// `(1, t, ln S1, ln S2)` inner.
pub fn moment_vector(series: &LogSeries, lam: &Lambda) -> Vec<[f64; N_MOMENTS]> {
    (0..series.transitions())
        .map(|n| record(&transition(series, lam, n), lam, series.dt))
        .collect()
}

/// Sample mean of the moment records.
pub fn sample_moments(series: &LogSeries, lam: &Lambda) -> [f64; N_MOMENTS] {
    let mut g = [0.0; N_MOMENTS];
    let n = series.transitions();
    for k in 0..n {
        let rec = record(&transition(series, lam, k), lam, series.dt);
        for (a, r) in g.iter_mut().zip(&rec) {
            *a += r;
        }
    }
    g.iter_mut().for_each(|v| *v /= n as f64);
    g
}

/// `g' W g` over the selected components (0-based indices).
pub fn objective(
    series: &LogSeries,
    lam: &Lambda,
    weight: &DMatrix<f64>,
    selection: &[usize],
) -> Result<f64> {
    check_selection(selection)?;
    if weight.nrows() != selection.len() || weight.ncols() != selection.len() {
        return Err(Error::ShapeMismatch(format!(
            "weight is {}x{}, selection has {} moments",
            weight.nrows(),
            weight.ncols(),
            selection.len()
        )));
    }
    let g = sample_moments(series, lam);
    Ok(quadratic_form(&g, weight, selection))
}

pub(crate) fn quadratic_form(g: &[f64; N_MOMENTS], weight: &DMatrix<f64>, selection: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in selection.iter().enumerate() {
        for (b, &j) in selection.iter().enumerate() {
            total += g[i] * weight[(a, b)] * g[j];
        }
    }
    total
}

pub(crate) fn check_selection(selection: &[usize]) -> Result<()> {
    if selection.is_empty() {
        return Err(Error::InvalidInput("empty moment selection".into()));
    }
    if let Some(&bad) = selection.iter().find(|&&i| i >= N_MOMENTS) {
        return Err(Error::InvalidInput(format!(
            "moment index {} out of range 1..={N_MOMENTS}",
            bad + 1
        )));
    }
    let mut sorted = selection.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != selection.len() {
        return Err(Error::InvalidInput("moment selection has duplicates".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{default_selection, lambda_from_params};
    use crate::model::ModelParams;

    fn toy() -> LogSeries {
        LogSeries::new(vec![3.0, 3.02, 2.99, 3.01], vec![4.0, 3.97, 4.01, 4.0], 1.0 / 251.0).unwrap()
    }

    #[test]
    fn hand_checked_transition() {
        let p = ModelParams::gdx_gld();
        let lam = lambda_from_params(&p);
        let s = toy();
        let (e1, e2) = residuals(&s, &lam);
        let dt = 1.0 / 251.0;
        let z = -0.39 + 3.0 - 0.51 * 4.0;
        let v1 = 0.76f64.powi(2) * (2.0 * -0.16 * 3.0f64).exp();
        let v2 = 0.63f64.powi(2) * (2.0 * -0.22 * 4.0f64).exp();
        let want1 = 0.02 - (0.55 - 0.5 * v1 - 2.57 * z) * dt;
        let want2 = -0.03 - (0.29 - 0.5 * v2 - 1.25 * z) * dt;
        assert!((e1[0] - want1).abs() < 1e-15);
        assert!((e2[0] - want2).abs() < 1e-14);
        assert_eq!(e1.len(), 3);
    }

    #[test]
    fn unit_instrument_components() {
        let lam = lambda_from_params(&ModelParams::gdx_gld());
        let s = toy();
        let (e1, e2) = residuals(&s, &lam);
        for (n, rec) in moment_vector(&s, &lam).iter().enumerate() {
            assert_eq!(rec.len(), 20);
            assert_eq!(rec[0], e1[n]);
            assert_eq!(rec[4], e2[n]);
            assert_eq!(rec[2], e1[n] * s.x[n]);
        }
    }

    #[test]
    fn identity_weight_is_squared_norm() {
        let lam = lambda_from_params(&ModelParams::gdx_gld());
        let s = toy();
        let sel = default_selection();
        let g = sample_moments(&s, &lam);
        let j = objective(&s, &lam, &DMatrix::identity(12, 12), &sel).unwrap();
        let want: f64 = sel.iter().map(|&i| g[i] * g[i]).sum();
        assert!((j - want).abs() <= 1e-15 * want);
        assert!(objective(&s, &lam, &DMatrix::identity(11, 11), &sel).is_err());
        assert!(objective(&s, &lam, &DMatrix::identity(1, 1), &[20]).is_err());
    }
}
