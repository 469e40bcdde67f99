use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{moment_vector, Lambda, LogSeries, N_MOMENTS};
use crate::{Error, Result};

/// Lag weights for the autocovariance sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NwWeights {
    /// `1 - j/(k-1)`
    #[default]
    Paper,
    /// Bartlett kernel `1 - j/(k+1)`
    Standard,
}

impl NwWeights {
    pub fn weight(self, j: usize, k: usize) -> f64 {
        match self {
            NwWeights::Paper => 1.0 - j as f64 / (k as f64 - 1.0),
            NwWeights::Standard => 1.0 - j as f64 / (k as f64 + 1.0),
        }
    }
}

/// Conventional lag `floor(4 (T/100)^(2/9))`.
pub fn default_lag(n_obs: usize) -> usize {
    (4.0 * (n_obs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// `S_0 + sum_{j=1}^k w_j (S_j + S_j')` with `S_j = (1/T) sum_t f_t f_{t-j}'`
/// (uncentered) over all moment components.
pub fn newey_west(series: &LogSeries, lam: &Lambda, k: usize, weights: NwWeights) -> Result<DMatrix<f64>> {
    newey_west_records(&moment_vector(series, lam), k, weights)
}

pub fn newey_west_records(records: &[[f64; N_MOMENTS]], k: usize, weights: NwWeights) -> Result<DMatrix<f64>> {
    let t = records.len();
    if t == 0 {
        return Err(Error::InvalidInput("no moment records".into()));
    }
    if k >= t {
        return Err(Error::InvalidInput(format!(
            "lag {k} must be below the sample length {t}"
        )));
    }
    if k == 1 && weights == NwWeights::Paper {
        return Err(Error::InvalidInput(
            "lag 1 makes the weight 1 - j/(k-1) undefined; use another lag or standard weights".into(),
        ));
    }
    let m = N_MOMENTS;
    let f = DMatrix::from_fn(t, m, |r, c| records[r][c]);
    let lagged_product = |j: usize| -> DMatrix<f64> {
        let now = f.rows(j, t - j);
        let before = f.rows(0, t - j);
        now.transpose() * before / t as f64
    };
    let mut s = lagged_product(0);
    for j in 1..=k {
        let sj = lagged_product(j);
        let w = weights.weight(j, k);
        s += (&sj + sj.transpose()) * w;
    }
    // exact symmetry regardless of summation order
    let sym = (&s + s.transpose()) * 0.5;
    Ok(sym)
}
