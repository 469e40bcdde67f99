//! Generalized Method of Moments estimation of the discretized model from
//! two log-price series.

mod moments;
mod newey_west;
mod reparam;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};

pub use moments::{moment_vector, objective, residuals, sample_moments};
pub use newey_west::{default_lag, newey_west, newey_west_records, NwWeights};
pub use reparam::{constrain, unconstrain};

/// Number of moment components (5 residual functions times 4 instruments).
pub const N_MOMENTS: usize = 20;
/// Number of estimated parameters.
pub const N_PARAMS: usize = 12;

pub const MU1: usize = 0;
pub const SIGMA1: usize = 1;
pub const DELTA1: usize = 2;
pub const THETA1: usize = 3;
pub const MU2: usize = 4;
pub const SIGMA2: usize = 5;
pub const DELTA2: usize = 6;
pub const THETA2: usize = 7;
pub const RHO: usize = 8;
pub const A: usize = 9;
pub const B: usize = 10;
pub const BETA: usize = 11;

pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "mu1", "sigma1", "delta1", "theta1", "mu2", "sigma2", "delta2", "theta2", "rho", "a", "b",
    "beta",
];

/// `(mu1, sigma1, delta1, theta1, mu2, sigma2, delta2, theta2, rho, a, b, beta)`.
pub type Lambda = [f64; N_PARAMS];

pub fn lambda_from_params(p: &ModelParams) -> Lambda {
    [
        p.mu1, p.sigma1, p.delta1, p.theta1, p.mu2, p.sigma2, p.delta2, p.theta2, p.rho, p.a,
        p.b, p.beta,
    ]
}

/// `base` with its SDE parameters replaced by `lam`.
pub fn params_with_lambda(base: &ModelParams, lam: &Lambda) -> ModelParams {
    ModelParams {
        mu1: lam[MU1],
        sigma1: lam[SIGMA1],
        delta1: lam[DELTA1],
        theta1: lam[THETA1],
        mu2: lam[MU2],
        sigma2: lam[SIGMA2],
        delta2: lam[DELTA2],
        theta2: lam[THETA2],
        rho: lam[RHO],
        a: lam[A],
        b: lam[B],
        beta: lam[BETA],
        ..*base
    }
}

/// Just-identified selection (0-based): components 1-8, 10, 12, 14 and 16.
pub fn default_selection() -> Vec<usize> {
    vec![0, 1, 2, 3, 4, 5, 6, 7, 9, 11, 13, 15]
}

/// Converts 1-based component numbers to indices.
pub fn selection_from_one_based(sel: &[usize]) -> Result<Vec<usize>> {
    sel.iter()
        .map(|&i| {
            if i == 0 || i > N_MOMENTS {
                Err(Error::InvalidInput(format!(
                    "moment number {i} outside 1..={N_MOMENTS}"
                )))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

/// True when a cross-moment (components 17-20) is selected, i.e. `rho` enters the objective.
pub fn identifies_rho(selection: &[usize]) -> bool {
    selection.iter().any(|&i| i >= 16)
}

/// Log-price observations on a uniform grid of `dt` years.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dt: f64,
}

impl LogSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dt: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("{} vs {} observations", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("need at least two observations".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("log-prices must be finite".into()));
        }
        Ok(Self { x, y, dt })
    }

    pub fn from_prices(s1: &[f64], s2: &[f64], dt: f64) -> Result<Self> {
        if let Some((n, v)) = s1.iter().chain(s2).enumerate().find(|(_, &v)| !(v > 0.0)) {
            let row = n % s1.len().max(1);
            return Err(Error::InvalidInput(format!("non-positive price {v} at observation {row}")));
        }
        Self::new(
            s1.iter().map(|v| v.ln()).collect(),
            s2.iter().map(|v| v.ln()).collect(),
            dt,
        )
    }

    pub fn transitions(&self) -> usize {
        self.x.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmmMode {
    /// Identity weight over the selected moments.
    #[serde(alias = "just")]
    JustIdentified,
    /// All moments; identity weight, then the inverse Newey-West matrix.
    #[serde(alias = "two-step", alias = "twostep")]
    TwoStepEfficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmSettings {
    pub mode: GmmMode,
    /// 0-based components used in just-identified mode.
    pub selection: Vec<usize>,
    /// `None` picks [`default_lag`].
    pub nw_lag: Option<usize>,
    pub nw_weights: NwWeights,
    /// Total optimizer runs; the first starts at the initial guess, the others
    /// from Gaussian perturbations of it.
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
}

impl Default for GmmSettings {
    fn default() -> Self {
        Self {
            mode: GmmMode::JustIdentified,
            selection: default_selection(),
            nw_lag: None,
            nw_weights: NwWeights::Paper,
            restarts: 5,
            seed: 0,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

/// Estimated parameters by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub mu1: f64,
    pub sigma1: f64,
    pub delta1: f64,
    pub theta1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub delta2: f64,
    pub theta2: f64,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl From<&Lambda> for Estimates {
    fn from(l: &Lambda) -> Self {
        Self {
            mu1: l[MU1],
            sigma1: l[SIGMA1],
            delta1: l[DELTA1],
            theta1: l[THETA1],
            mu2: l[MU2],
            sigma2: l[SIGMA2],
            delta2: l[DELTA2],
            theta2: l[THETA2],
            rho: l[RHO],
            a: l[A],
            b: l[B],
            beta: l[BETA],
        }
    }
}

impl Estimates {
    pub fn to_lambda(&self) -> Lambda {
        [
            self.mu1, self.sigma1, self.delta1, self.theta1, self.mu2, self.sigma2, self.delta2,
            self.theta2, self.rho, self.a, self.b, self.beta,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmResult {
    #[serde(flatten)]
    pub estimates: Estimates,
    pub j_value: f64,
    pub mode: GmmMode,
    pub converged: bool,
    pub nw_lag: Option<usize>,
    /// 1-based components entering the final objective.
    pub selection: Vec<usize>,
    pub weight_matrix: Vec<Vec<f64>>,
    pub iterations: usize,
    pub evaluations: usize,
    pub rho_identified: bool,
    pub weight_regularized: bool,
    pub warnings: Vec<String>,
}

impl GmmResult {
    pub fn lambda(&self) -> Lambda {
        self.estimates.to_lambda()
    }
}

/// Starting point: zero drifts, loadings and intercepts, `theta = -0.1`,
/// `sigma` and `rho` from annualized log-returns and `beta` from regressing
/// `ln S1` on `ln S2`.
pub fn default_initial_guess(series: &LogSeries) -> Lambda {
    let n = series.transitions() as f64;
    let r1: Vec<f64> = series.x.windows(2).map(|w| w[1] - w[0]).collect();
    let r2: Vec<f64> = series.y.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m1, m2) = (mean(&r1), mean(&r2));
    let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
        a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / (n - 1.0).max(1.0)
    };
    let (v1, v2, c12) = (cov(&r1, m1, &r1, m1), cov(&r2, m2, &r2, m2), cov(&r1, m1, &r2, m2));
    let rho = if v1 > 0.0 && v2 > 0.0 {
        (c12 / (v1 * v2).sqrt()).clamp(-0.99, 0.99)
    } else {
        0.0
    };
    let (mx, my) = (mean(&series.x), mean(&series.y));
    let vy = cov(&series.y, my, &series.y, my);
    let slope = if vy > 0.0 { cov(&series.x, mx, &series.y, my) / vy } else { 0.0 };
    let floor = |v: f64| (v / series.dt).sqrt().max(1e-3);
    let mut lam = [0.0; N_PARAMS];
    lam[SIGMA1] = floor(v1);
    lam[SIGMA2] = floor(v2);
    lam[THETA1] = -0.1;
    lam[THETA2] = -0.1;
    lam[RHO] = rho;
    lam[BETA] = -slope;
    lam
}

/// Initial simplex size per unconstrained coordinate.
const SEARCH_STEPS: [f64; N_PARAMS] = [0.1, 0.1, 0.2, 0.2, 0.1, 0.1, 0.2, 0.2, 0.1, 0.1, 0.01, 0.1];

/// Minimum over several Nelder-Mead runs; ties go to the lowest run index.
/// Coordinates outside `free` stay at their starting values.
fn minimize(
    series: &LogSeries,
    start: &Lambda,
    weight: &DMatrix<f64>,
    selection: &[usize],
    free: &[usize],
    settings: &GmmSettings,
    stream: u64,
) -> (Lambda, f64, usize, usize, bool) {
    let base = unconstrain(start);
    let expand = |v: &[f64]| {
        let mut u = base.clone();
        for (&c, &x) in free.iter().zip(v) {
            u[c] = x;
        }
        u
    };
    let v0: Vec<f64> = free.iter().map(|&c| base[c]).collect();
    let steps: Vec<f64> = free.iter().map(|&c| SEARCH_STEPS[c]).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);
    let f = |v: &[f64]| {
        let lam = constrain(&expand(v));
        let g = sample_moments(series, &lam);
        moments::quadratic_form(&g, weight, selection)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let (mut iterations, mut evals, mut converged) = (0, 0, false);
    for run in 0..settings.restarts.max(1) {
        let origin: Vec<f64> = if run == 0 {
            v0.clone()
        } else {
            v0.iter()
                .zip(&steps)
                .map(|(u, s)| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    u + s * e
                })
                .collect()
        };
        let m = nelder_mead(f, &origin, &steps, &settings.optimizer);
        log::debug!("gmm run {run}: J = {:.3e} after {} evaluations", m.f, m.evals);
        iterations += m.iterations;
        evals += m.evals;
        if best.as_ref().is_none_or(|(_, fb)| m.f < *fb) {
            converged = m.converged;
            best = Some((m.x, m.f));
        }
    }
    let (v, j) = best.expect("at least one run");
    (constrain(&expand(&v)), j, iterations, evals, converged)
}

/// Makes `s` positive definite by raising eigenvalues to a small floor; returns
/// whether anything changed.
fn regularize(s: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = (max * 1e-10).max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().all(|&v| v > floor) {
        return (s.clone(), false);
    }
    let mut ev = eig.eigenvalues.clone();
    ev.iter_mut().for_each(|v| *v = v.max(floor));
    let q = &eig.eigenvectors;
    let fixed = q * DMatrix::from_diagonal(&ev) * q.transpose();
    ((&fixed + fixed.transpose()) * 0.5, true)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// Estimates the parameters from `series` starting at `initial`.
pub fn estimate(series: &LogSeries, initial: &Lambda, settings: &GmmSettings) -> Result<GmmResult> {
    if series.x.len() < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 observations, got {}",
            series.x.len()
        )));
    }
    let start_ok = initial[SIGMA1] > 0.0
        && initial[SIGMA2] > 0.0
        && initial[RHO].abs() < 1.0
        && (-1.0..=0.0).contains(&initial[THETA1])
        && initial[THETA1] > -1.0
        && (-1.0..=0.0).contains(&initial[THETA2])
        && initial[THETA2] > -1.0
        && initial.iter().all(|v| v.is_finite());
    if !start_ok {
        return Err(Error::InvalidInput(
            "initial guess needs sigma > 0, |rho| < 1, theta in (-1, 0]".into(),
        ));
    }
    let mut warnings = Vec::new();
    match settings.mode {
        GmmMode::JustIdentified => {
            let sel = &settings.selection;
            moments::check_selection(sel)?;
            if sel.len() != N_PARAMS {
                warnings.push(format!(
                    "{} moments selected for {N_PARAMS} parameters; the fit is not just-identified",
                    sel.len()
                ));
            }
            let rho_identified = identifies_rho(sel);
            if !rho_identified {
                warnings.push(
                    "no cross-moment selected: rho does not enter the objective and stays at its initial value".into(),
                );
            }
            let weight = DMatrix::identity(sel.len(), sel.len());
            let free: Vec<usize> = (0..N_PARAMS).filter(|&c| c != RHO || rho_identified).collect();
            let (lam, j, iterations, evaluations, converged) =
                minimize(series, initial, &weight, sel, &free, settings, 0);
            if !converged {
                warnings.push("optimizer stopped at the evaluation limit".into());
            }
            warnings.iter().for_each(|w| log::warn!("{w}"));
            Ok(GmmResult {
                estimates: Estimates::from(&lam),
                j_value: j,
                mode: settings.mode,
                converged,
                nw_lag: None,
                selection: sel.iter().map(|i| i + 1).collect(),
                weight_matrix: to_rows(&weight),
                iterations,
                evaluations,
                rho_identified,
                weight_regularized: false,
                warnings,
            })
        }
        GmmMode::TwoStepEfficient => {
            let all: Vec<usize> = (0..N_MOMENTS).collect();
            let identity = DMatrix::identity(N_MOMENTS, N_MOMENTS);
            let free: Vec<usize> = (0..N_PARAMS).collect();
            let (lam1, _, it1, ev1, conv1) =
                minimize(series, initial, &identity, &all, &free, settings, 0);
            let lag = settings.nw_lag.unwrap_or_else(|| default_lag(series.transitions()));
            let s = newey_west(series, &lam1, lag, settings.nw_weights)?;
            let (s, regularized) = regularize(&s);
            if regularized {
                warnings.push("Newey-West matrix was not positive definite; eigenvalues were floored".into());
            }
            let weight = s.clone().try_inverse().ok_or_else(|| {
                Error::SingularMatrix("Newey-West matrix cannot be inverted".into())
            })?;
            let weight = (&weight + weight.transpose()) * 0.5;
            let (lam, j, it2, ev2, conv2) = minimize(series, &lam1, &weight, &all, &free, settings, 1);
            let converged = conv1 && conv2;
            if !converged {
                warnings.push("optimizer stopped at the evaluation limit".into());
            }
            warnings.iter().for_each(|w| log::warn!("{w}"));
            Ok(GmmResult {
                estimates: Estimates::from(&lam),
                j_value: j,
                mode: settings.mode,
                converged,
                nw_lag: Some(lag),
                selection: all.iter().map(|i| i + 1).collect(),
                weight_matrix: to_rows(&weight),
                iterations: it1 + it2,
                evaluations: ev1 + ev2,
                rho_identified: true,
                weight_regularized: regularized,
                warnings,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_paths, SimSpec};

    fn gdx_series(seed: u64, n_steps: usize) -> LogSeries {
        let p = ModelParams::gdx_gld();
        let spec = SimSpec {
            n_steps,
            dt: 1.0 / 251.0,
            n_paths: 1,
            seed,
            x0: 40f64.ln(),
            y0: 150f64.ln(),
        };
        let path = simulate_paths(&p, &spec).unwrap().remove(0);
        LogSeries::new(path.x, path.y, path.dt).unwrap()
    }

    #[test]
    fn selection_conversions() {
        let sel = selection_from_one_based(&[1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16]).unwrap();
        assert_eq!(sel, default_selection());
        assert!(!identifies_rho(&sel));
        assert!(selection_from_one_based(&[0]).is_err());
        assert!(selection_from_one_based(&[21]).is_err());
    }

    #[test]
    fn noise_free_path_has_zero_residuals() {
        let p = ModelParams {
            sigma1: 1e-300,
            sigma2: 1e-300,
            ..ModelParams::gdx_gld()
        };
        let spec = SimSpec {
            n_steps: 200,
            dt: 1.0 / 251.0,
            n_paths: 1,
            seed: 3,
            x0: 3.7,
            y0: 5.0,
        };
        let path = simulate_paths(&p, &spec).unwrap().remove(0);
        let s = LogSeries::new(path.x, path.y, path.dt).unwrap();
        let (e1, e2) = residuals(&s, &lambda_from_params(&p));
        assert!(e1.iter().chain(&e2).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_short_or_bad_input() {
        let s = gdx_series(1, 50);
        let guess = default_initial_guess(&s);
        assert!(estimate(&s, &guess, &GmmSettings::default()).is_err());
        assert!(LogSeries::from_prices(&[1.0, 0.0], &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn initial_guess_is_reasonable() {
        let s = gdx_series(5, 2510);
        let g = default_initial_guess(&s);
        assert!(g[SIGMA1] > 0.1 && g[SIGMA1] < 2.0);
        assert!(g[RHO] > 0.5);
        assert!(g[BETA] < 0.0);
        assert_eq!(g[THETA1], -0.1);
    }

    #[test]
    fn serialized_result_has_parameter_keys() {
        let s = gdx_series(2, 300);
        let settings = GmmSettings {
            restarts: 1,
            optimizer: NelderMeadOptions {
                f_tol: 1e-12,
                max_evals: 500,
            },
            ..Default::default()
        };
        let r = estimate(&s, &default_initial_guess(&s), &settings).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for name in PARAM_NAMES {
            assert!(v.get(name).is_some(), "missing {name}");
        }
        assert!(v.get("j_value").is_some() && v.get("nw_lag").is_some());
        assert_eq!(v["mode"], "just_identified");
        assert!(!r.rho_identified);
        assert!((r.estimates.rho - default_initial_guess(&s)[RHO]).abs() < 1e-12);
    }

    #[test]
    fn regularization_floors_negative_eigenvalues() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (fixed, changed) = regularize(&s);
        assert!(changed);
        assert!(fixed.symmetric_eigen().eigenvalues.iter().all(|&v| v > 0.0));
        let (same, changed) = regularize(&DMatrix::identity(3, 3));
        assert!(!changed);
        assert_eq!(same, DMatrix::identity(3, 3));
    }
}
