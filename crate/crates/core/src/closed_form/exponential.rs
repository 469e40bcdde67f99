use super::{check_time_grid, ControlPair, OdeCoefficients};
use crate::model::{ModelParams, Utility};
use crate::{Error, Result};

/// Polynomial coefficients of the exponential-utility solution.
struct ExpCoefficients {
    /// `z^2` coefficient of half the squared Sharpe form.
    p2: f64,
    p1: f64,
    p0: f64,
    /// Drift of z under the exponential-utility measure, `r(1+beta) + b - (sigma1^2 + beta sigma2^2)/2`.
    nu: f64,
    c1: f64,
}

impl ExpCoefficients {
    fn new(p: &ModelParams) -> Self {
        let (m1, m2) = (p.mu1 - p.r, p.mu2 - p.r);
        let (v1, v2, v12) = (p.sigma1 * p.sigma1, p.sigma2 * p.sigma2, p.sigma1 * p.sigma2);
        let scale = 1.0 / (1.0 - p.rho * p.rho);
        Self {
            p2: 0.5
                * scale
                * (p.delta1 * p.delta1 / v1 + p.delta2 * p.delta2 / v2
                    - 2.0 * p.rho * p.delta1 * p.delta2 / v12),
            p1: scale
                * (m1 * p.delta1 / v1 + m2 * p.delta2 / v2
                    - p.rho * (p.delta2 * m1 + p.delta1 * m2) / v12),
            p0: 0.5 * scale * (m1 * m1 / v1 + m2 * m2 / v2 - 2.0 * p.rho * m1 * m2 / v12),
            nu: p.r * (1.0 + p.beta) + p.b - 0.5 * (v1 + p.beta * v2),
            c1: p.derive().c1,
        }
    }

    fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let f2 = -self.p2 * s;
        let f1 = -self.p1 * s - self.nu * self.p2 * s * s;
        let int_f2 = -self.p2 * s * s / 2.0;
        let int_f1 = -self.p1 * s * s / 2.0 - self.nu * self.p2 * s * s * s / 3.0;
        let f0 = -self.p0 * s + self.nu * int_f1 + self.c1 * int_f2;
        (f2, f1, f0)
    }
}

/// `(f2, f1, f0)` of `h(t, z) = exp(f2 z^2 + f1 z + f0)` for exponential utility.
/// All three are polynomials in the time to go and vanish at the horizon.
pub fn exponential_coefficients(t: f64, params: &ModelParams, horizon: f64) -> (f64, f64, f64) {
    ExpCoefficients::new(params).eval(horizon - t)
}

impl OdeCoefficients {
    pub fn exponential(params: &ModelParams, t_grid: &[f64]) -> Result<Self> {
        check_time_grid(t_grid, params.horizon)?;
        let coeffs = ExpCoefficients::new(params);
        let mut out = OdeCoefficients {
            t_grid: t_grid.to_vec(),
            f2: Vec::with_capacity(t_grid.len()),
            f1: Vec::with_capacity(t_grid.len()),
            f0: Vec::with_capacity(t_grid.len()),
            utility: Utility::Exponential,
        };
        for &t in t_grid {
            let (f2, f1, f0) = coeffs.eval(params.horizon - t);
            out.f2.push(f2);
            out.f1.push(f1);
            out.f0.push(f0);
        }
        Ok(out)
    }
}

/// Optimal exponential-utility fractions; inversely proportional to wealth.
pub fn exponential_controls(t: f64, w: f64, z: f64, params: &ModelParams) -> Result<ControlPair> {
    if !(w > 0.0) {
        return Err(Error::InvalidInput(format!("wealth {w} must be > 0")));
    }
    let (f2, f1, _) = exponential_coefficients(t, params, params.horizon);
    let ex1 = params.mu1 - params.r + params.delta1 * z;
    let ex2 = params.mu2 - params.r + params.delta2 * z;
    let (s1, s2) = (params.sigma1, params.sigma2);
    let wg = w * params.gamma;
    let corr = wg * (1.0 - params.rho * params.rho);
    let discount = (-params.r * (params.horizon - t)).exp();
    let hedge = (2.0 * f2 * z + f1) / wg;
    let pi1 = ex1 / (s1 * s1 * corr) - params.rho * ex2 / (s1 * s2 * corr) + hedge;
    let pi2 = ex2 / (s2 * s2 * corr) - params.rho * ex1 / (s1 * s2 * corr) + params.beta * hedge;
    Ok(ControlPair::new(discount * pi1, discount * pi2))
}
