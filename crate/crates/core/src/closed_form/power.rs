use super::{check_time_grid, ControlPair, OdeCoefficients};
use crate::model::{DerivedQuantities, ModelParams, Utility};
use crate::{Error, Result};

/// Minimum number of trapezoid intervals used by the `f1`/`f0` quadratures.
pub const QUADRATURE_INTERVALS: usize = 2000;

/// Time-independent coefficients of the power-utility ODE system
///
/// ```text
/// f2' = -2 c1 f2^2 + 2 alpha/(1-gamma) f2 - q2
/// f1' = -a1(t) f1 - b1(t),      a1 = -alpha/(1-gamma) + 2 c1 f2,  b1 = q1 + d f2
/// f0' = -(q0 + r gamma/(1-gamma)) - (d/2) f1 - c1 f1^2 / 2 - c1 f2
/// ```
///
/// with terminal data `f2(T) = f1(T) = 0`, `f0(T) = ln(1-gamma)/(1-gamma)`.
/// `q2, q1, q0` are the `z^2, z, 1` coefficients of [`ModelParams::sharpe_form`]
/// at constant volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOde {
    pub dq: DerivedQuantities,
    pub horizon: f64,
    pub q1: f64,
    pub q0: f64,
    /// Coefficient `d` of `f2` in `b1`.
    pub drift_f2: f64,
    /// `r gamma / (1 - gamma)`
    pub rate_growth: f64,
    /// `f0(T)`
    pub terminal_f0: f64,
    one_minus_gamma: f64,
}

impl PowerOde {
    pub fn new(p: &ModelParams) -> Self {
        let dq = p.derive();
        let g1 = 1.0 - p.gamma;
        let k = p.gamma / (2.0 * g1 * g1 * (1.0 - p.rho * p.rho));
        let (m1, m2) = (p.mu1 - p.r, p.mu2 - p.r);
        let (v1, v2, v12) = (p.sigma1 * p.sigma1, p.sigma2 * p.sigma2, p.sigma1 * p.sigma2);
        let q1 = 2.0
            * k
            * (m1 * p.delta1 / v1 + m2 * p.delta2 / v2
                - p.rho * (p.delta1 * m2 + p.delta2 * m1) / v12);
        let q0 = k * (m1 * m1 / v1 + m2 * m2 / v2 - 2.0 * p.rho * m1 * m2 / v12);
        let drift_f2 = 2.0 * p.b - 2.0 * p.r * p.gamma * (1.0 + p.beta) / g1
            + 2.0 * (p.mu1 + p.beta * p.mu2) / g1
            - (v1 + p.beta * v2);
        Self {
            dq,
            horizon: p.horizon,
            q1,
            q0,
            drift_f2,
            rate_growth: p.r * p.gamma / g1,
            terminal_f0: g1.ln() / g1,
            one_minus_gamma: g1,
        }
    }

    pub fn f2(&self, t: f64) -> Result<f64> {
        f2_closed(t, &self.dq, self.horizon)
    }

    #[inline]
    pub fn a1(&self, f2: f64) -> f64 {
        -self.dq.alpha / self.one_minus_gamma + 2.0 * self.dq.c1 * f2
    }

    #[inline]
    pub fn b1(&self, f2: f64) -> f64 {
        self.q1 + self.drift_f2 * f2
    }

    /// Integrand of the `f0` quadrature.
    #[inline]
    pub fn f0_integrand(&self, f1: f64, f2: f64) -> f64 {
        0.5 * self.drift_f2 * f1 + 0.5 * self.dq.c1 * f1 * f1 + self.dq.c1 * f2
    }

    /// Closed-form part of `f0`, i.e. everything but the integral.
    #[inline]
    pub fn f0_affine(&self, t: f64) -> f64 {
        self.terminal_f0 + (self.q0 + self.rate_growth) * (self.horizon - t)
    }
}

/// Time at which the `c0 < 0` branch of `f2` blows up, if it does
/// (`None` for `c0 >= 0` with `c2 >= 0`).
pub fn f2_blow_up_time(dq: &DerivedQuantities, horizon: f64) -> Option<f64> {
    match c0_sign(dq) {
        Branch::Trigonometric => {
            let omega = (-2.0 * dq.c1 * dq.c0).sqrt();
            let m = (-dq.c0 / (2.0 * dq.c1)).sqrt();
            // first s > 0 with c2 sin(omega s) + m cos(omega s) = 0
            Some(horizon - m.atan2(-dq.c2) / omega)
        }
        Branch::Rational if dq.c2 < 0.0 => Some(horizon + 1.0 / (2.0 * dq.c1 * dq.c2)),
        Branch::Hyperbolic => {
            let m = (dq.c0 / (2.0 * dq.c1)).sqrt();
            // c2 tanh(omega s) + m vanishes only when c2 < -m
            (dq.c2 < -m).then(|| {
                let omega = (2.0 * dq.c1 * dq.c0).sqrt();
                horizon - (-m / dq.c2).atanh() / omega
            })
        }
        _ => None,
    }
}

enum Branch {
    Hyperbolic,
    Trigonometric,
    Rational,
}

fn c0_sign(dq: &DerivedQuantities) -> Branch {
    // c0 = 2 c1 c2^2 - (delta quadratic form); compare against the two terms
    let first = 2.0 * dq.c1 * dq.c2 * dq.c2;
    let second = first - dq.c0;
    let tol = 1e-13 * (first.abs() + second.abs());
    if dq.c0 > tol {
        Branch::Hyperbolic
    } else if dq.c0 < -tol {
        Branch::Trigonometric
    } else {
        Branch::Rational
    }
}

/// Closed-form solution of the Riccati equation for `f2`, one branch per sign of `c0`.
pub fn f2_closed(t: f64, dq: &DerivedQuantities, horizon: f64) -> Result<f64> {
    let s = horizon - t;
    if !(s >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [0, {horizon}]"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    if let Some(t_blow) = f2_blow_up_time(dq, horizon) {
        if t <= t_blow {
            return Err(Error::FiniteTimeBlowUp {
                blow_up_time: t_blow,
            });
        }
    }
    let (c1, c2, c0) = (dq.c1, dq.c2, dq.c0);
    let value = match c0_sign(dq) {
        Branch::Hyperbolic => {
            let omega = (2.0 * c1 * c0).sqrt();
            let m = (c0 / (2.0 * c1)).sqrt();
            let th = (omega * s).tanh();
            (c2 * c2 - c0 / (2.0 * c1)) * th / (c2 * th + m)
        }
        Branch::Trigonometric => {
            let omega = (-2.0 * c1 * c0).sqrt();
            let m = (-c0 / (2.0 * c1)).sqrt();
            let (sn, cs) = (omega * s).sin_cos();
            (c2 * c2 - c0 / (2.0 * c1)) * sn / (c2 * sn + m * cs)
        }
        Branch::Rational => c2 + c2 / (-2.0 * c1 * c2 * s - 1.0),
    };
    Ok(value)
}

/// `f1(t) = int_t^T b1(s) exp(int_t^s a1(u) du) ds` by nested trapezoid rules on a
/// uniform grid of [`QUADRATURE_INTERVALS`] intervals.
pub fn f1_quadrature(
    t: f64,
    params: &ModelParams,
    f2: impl Fn(f64) -> f64,
    horizon: f64,
) -> f64 {
    if t >= horizon {
        return 0.0;
    }
    let ode = PowerOde::new(&ModelParams { horizon, ..*params });
    let n = QUADRATURE_INTERVALS;
    let h = (horizon - t) / n as f64;
    let mut inner = 0.0;
    let mut prev_a1 = ode.a1(f2(t));
    let mut prev_outer = ode.b1(f2(t));
    let mut outer = 0.0;
    for i in 1..=n {
        let s = if i == n { horizon } else { t + i as f64 * h };
        let f2s = f2(s);
        let a1 = ode.a1(f2s);
        inner += 0.5 * h * (prev_a1 + a1);
        let integrand = ode.b1(f2s) * inner.exp();
        outer += 0.5 * h * (prev_outer + integrand);
        prev_a1 = a1;
        prev_outer = integrand;
    }
    outer
}

/// `f0(t)` by trapezoid quadrature of its integrand plus the affine terms.
pub fn f0_quadrature(
    t: f64,
    params: &ModelParams,
    f1: impl Fn(f64) -> f64,
    f2: impl Fn(f64) -> f64,
    horizon: f64,
) -> f64 {
    let ode = PowerOde::new(&ModelParams { horizon, ..*params });
    if t >= horizon {
        return ode.terminal_f0;
    }
    let n = QUADRATURE_INTERVALS;
    let h = (horizon - t) / n as f64;
    let g = |s: f64| ode.f0_integrand(f1(s), f2(s));
    let mut sum = 0.5 * (g(t) + g(horizon));
    for i in 1..n {
        sum += g(t + i as f64 * h);
    }
    ode.f0_affine(t) + h * sum
}

impl OdeCoefficients {
    /// Power-utility coefficients on `t_grid`.
    ///
    /// Each grid interval (and the tail up to the horizon) is split evenly so the
    /// fine quadrature grid has at least [`QUADRATURE_INTERVALS`] intervals and
    /// contains every requested time; `f1` and `f0` are accumulated backward
    /// from the horizon in one pass.
    pub fn power(params: &ModelParams, t_grid: &[f64]) -> Result<Self> {
        let horizon = params.horizon;
        check_time_grid(t_grid, horizon)?;
        let ode = PowerOde::new(params);

        let mut knots = t_grid.to_vec();
        if *knots.last().unwrap() < horizon {
            knots.push(horizon);
        }
        let pieces = if knots.len() > 1 {
            QUADRATURE_INTERVALS.div_ceil(knots.len() - 1).max(1)
        } else {
            1
        };
        let mut fine = Vec::with_capacity((knots.len() - 1) * pieces + 1);
        let mut knot_index = Vec::with_capacity(knots.len());
        for w in knots.windows(2) {
            knot_index.push(fine.len());
            let h = (w[1] - w[0]) / pieces as f64;
            for p in 0..pieces {
                fine.push(w[0] + p as f64 * h);
            }
        }
        knot_index.push(fine.len());
        fine.push(*knots.last().unwrap());

        let n = fine.len();
        let f2: Vec<f64> = fine.iter().map(|&s| ode.f2(s)).collect::<Result<_>>()?;

        // C(s) = -int_s^T a1, so exp(int_t^s a1) = exp(C(s) - C(t))
        let mut c = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let h = fine[i + 1] - fine[i];
            c[i] = c[i + 1] - 0.5 * h * (ode.a1(f2[i]) + ode.a1(f2[i + 1]));
        }
        // G(t) = int_t^T b1(s) exp(C(s)) ds
        let mut g = 0.0;
        let mut f1 = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let h = fine[i + 1] - fine[i];
            g += 0.5
                * h
                * (ode.b1(f2[i]) * c[i].exp() + ode.b1(f2[i + 1]) * c[i + 1].exp());
            f1[i] = g * (-c[i]).exp();
        }
        let mut integral = 0.0;
        let mut f0 = vec![0.0; n];
        f0[n - 1] = ode.terminal_f0;
        for i in (0..n - 1).rev() {
            let h = fine[i + 1] - fine[i];
            integral += 0.5
                * h
                * (ode.f0_integrand(f1[i], f2[i]) + ode.f0_integrand(f1[i + 1], f2[i + 1]));
            f0[i] = ode.f0_affine(fine[i]) + integral;
        }

        let pick = |v: &[f64]| -> Vec<f64> { knot_index[..t_grid.len()].iter().map(|&i| v[i]).collect() };
        Ok(OdeCoefficients {
            t_grid: t_grid.to_vec(),
            f2: pick(&f2),
            f1: pick(&f1),
            f0: pick(&f0),
            utility: Utility::Power,
        })
    }
}

fn coefficients_at(coeffs: &OdeCoefficients, t: f64, expected: Utility) -> Result<(f64, f64, f64)> {
    if coeffs.utility != expected {
        return Err(Error::InvalidInput(format!(
            "coefficients are for {:?} utility, expected {expected:?}",
            coeffs.utility
        )));
    }
    coeffs
        .at(t)
        .ok_or_else(|| Error::InvalidInput(format!("t = {t} outside the coefficient grid")))
}

/// Optimal power-utility fractions: the two myopic terms plus the hedging term
/// `(2 f2(t) z + f1(t)) * (1, beta)`.
pub fn power_controls(
    t: f64,
    z: f64,
    params: &ModelParams,
    coeffs: &OdeCoefficients,
) -> Result<ControlPair> {
    let (f2, f1, _) = coefficients_at(coeffs, t, Utility::Power)?;
    let (m1, m2) = params.myopic_fractions(z, params.sigma1, params.sigma2);
    let hedge = 2.0 * f2 * z + f1;
    Ok(ControlPair::new(m1 + hedge, m2 + params.beta * hedge))
}

/// `u(t, w, x, y) = w^gamma / (gamma (1-gamma)) * exp((1-gamma)(f2 z^2 + f1 z + f0))`.
pub fn power_value_function(
    t: f64,
    w: f64,
    x: f64,
    y: f64,
    params: &ModelParams,
    coeffs: &OdeCoefficients,
) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::InvalidInput(format!("wealth {w} must be >= 0")));
    }
    let (f2, f1, f0) = coefficients_at(coeffs, t, Utility::Power)?;
    let z = params.z(t, x, y);
    let g1 = 1.0 - params.gamma;
    Ok(w.powf(params.gamma) / (params.gamma * g1) * (g1 * ((f2 * z + f1) * z + f0)).exp())
}
