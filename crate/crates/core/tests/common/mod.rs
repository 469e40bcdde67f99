//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use pairtrade::closed_form::f2_blow_up_time;
use pairtrade::{ModelParams, Utility};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sharpe-type quadratic form of the `phi` equation, written out from scratch.
fn growth_form(p: &ModelParams, z: f64) -> f64 {
    let e1 = p.mu1 - p.r + p.delta1 * z;
    let e2 = p.mu2 - p.r + p.delta2 * z;
    let (s1, s2) = (p.sigma1, p.sigma2);
    let k = p.gamma / (2.0 * (p.gamma - 1.0).powi(2) * (1.0 - p.rho * p.rho));
    k * (e1 * e1 / (s1 * s1) + e2 * e2 / (s2 * s2) - 2.0 * p.rho * e1 * e2 / (s1 * s2))
}

/// `d/dt ln phi` at fixed `z` when `ln phi = f2 z^2 + f1 z + f0` is inserted
/// in the linear `phi` equation with constant volatilities.
fn log_phi_time_derivative(p: &ModelParams, f: [f64; 3], z: f64) -> f64 {
    let [f2, f1, _] = f;
    let fz = 2.0 * f2 * z + f1;
    let g = p.gamma;
    let drift1 = (p.mu1 + p.delta1 * z - p.r * g) / (g - 1.0) + 0.5 * p.sigma1 * p.sigma1;
    let drift2 = (p.mu2 + p.delta2 * z - p.r * g) / (g - 1.0) + 0.5 * p.sigma2 * p.sigma2;
    let c1 = p.sigma1 * p.sigma1
        + p.beta * p.beta * p.sigma2 * p.sigma2
        + 2.0 * p.beta * p.rho * p.sigma1 * p.sigma2;
    // phi_t / phi = F_t + b F_z and phi_tau = -phi_t
    -p.b * fz - growth_form(p, z) - p.r * g / (1.0 - g) + (drift1 + p.beta * drift2) * fz
        - 0.5 * c1 * (fz * fz + 2.0 * f2)
}

/// `(f2', f1', f0')` recovered by matching the quadratic in `z` at -1, 0, 1.
pub fn power_ode_rhs(p: &ModelParams, f: [f64; 3]) -> [f64; 3] {
    let gm = log_phi_time_derivative(p, f, -1.0);
    let g0 = log_phi_time_derivative(p, f, 0.0);
    let gp = log_phi_time_derivative(p, f, 1.0);
    [0.5 * (gp + gm) - g0, 0.5 * (gp - gm), g0]
}

/// RK4 from the horizon back to 0 with `n` steps; entry `m` is at `t = m T / n`.
pub fn rk4_power(p: &ModelParams, n: usize) -> Vec<[f64; 3]> {
    let h = -p.horizon / n as f64;
    let mut y = [0.0, 0.0, (1.0 - p.gamma).ln() / (1.0 - p.gamma)];
    let mut out = vec![y];
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    for _ in 0..n {
        let k1 = power_ode_rhs(p, y);
        let k2 = power_ode_rhs(p, add(y, k1, h / 2.0));
        let k3 = power_ode_rhs(p, add(y, k2, h / 2.0));
        let k4 = power_ode_rhs(p, add(y, k3, h));
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        out.push(y);
    }
    out.reverse();
    out
}

/// Random valid constant-volatility power-utility parameters whose Riccati
/// solution stays finite on `[0, 1]`.
pub fn random_power_params(seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = ModelParams {
            mu1: rng.random_range(0.0..0.3),
            mu2: rng.random_range(0.0..0.3),
            sigma1: rng.random_range(0.15..0.5),
            sigma2: rng.random_range(0.15..0.5),
            delta1: rng.random_range(-0.6..0.1),
            delta2: rng.random_range(-0.2..0.6),
            theta1: 0.0,
            theta2: 0.0,
            a: rng.random_range(-0.5..0.5),
            b: rng.random_range(-0.05..0.05),
            beta: rng.random_range(-1.2..-0.3),
            rho: rng.random_range(-0.7..0.7),
            r: rng.random_range(0.0..0.05),
            gamma: rng.random_range(0.05..0.6),
            utility: Utility::Power,
            horizon: 1.0,
        };
        if !p.validate().is_valid() {
            continue;
        }
        if f2_blow_up_time(&p.derive(), p.horizon).is_some_and(|t| t >= -0.5) {
            continue;
        }
        return p;
    }
}

/// Residual of the exponential-utility HJB equation, divided by `|u|`, for
/// `u = -exp(-gamma w e^{r(T-t)}) exp(f2 z^2 + f1 z + f0)`. The supremum over
/// dollar holdings is taken analytically; `coeffs(t)` supplies `(f2, f1, f0)`.
pub fn exponential_hjb_residual(
    p: &ModelParams,
    coeffs: impl Fn(f64) -> (f64, f64, f64),
    t: f64,
    w: f64,
    x: f64,
    y: f64,
) -> f64 {
    let z = p.z(t, x, y);
    let (f2, f1, _) = coeffs(t);
    let h = 1e-5;
    let ft = |s: f64| {
        let (a, b, c) = coeffs(s);
        a * z * z + b * z + c
    };
    // time derivative of the exponent at fixed z, central where possible
    let f_t = if t + h <= p.horizon && t - h >= 0.0 {
        (ft(t + h) - ft(t - h)) / (2.0 * h)
    } else if t + h <= p.horizon {
        (ft(t + h) - ft(t)) / h
    } else {
        (ft(t) - ft(t - h)) / h
    };
    let fz = 2.0 * f2 * z + f1;
    let g = p.gamma * (p.r * (p.horizon - t)).exp();
    // every derivative below is a multiple of u; work with u = 1 scaled out, then sign
    let u = -1.0;
    let u_w = -g * u;
    let u_ww = g * g * u;
    let u_x = u * fz;
    let u_y = p.beta * u * fz;
    let second = fz * fz + 2.0 * f2;
    let u_xx = u * second;
    let u_yy = p.beta * p.beta * u * second;
    let u_xy = p.beta * u * second;
    let u_wx = -g * u_x;
    let u_wy = -g * u_y;
    let u_t = u * (p.r * g * w + f_t + p.b * fz);

    let (s1, s2) = (p.sigma1, p.sigma2);
    let cov = [[s1 * s1, p.rho * s1 * s2], [p.rho * s1 * s2, s2 * s2]];
    let e = [p.mu1 - p.r + p.delta1 * z, p.mu2 - p.r + p.delta2 * z];
    let lin = [
        e[0] * u_w + cov[0][0] * u_wx + cov[0][1] * u_wy,
        e[1] * u_w + cov[1][0] * u_wx + cov[1][1] * u_wy,
    ];
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let inv = [
        [cov[1][1] / det, -cov[0][1] / det],
        [-cov[1][0] / det, cov[0][0] / det],
    ];
    let quad = lin[0] * (inv[0][0] * lin[0] + inv[0][1] * lin[1])
        + lin[1] * (inv[1][0] * lin[0] + inv[1][1] * lin[1]);
    let sup = -0.5 * quad / u_ww;

    let drift_x = p.mu1 - 0.5 * s1 * s1 + p.delta1 * z;
    let drift_y = p.mu2 - 0.5 * s2 * s2 + p.delta2 * z;
    let generator = drift_x * u_x
        + drift_y * u_y
        + 0.5 * s1 * s1 * u_xx
        + 0.5 * s2 * s2 * u_yy
        + p.rho * s1 * s2 * u_xy;
    u_t + p.r * w * u_w + sup + generator
}

/// Sample mean of `v` and its standard error for an Ornstein-Uhlenbeck-like
/// series with mean-reversion speed `alpha` and average instantaneous
/// variance `var` observed over `years`.
pub fn ou_mean_and_se(v: &[f64], alpha: f64, var: f64, years: f64) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (mean, (var / (alpha * alpha * years)).sqrt())
}

/// Instantaneous variance of `z` at log-prices `(x, y)`, written from the SDEs.
pub fn z_variance(p: &ModelParams, x: f64, y: f64) -> f64 {
    let v1 = p.sigma1 * (p.theta1 * x).exp();
    let v2 = p.sigma2 * (p.theta2 * y).exp();
    v1 * v1 + p.beta * p.beta * v2 * v2 + 2.0 * p.beta * p.rho * v1 * v2
}
