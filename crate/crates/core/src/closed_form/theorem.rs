use serde::Serialize;

use super::OdeCoefficients;
use crate::model::{DerivedQuantities, ModelParams};
use crate::{Error, Result};

/// Outcome of the three sufficient conditions for the verification result
/// (each of the form `lhs(t) < alpha / (2 sigma_beta^2)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremConditions {
    pub t: f64,
    pub lhs: [f64; 3],
    pub rhs: f64,
    pub holds: [bool; 3],
}

impl TheoremConditions {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

/// Evaluates the three horizon conditions at time `t`, using `sigma_beta`
/// (no correlation cross term) in the bound.
pub fn check_theorem_conditions(
    params: &ModelParams,
    dq: &DerivedQuantities,
    coeffs: &OdeCoefficients,
    t: f64,
) -> Result<TheoremConditions> {
    let (f2, _, _) = coeffs
        .at(t)
        .ok_or_else(|| Error::InvalidInput(format!("t = {t} outside the coefficient grid")))?;
    let p = params;
    let g = p.gamma;
    let g1 = 1.0 - g;
    let one_m_r2 = 1.0 - p.rho * p.rho;
    let tau = p.horizon - t;
    let alpha = dq.alpha;
    let (s1, s2) = (p.sigma1, p.sigma2);
    let d_sq = p.delta1 * p.delta1 / (s1 * s1) + p.delta2 * p.delta2 / (s2 * s2);
    let d_cross = p.delta1 * p.delta2 / (s1 * s2);

    let rhs = alpha / (2.0 * dq.sigma_beta * dq.sigma_beta);

    let lhs1 = g1 * f2 * ((2.0 * alpha * tau).exp() - 1.0);

    let bracket = (p.rho * p.rho + 1.0) / (g1 * g1 * one_m_r2 * one_m_r2) * d_sq
        - 4.0 * p.rho * d_cross / (g1 * g1 * one_m_r2 * one_m_r2)
        + 4.0 * f2 * f2 * (s1 * s1 + p.beta * p.beta * s2 * s2)
        + 4.0 * f2 / (g1 * one_m_r2)
            * (-alpha - p.rho * (p.delta2 * s1 / s2 + p.beta * p.delta1 * s2 / s1));
    let lhs2 = 32.0 * g * g * bracket * tau;

    let lhs3 = 4.0 * g / (g1 * one_m_r2) * (d_sq - 2.0 * p.rho * d_cross) * tau
        - 8.0 * g * alpha * f2 * tau;

    let lhs = [lhs1, lhs2, lhs3];
    Ok(TheoremConditions {
        t,
        lhs,
        rhs,
        holds: lhs.map(|v| v < rhs),
    })
}
