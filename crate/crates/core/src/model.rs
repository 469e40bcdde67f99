//! Model parameters, derived constants and validation.
//!
//! Log-prices follow
//!
//! ```text
//! dx = (mu1 - sigma1(x)^2/2 + delta1 z) dt + sigma1(x) dB1
//! dy = (mu2 - sigma2(y)^2/2 + delta2 z) dt + sigma2(y) dB2
//! z  = a + b t + x + beta y
//! ```
//!
//! with CEV local volatilities `sigma_i(u) = sigma_i * exp(theta_i * u)`; `theta = 0`
//! recovers the constant-volatility model.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Terminal utility of wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Utility {
    /// `U(w) = w^gamma / gamma`
    Power,
    /// `U(w) = -exp(-gamma w)`
    Exponential,
}

/// All SDE, market and preference parameters. Rates are annualized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(default)]
    pub theta1: f64,
    #[serde(default)]
    pub theta2: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub rho: f64,
    pub r: f64,
    pub gamma: f64,
    pub utility: Utility,
    pub horizon: f64,
}

impl ModelParams {
    /// Parameter set of the constant-volatility numerical experiment
    /// (one-year horizon, power utility).
    pub fn reference() -> Self {
        Self {
            mu1: 0.2,
            mu2: 0.08,
            sigma1: 0.3,
            sigma2: 0.35,
            delta1: -0.1,
            delta2: 0.1,
            theta1: 0.0,
            theta2: 0.0,
            a: -0.01,
            b: -0.01,
            beta: -0.6,
            rho: 0.5,
            r: 0.01,
            gamma: 0.1,
            utility: Utility::Power,
            horizon: 1.0,
        }
    }

    /// CEV variant of [`ModelParams::reference`].
    pub fn reference_cev() -> Self {
        Self {
            sigma1: 0.4,
            sigma2: 0.45,
            theta1: -0.2,
            theta2: -0.15,
            ..Self::reference()
        }
    }

    /// GMM estimates reported for the GDX/GLD pair (2013 daily data).
    pub fn gdx_gld() -> Self {
        Self {
            mu1: 0.55,
            sigma1: 0.76,
            delta1: -2.57,
            theta1: -0.16,
            mu2: 0.29,
            sigma2: 0.63,
            delta2: -1.25,
            theta2: -0.22,
            a: -0.39,
            b: 0.014,
            beta: -0.51,
            rho: 0.78,
            ..Self::reference()
        }
    }

    pub fn derive(&self) -> DerivedQuantities {
        derive_quantities(self)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Validates and returns `self` or the full violation list.
    pub fn validated(self) -> crate::Result<Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(crate::Error::Validation(report))
        }
    }

    /// Co-integration variable `z = a + b t + x + beta y`.
    #[inline]
    pub fn z(&self, t: f64, x: f64, y: f64) -> f64 {
        self.a + self.b * t + x + self.beta * y
    }

    /// Local volatility of asset 1 at log-price `x`.
    #[inline]
    pub fn vol1(&self, x: f64) -> f64 {
        self.sigma1 * (self.theta1 * x).exp()
    }

    /// Local volatility of asset 2 at log-price `y`.
    #[inline]
    pub fn vol2(&self, y: f64) -> f64 {
        self.sigma2 * (self.theta2 * y).exp()
    }

    /// Time-independent part of the optimal power-utility fractions,
    /// evaluated with the supplied (possibly local) volatilities.
    pub fn myopic_fractions(&self, z: f64, vol1: f64, vol2: f64) -> (f64, f64) {
        let ex1 = self.mu1 - self.r + self.delta1 * z;
        let ex2 = self.mu2 - self.r + self.delta2 * z;
        let scale = (1.0 - self.gamma) * (1.0 - self.rho * self.rho);
        let pi1 = ex1 / (vol1 * vol1 * scale) - self.rho * ex2 / (vol1 * vol2 * scale);
        let pi2 = ex2 / (vol2 * vol2 * scale) - self.rho * ex1 / (vol1 * vol2 * scale);
        (pi1, pi2)
    }

    /// Zeroth-order growth coefficient of the linear `phi` equation,
    /// `gamma/(2(1-gamma)^2(1-rho^2)) * e' Sigma^{-1} e` with `e` the excess drifts.
    pub fn sharpe_form(&self, z: f64, vol1: f64, vol2: f64) -> f64 {
        let ex1 = self.mu1 - self.r + self.delta1 * z;
        let ex2 = self.mu2 - self.r + self.delta2 * z;
        let one_m_g = 1.0 - self.gamma;
        let k = self.gamma / (2.0 * one_m_g * one_m_g * (1.0 - self.rho * self.rho));
        k * (ex1 * ex1 / (vol1 * vol1) + ex2 * ex2 / (vol2 * vol2)
            - 2.0 * self.rho * ex1 * ex2 / (vol1 * vol2))
    }
}

/// Constants derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Mean-reversion speed of z.
    pub alpha: f64,
    /// Equilibrium level of z (constant volatility).
    pub eta: f64,
    /// `sqrt(sigma1^2 + beta^2 sigma2^2)`, without the correlation cross term.
    pub sigma_beta: f64,
    pub c0: f64,
    /// Instantaneous variance of z.
    pub c1: f64,
    pub c2: f64,
}

pub fn derive_quantities(p: &ModelParams) -> DerivedQuantities {
    let alpha = -p.delta1 - p.beta * p.delta2;
    let s1 = p.sigma1 * p.sigma1;
    let s2 = p.sigma2 * p.sigma2;
    let eta = (p.b + p.mu1 - s1 / 2.0 + p.beta * (p.mu2 - s2 / 2.0)) / alpha;
    let sigma_beta = (s1 + p.beta * p.beta * s2).sqrt();
    let c1 = s1 + p.beta * p.beta * s2 + 2.0 * p.beta * p.rho * p.sigma1 * p.sigma2;
    let one_m_g = 1.0 - p.gamma;
    let c2 = alpha / (2.0 * one_m_g * c1);
    let delta_form = p.delta1 * p.delta1 / s1 + p.delta2 * p.delta2 / s2
        - 2.0 * p.rho * p.delta1 * p.delta2 / (p.sigma1 * p.sigma2);
    let c0 = alpha * alpha / (2.0 * one_m_g * one_m_g * c1)
        - p.gamma / (2.0 * one_m_g * one_m_g * (1.0 - p.rho * p.rho)) * delta_form;
    DerivedQuantities {
        alpha,
        eta,
        sigma_beta,
        c0,
        c1,
        c2,
    }
}

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonFinite(&'static str),
    SigmaNotPositive { which: u8, value: f64 },
    RhoOutOfRange(f64),
    ThetaOutOfRange { which: u8, value: f64 },
    GammaOutOfRange { utility: Utility, value: f64 },
    AlphaOutOfRange(f64),
    HorizonNotPositive(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(name) => write!(f, "{name} is not finite"),
            Violation::SigmaNotPositive { which, value } => {
                write!(f, "sigma{which} = {value} must be > 0")
            }
            Violation::RhoOutOfRange(v) => write!(f, "rho = {v} not in open interval (-1, 1)"),
            Violation::ThetaOutOfRange { which, value } => {
                write!(f, "theta{which} = {value} not in (-1, 0]")
            }
            Violation::GammaOutOfRange { utility, value } => match utility {
                Utility::Power => write!(f, "gamma = {value} not in (0, 1) for power utility"),
                Utility::Exponential => write!(f, "gamma = {value} must be > 0"),
            },
            Violation::AlphaOutOfRange(v) => write!(f, "alpha = {v} not in (0,2)"),
            Violation::HorizonNotPositive(v) => write!(f, "horizon = {v} must be > 0"),
        }
    }
}

/// Every violated invariant of a parameter set; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(p: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    let fields = [
        ("mu1", p.mu1),
        ("mu2", p.mu2),
        ("sigma1", p.sigma1),
        ("sigma2", p.sigma2),
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("theta1", p.theta1),
        ("theta2", p.theta2),
        ("a", p.a),
        ("b", p.b),
        ("beta", p.beta),
        ("rho", p.rho),
        ("r", p.r),
        ("gamma", p.gamma),
        ("horizon", p.horizon),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            violations.push(Violation::NonFinite(name));
        }
    }
    // the remaining checks are meaningless on NaN/inf
    if !violations.is_empty() {
        return ValidationReport { violations };
    }

    for (which, value) in [(1, p.sigma1), (2, p.sigma2)] {
        if value <= 0.0 {
            violations.push(Violation::SigmaNotPositive { which, value });
        }
    }
    if !(p.rho > -1.0 && p.rho < 1.0) {
        violations.push(Violation::RhoOutOfRange(p.rho));
    }
    for (which, value) in [(1, p.theta1), (2, p.theta2)] {
        if !(value > -1.0 && value <= 0.0) {
            violations.push(Violation::ThetaOutOfRange { which, value });
        }
    }
    let gamma_ok = match p.utility {
        Utility::Power => p.gamma > 0.0 && p.gamma < 1.0,
        Utility::Exponential => p.gamma > 0.0,
    };
    if !gamma_ok {
        violations.push(Violation::GammaOutOfRange {
            utility: p.utility,
            value: p.gamma,
        });
    }
    let alpha = -p.delta1 - p.beta * p.delta2;
    if !(alpha > 0.0 && alpha < 2.0) {
        violations.push(Violation::AlphaOutOfRange(alpha));
    }
    if p.horizon <= 0.0 {
        violations.push(Violation::HorizonNotPositive(p.horizon));
    }
    ValidationReport { violations }
}
