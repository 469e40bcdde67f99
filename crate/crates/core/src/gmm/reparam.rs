//! Smooth maps between the constrained parameter vector and an unconstrained
//! search space: `sigma = exp(u)`, `rho = tanh(u)`, `theta = (tanh(u) - 1) / 2`.

use super::{Lambda, RHO, SIGMA1, SIGMA2, THETA1, THETA2};

fn theta_from(u: f64) -> f64 {
    -1.0 + 0.5 * (1.0 + u.tanh())
}

fn theta_to(theta: f64) -> f64 {
    // theta = 0 sits at u = +inf; stop one ulp short of it
    (2.0 * theta + 1.0).min(1.0 - f64::EPSILON).atanh()
}

/// Unconstrained coordinates to parameters.
pub fn constrain(u: &[f64]) -> Lambda {
    let mut lam = [0.0; 12];
    lam.copy_from_slice(&u[..12]);
    lam[SIGMA1] = u[SIGMA1].exp();
    lam[SIGMA2] = u[SIGMA2].exp();
    lam[THETA1] = theta_from(u[THETA1]);
    lam[THETA2] = theta_from(u[THETA2]);
    lam[RHO] = u[RHO].tanh();
    lam
}

/// Parameters to unconstrained coordinates; requires `sigma > 0`,
/// `|rho| < 1` and `theta` in `(-1, 0]`.
pub fn unconstrain(lam: &Lambda) -> Vec<f64> {
    let mut u = lam.to_vec();
    u[SIGMA1] = lam[SIGMA1].ln();
    u[SIGMA2] = lam[SIGMA2].ln();
    u[THETA1] = theta_to(lam[THETA1]);
    u[THETA2] = theta_to(lam[THETA2]);
    u[RHO] = lam[RHO].atanh();
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(
            mu in -1.0..1.0f64,
            sigma in 0.01..3.0f64,
            theta in -0.99..0.0f64,
            rho in -0.99..0.99f64,
            beta in -3.0..0.0f64,
        ) {
            let lam = [mu, sigma, -0.5, theta, mu / 2.0, sigma * 1.3, 0.2, theta / 2.0, rho, 0.1, 0.01, beta];
            let back = constrain(&unconstrain(&lam));
            for (a, b) in back.iter().zip(&lam) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }

        #[test]
        fn image_is_admissible(u in proptest::collection::vec(-30.0..30.0f64, 12)) {
            let lam = constrain(&u);
            prop_assert!(lam[SIGMA1] > 0.0 && lam[SIGMA2] > 0.0);
            prop_assert!(lam[RHO].abs() <= 1.0);
            prop_assert!(lam[THETA1] >= -1.0 && lam[THETA1] <= 0.0);
        }
    }

    #[test]
    fn zero_theta_maps_back_closely() {
        let mut lam = [0.1; 12];
        lam[THETA1] = 0.0;
        let back = constrain(&unconstrain(&lam));
        assert!(back[THETA1].abs() < 1e-12);
    }
}
