use nalgebra::DMatrix;
use pairtrade::gmm::{
    constrain, default_initial_guess, default_selection, estimate, lambda_from_params,
    moment_vector, newey_west, newey_west_records, objective, residuals, sample_moments, selection_from_one_based,
    unconstrain, GmmMode, GmmSettings, LogSeries, NwWeights, N_MOMENTS, RHO, THETA1, THETA2,
};
use pairtrade::optim::{nelder_mead, NelderMeadOptions};
use pairtrade::sim::{simulate_paths, SimSpec};
use pairtrade::ModelParams;
use proptest::prelude::*;

fn series(p: &ModelParams, n_steps: usize, seed: u64) -> LogSeries {
    let spec = SimSpec {
        n_steps,
        dt: 1.0 / 251.0,
        n_paths: 1,
        seed,
        x0: 40f64.ln(),
        y0: 150f64.ln(),
    };
    let path = simulate_paths(p, &spec).unwrap().remove(0);
    LogSeries::new(path.x, path.y, path.dt).unwrap()
}

fn mean_and_se(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|u| (u - m) * (u - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn residual_mean_is_zero_at_the_truth() {
    let p = ModelParams {
        theta1: 0.0,
        theta2: 0.0,
        ..ModelParams::gdx_gld()
    };
    let s = series(&p, 50_000, 3);
    let (e1, _) = residuals(&s, &lambda_from_params(&p));
    let (m, se) = mean_and_se(e1.iter().copied());
    assert!(m.abs() < 3.0 * se, "{m} (se {se})");
}

#[test]
fn moment_means_vanish_at_the_truth() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 50_000, 9);
    let recs = moment_vector(&s, &lambda_from_params(&p));
    for c in 0..N_MOMENTS {
        let (m, se) = mean_and_se(recs.iter().map(|r| r[c]));
        assert!(m.abs() < 4.0 * se, "component {}: {m} (se {se})", c + 1);
    }
}

#[test]
fn newey_west_is_symmetric_and_psd_with_standard_weights() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 2510, 4);
    let lam = lambda_from_params(&p);
    let m = newey_west(&s, &lam, 8, NwWeights::Standard).unwrap();
    let asym = (&m - m.transpose()).abs().max();
    assert!(asym <= 1e-14 * m.abs().max(), "{asym}");
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    assert!(lo >= -1e-8 * hi, "{lo} vs {hi}");
}

#[test]
fn zero_lag_is_the_second_moment_matrix() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 500, 6);
    let lam = lambda_from_params(&p);
    let recs = moment_vector(&s, &lam);
    let t = recs.len() as f64;
    let mut s0 = DMatrix::<f64>::zeros(N_MOMENTS, N_MOMENTS);
    for r in &recs {
        for a in 0..N_MOMENTS {
            for b in 0..N_MOMENTS {
                s0[(a, b)] += r[a] * r[b] / t;
            }
        }
    }
    let nw = newey_west_records(&recs, 0, NwWeights::Paper).unwrap();
    assert!((&nw - &s0).abs().max() <= 1e-12 * s0.abs().max());
    assert!(newey_west(&s, &lam, recs.len(), NwWeights::Standard).is_err());
}

#[test]
fn one_year_fit_reaches_tiny_objective() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 251, 12);
    let r = estimate(&s, &default_initial_guess(&s), &GmmSettings::default()).unwrap();
    assert!(r.converged);
    assert!(r.j_value < 1e-6, "{}", r.j_value);
    assert!(r.warnings.iter().any(|w| w.contains("rho")));
}

#[test]
fn starting_at_the_optimum_stays_there() {
    let p = ModelParams {
        sigma1: 1e-150,
        sigma2: 1e-150,
        ..ModelParams::gdx_gld()
    };
    let s = series(&p, 300, 0);
    let truth = lambda_from_params(&p);
    let sel = default_selection();
    let j0 = objective(&s, &truth, &DMatrix::identity(12, 12), &sel).unwrap();
    assert!(j0 < 1e-24);
    let settings = GmmSettings {
        restarts: 1,
        ..Default::default()
    };
    let r = estimate(&s, &truth, &settings).unwrap();
    assert!(r.j_value <= j0);
    for (a, b) in r.lambda().iter().zip(&truth) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn scaling_the_weight_keeps_the_argmin() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 1000, 5);
    let sel = default_selection();
    let u0 = unconstrain(&default_initial_guess(&s));
    let steps = [0.1; 12];
    let run = |c: f64| {
        let w = DMatrix::identity(12, 12) * c;
        let f = |u: &[f64]| objective(&s, &constrain(u), &w, &sel).unwrap();
        let opts = NelderMeadOptions {
            f_tol: 1e-12 * c,
            max_evals: 20_000,
        };
        nelder_mead(f, &u0, &steps, &opts)
    };
    let base = run(1.0);
    for c in [0.5, 2.0] {
        let m = run(c);
        assert_eq!(m.x, base.x);
        assert!((m.f - c * base.f).abs() <= 1e-15 * m.f);
    }
}

#[test]
fn interior_fit_zeroes_selected_moments() {
    // a long sample whose optimum is interior; short samples often put a
    // theta on its bound where no exact root exists
    let p = ModelParams::reference_cev();
    let spec = SimSpec {
        n_steps: 25_100,
        dt: 1.0 / 251.0,
        n_paths: 1,
        seed: 2,
        x0: 3.0,
        y0: 3.0,
    };
    let path = simulate_paths(&p, &spec).unwrap().remove(0);
    let s = LogSeries::new(path.x, path.y, path.dt).unwrap();
    // swap component 16 for the cross moment 17 so all 12 parameters enter
    let selection = selection_from_one_based(&[1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 17]).unwrap();
    let settings = GmmSettings {
        selection: selection.clone(),
        restarts: 1,
        ..Default::default()
    };
    let r = estimate(&s, &lambda_from_params(&p), &settings).unwrap();
    let lam = r.lambda();
    assert!(lam[THETA1] < -0.01 && lam[THETA2] < -0.01 && lam[THETA1] > -0.95 && lam[THETA2] > -0.95);
    let g = sample_moments(&s, &r.lambda());
    for &i in &selection {
        assert!(g[i].abs() < 1e-4, "component {}: {}", i + 1, g[i]);
    }
}

#[test]
fn two_step_weight_is_positive_definite() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 1000, 2);
    let settings = GmmSettings {
        mode: GmmMode::TwoStepEfficient,
        nw_weights: NwWeights::Standard,
        restarts: 1,
        optimizer: NelderMeadOptions {
            f_tol: 1e-12,
            max_evals: 20_000,
        },
        ..Default::default()
    };
    let r = estimate(&s, &default_initial_guess(&s), &settings).unwrap();
    assert!(r.j_value.is_finite() && r.j_value >= 0.0);
    assert_eq!(r.nw_lag, Some(6));
    let w = DMatrix::from_fn(N_MOMENTS, N_MOMENTS, |a, b| r.weight_matrix[a][b]);
    assert!(w.symmetric_eigen().eigenvalues.min() > 0.0);
    assert!(r.rho_identified && r.lambda()[RHO].abs() < 1.0);
}

#[test]
fn estimation_is_reproducible() {
    let p = ModelParams::gdx_gld();
    let s = series(&p, 400, 1);
    let settings = GmmSettings {
        seed: 77,
        optimizer: NelderMeadOptions {
            f_tol: 1e-12,
            max_evals: 3000,
        },
        ..Default::default()
    };
    let a = estimate(&s, &default_initial_guess(&s), &settings).unwrap();
    let b = estimate(&s, &default_initial_guess(&s), &settings).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn objective_is_nonnegative(u in proptest::collection::vec(-2.0..2.0f64, 12), seed in 0u64..4) {
        let s = series(&ModelParams::gdx_gld(), 200, seed);
        let j = objective(&s, &constrain(&u), &DMatrix::identity(12, 12), &default_selection()).unwrap();
        prop_assert!(j >= 0.0);
    }
}
