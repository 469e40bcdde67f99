use std::time::Instant;

use pairtrade::closed_form::{power_controls, OdeCoefficients};
use pairtrade::pde::{
    build_grid, closed_form_phi, extract_controls, linf_error, max_growth_coefficient, solve, Grid,
    GridSpec,
};
use pairtrade::ModelParams;

fn square(lo: f64, hi: f64, n: usize, nk: usize, horizon: f64) -> Grid {
    let spec = GridSpec {
        xmin: lo,
        xmax: hi,
        ymin: lo,
        ymax: hi,
        ni: n,
        nj: n,
        nk,
    };
    build_grid(&spec, horizon).unwrap()
}

fn reference_grid() -> Grid {
    square(1.0, 5.0, 41, 251, 1.0)
}

#[test]
fn constant_volatility_error_sits_on_the_edge() {
    let p = ModelParams::reference();
    let g = reference_grid();
    let start = Instant::now();
    let sol = solve(&p, &g).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let e = linf_error(sol.phi.view(), closed_form_phi(&p, &g).unwrap().view()).unwrap();
    assert!((0.045..=0.075).contains(&e.value), "L-inf {}", e.value);
    assert!(g.is_boundary(e.i, e.j));
    assert!(secs < 60.0);
}

#[test]
fn interior_controls_track_the_closed_form() {
    let p = ModelParams::reference();
    let g = reference_grid();
    let sol = solve(&p, &g).unwrap();
    let surf = extract_controls(&sol, &p).unwrap();
    let t_asc: Vec<f64> = (0..=g.nk).map(|m| g.t(g.nk - m).max(0.0)).collect();
    let coeffs = OdeCoefficients::power(&p, &t_asc).unwrap();
    let mut worst: f64 = 0.0;
    // centered stencils at i = 1 reach the Neumann rows, whose values carry
    // the scheme's boundary error; start one node further in
    for k in [0, 50, 125, 251] {
        let t = t_asc[g.nk - k];
        for i in 2..g.ni - 2 {
            for j in 2..g.nj - 2 {
                let z = p.z(t, g.x(i), g.y(j));
                let exact = power_controls(t, z, &p, &coeffs).unwrap();
                let fd = surf.at(k, i, j);
                worst = worst.max((fd.pi1 - exact.pi1).abs()).max((fd.pi2 - exact.pi2).abs());
            }
        }
    }
    assert!(worst < 0.05, "max control gap {worst}");
}

#[test]
fn cev_fine_mesh_is_finite_and_positive() {
    let p = ModelParams::reference_cev();
    let g = square(1.0, 5.0, 50, 251, 1.0);
    let sol = solve(&p, &g).unwrap();
    assert!(sol.phi.iter().all(|v| v.is_finite() && *v > 0.0));
    let surf = extract_controls(&sol, &p).unwrap();
    assert!(surf.pi1.iter().chain(surf.pi2.iter()).all(|v| v.is_finite()));
}

#[test]
fn uncorrelated_runs_stay_positive() {
    let base = ModelParams {
        rho: 0.0,
        ..ModelParams::reference_cev()
    };
    let variants = [
        base,
        ModelParams { delta1: -0.8, delta2: 0.4, ..base },
        ModelParams { theta1: -0.6, theta2: -0.05, ..base },
        ModelParams { gamma: 0.5, mu1: 0.4, ..base },
        ModelParams { beta: -1.3, sigma2: 0.2, ..base },
    ];
    let g = square(1.0, 5.0, 31, 100, 1.0);
    for p in variants {
        let c_max = (0..g.nk).map(|k| max_growth_coefficient(&g, &p, k)).fold(0.0, f64::max);
        assert!(g.dt * c_max < 1.0, "M-matrix condition fails for {p:?}");
        let sol = solve(&p, &g).unwrap();
        assert!(sol.phi.iter().all(|v| *v > 0.0), "{p:?}");
    }
}

#[test]
fn refinement_changes_shrink() {
    let p = ModelParams::reference_cev();
    // probe (3, 3) at t = 0 is a node of every mesh
    let probe = |n: usize, nk: usize| {
        let g = square(1.0, 5.0, n, nk, 1.0);
        let sol = solve(&p, &g).unwrap();
        let mid = (n - 1) / 2;
        sol.phi[[g.nk, mid, mid]]
    };
    let v = [probe(21, 100), probe(41, 200), probe(81, 400)];
    let (d1, d2) = ((v[1] - v[0]).abs(), (v[2] - v[1]).abs());
    assert!(d2 < d1, "changes {d1:e} then {d2:e}");
}

#[test]
fn vanishing_elasticity_is_continuous() {
    let p = ModelParams::reference();
    let q = ModelParams {
        theta1: -1e-6,
        theta2: -1e-6,
        ..p
    };
    let g = reference_grid();
    let a = solve(&p, &g).unwrap();
    let b = solve(&q, &g).unwrap();
    let e = linf_error(a.phi.view(), b.phi.view()).unwrap();
    assert!(e.value < 1e-3, "{}", e.value);
}

#[test]
fn level_zero_controls_are_myopic() {
    let p = ModelParams::reference_cev();
    let g = square(1.0, 5.0, 21, 20, 1.0);
    let sol = solve(&p, &g).unwrap();
    let surf = extract_controls(&sol, &p).unwrap();
    for i in 0..g.ni {
        for j in 0..g.nj {
            let (x, y) = (g.x(i), g.y(j));
            let (m1, m2) = p.myopic_fractions(p.z(g.t(0), x, y), p.vol1(x), p.vol2(y));
            let c = surf.at(0, i, j);
            assert!((c.pi1 - m1).abs() < 1e-12 && (c.pi2 - m2).abs() < 1e-12);
        }
    }
}
