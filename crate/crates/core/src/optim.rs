//! Derivative-free minimization (Nelder-Mead with dimension-adaptive coefficients).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when `max f - min f` over the simplex drops below this.
    pub f_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            max_evals: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`; the initial simplex is `x0` plus `steps[i]` along
/// each axis. Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let nf = n.max(1) as f64;
    let (alpha, chi, gamma, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    let converged = loop {
        // stable sort keeps lower indices first on ties
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let spread = values[worst] - values[best];
        if spread < opts.f_tol || n == 0 {
            break true;
        }
        if evals >= opts.max_evals {
            break false;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &idx in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += v / nf;
            }
        }
        let toward = |out: &mut [f64], coef: f64, target: &[f64], c: &[f64]| {
            for ((o, t), cc) in out.iter_mut().zip(target).zip(c) {
                *o = cc + coef * (t - cc);
            }
        };

        toward(&mut trial, -alpha, &simplex[worst], &centroid);
        let fr = eval(&trial, &mut evals);
        let second_worst = values[order[n - 1]];
        if fr < values[best] {
            toward(&mut trial2, chi, &trial, &centroid);
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < second_worst {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let accepted = if fr < values[worst] {
            toward(&mut trial2, gamma, &trial, &centroid);
            let fc = eval(&trial2, &mut evals);
            (fc <= fr).then_some(fc)
        } else {
            toward(&mut trial2, gamma, &simplex[worst], &centroid);
            let fc = eval(&trial2, &mut evals);
            (fc < values[worst]).then_some(fc)
        };
        if let Some(fc) = accepted {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &idx in &order[1..] {
            for (v, a) in simplex[idx].iter_mut().zip(&anchor) {
                *v = a + sigma * (*v - a);
            }
            values[idx] = eval(&simplex[idx], &mut evals);
        }
    };

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        evals,
        iterations,
        converged,
    }
}
