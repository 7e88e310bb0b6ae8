//! Derivative-free Nelder-Mead simplex minimiser.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Relative tolerance on the spread of objective values across the simplex.
    pub f_tol: f64,
    /// Absolute tolerance on the simplex diameter.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 2000,
            f_tol: 1e-8,
            x_tol: 1e-10,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let v = eval(&mut f, x0);
        return Minimum {
            x: Vec::new(),
            f: v,
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(&mut f, x)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let f_best = values[best];
        let f_worst = values[worst];
        let spread = f_worst - f_best;
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // The objective test alone stops early when vertices straddle a
        // symmetric minimum, so it also needs a reasonably small simplex.
        let scale = simplex[best].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let flat = f_worst.is_finite() && spread <= opts.f_tol * f_best.abs();
        if (flat && diameter <= 1e-6 * scale) || diameter <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &idx in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += v / n as f64;
            }
        }

        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (w - c))
                .collect()
        };

        let reflected = along(-alpha);
        let f_r = eval(&mut f, &reflected);
        if f_r < f_best {
            let expanded = along(-gamma);
            let f_e = eval(&mut f, &expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let c = along(-rho);
            let fc = eval(&mut f, &c);
            (c, fc)
        } else {
            let c = along(rho);
            let fc = eval(&mut f, &c);
            (c, fc)
        };
        if f_c < f_worst.min(f_r) {
            simplex[worst] = contracted;
            values[worst] = f_c;
            continue;
        }
        let anchor = simplex[best].clone();
        for idx in 0..=n {
            if idx == best {
                continue;
            }
            for (v, a) in simplex[idx].iter_mut().zip(&anchor) {
                *v = a + sigma * (*v - a);
            }
            values[idx] = eval(&mut f, &simplex[idx]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}
