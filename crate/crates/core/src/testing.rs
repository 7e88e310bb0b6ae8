//! Seeded simulators used as ground-truth oracles in tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// ARMA path `x_t - μ = Σ φ_i (x_{t-i} - μ) + e_t + Σ θ_j e_{t-j}` with
/// standard normal shocks and a 200-step burn-in.
pub fn simulate_arma(ar: &[f64], ma: &[f64], n: usize, seed: u64, mean: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 200;
    let total = n + burn;
    let mut x = vec![0.0; total];
    let mut e = vec![0.0; total];
    for t in 0..total {
        e[t] = StandardNormal.sample(&mut rng);
        let mut v = e[t];
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                v += phi * x[t - i - 1];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                v += theta * e[t - j - 1];
            }
        }
        x[t] = v;
    }
    x[burn..].iter().map(|v| v + mean).collect()
}

/// Integrated MA(1): `x_t = x_{t-1} + e_t + θ e_{t-1}` starting at `start`.
pub fn simulate_ima(theta: f64, n: usize, seed: u64, start: f64) -> Vec<f64> {
    let shocks = simulate_arma(&[], &[theta], n, seed, 0.0);
    shocks
        .iter()
        .scan(start, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

/// Seeded geometric random walk with log-step standard deviation `sd`.
pub fn random_walk(n: usize, seed: u64, start: f64, sd: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = start;
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v *= (sd * z).exp();
            v
        })
        .collect()
}
