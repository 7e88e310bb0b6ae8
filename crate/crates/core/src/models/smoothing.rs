//! Exponential smoothing families: multiplicative Holt-Winters, Holt's
//! linear method and Brown's double exponential smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothing constants of multiplicative Holt-Winters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub period: usize,
}

impl HwParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, period: usize) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name}={v} outside (0, 1)")));
            }
        }
        if period == 0 {
            return Err(Error::invalid("period must be positive"));
        }
        Ok(HwParams {
            alpha,
            beta,
            gamma,
            period,
        })
    }
}

/// Holt-Winters state after the last observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwState {
    pub level: f64,
    pub trend: f64,
    /// The latest `period` seasonal indices; `indices[0]` belongs to the
    /// phase of the next observation.
    pub indices: Vec<f64>,
}

impl HwState {
    /// `(level + i·trend) × index` for `i = 1..=h`.
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let p = self.indices.len();
        (1..=h)
            .map(|i| (self.level + i as f64 * self.trend) * self.indices[(i - 1) % p])
            .collect()
    }
}

/// Default smoothing grid `{0.05, 0.20, …, 0.95}`.
pub fn default_steps() -> Vec<f64> {
    (0..7).map(|i| 0.05 + 0.15 * i as f64).collect()
}

pub fn default_hw_grid() -> Vec<(f64, f64, f64)> {
    let steps = default_steps();
    let mut grid = Vec::with_capacity(steps.len().pow(3));
    for &a in &steps {
        for &b in &steps {
            for &g in &steps {
                grid.push((a, b, g));
            }
        }
    }
    grid
}

/// Runs the recursion over `series` and returns the one-step forecast made
/// for each `t ≥ period` together with the final state.
///
/// Initial level is the first-cycle mean, initial trend the difference of
/// the first two cycle means divided by `period`, initial indices the
/// first-cycle values over the first-cycle mean.
pub fn hw_filter(series: &[f64], alpha: f64, beta: f64, gamma: f64, period: usize) -> Result<(Vec<f64>, HwState)> {
    let p = period;
    if p == 0 || series.len() < 2 * p {
        return Err(Error::invalid(format!(
            "Holt-Winters needs at least {} observations, got {}",
            2 * p,
            series.len()
        )));
    }
    if let Some((i, v)) = series.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { row: i + 1, value: *v });
    }
    let m1 = series[..p].iter().sum::<f64>() / p as f64;
    let m2 = series[p..2 * p].iter().sum::<f64>() / p as f64;
    let mut level = m1;
    let mut trend = (m2 - m1) / p as f64;
    let mut indices: Vec<f64> = series[..p].iter().map(|v| v / m1).collect();
    let mut one_step = Vec::with_capacity(series.len() - p);
    for (t, &x) in series.iter().enumerate().skip(p) {
        let idx = indices[t - p];
        one_step.push((level + trend) * idx);
        let new_level = alpha * (x / idx) + (1.0 - alpha) * (level + trend);
        trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
        indices.push(gamma * (x / level) + (1.0 - gamma) * idx);
    }
    let n = indices.len();
    Ok((
        one_step,
        HwState {
            level,
            trend,
            indices: indices[n - p..].to_vec(),
        },
    ))
}

/// Multiplicative Holt-Winters: `h` forecasts from the end of `series` and
/// the final state.
pub fn holt_winters(series: &[f64], params: &HwParams, h: usize) -> Result<(Vec<f64>, HwState)> {
    let (_, state) = hw_filter(series, params.alpha, params.beta, params.gamma, params.period)?;
    Ok((state.forecast(h), state))
}

fn mse(actual: &[f64], forecast: &[f64]) -> f64 {
    let n = forecast.len().max(1) as f64;
    actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| (a - f) * (a - f))
        .sum::<f64>()
        / n
}

/// In-sample one-step MSE of Holt-Winters with the given constants.
pub fn hw_in_sample_mse(series: &[f64], alpha: f64, beta: f64, gamma: f64, period: usize) -> Result<f64> {
    let (one_step, _) = hw_filter(series, alpha, beta, gamma, period)?;
    Ok(mse(&series[period..], &one_step))
}

/// Grid member minimising in-sample one-step MSE; ties go to the
/// lexicographically smallest `(α, β, γ)`.
pub fn fit_hw(series: &[f64], period: usize, grid: &[(f64, f64, f64)]) -> Result<HwParams> {
    if grid.is_empty() {
        return Err(Error::invalid("empty Holt-Winters grid"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    let mut best: Option<((f64, f64, f64), f64)> = None;
    for &(a, b, g) in &sorted {
        let m = hw_in_sample_mse(series, a, b, g, period)?;
        let m = if m.is_nan() { f64::INFINITY } else { m };
        if best.is_none_or(|(_, bm)| m < bm) {
            best = Some(((a, b, g), m));
        }
    }
    let ((a, b, g), _) = best.expect("non-empty grid");
    HwParams::new(a, b, g, period)
}

/// Holt's linear method. Initial level `x_0`, initial trend `x_1 - x_0`;
/// returns one-step forecasts for `t ≥ 2` and the final `(level, trend)`.
pub fn holt_filter(series: &[f64], alpha: f64, beta: f64) -> (Vec<f64>, (f64, f64)) {
    if series.len() < 2 {
        let l = series.first().copied().unwrap_or(0.0);
        return (Vec::new(), (l, 0.0));
    }
    let mut level = series[0];
    let mut trend = series[1] - series[0];
    let mut one_step = Vec::with_capacity(series.len());
    for (t, &x) in series.iter().enumerate().skip(1) {
        if t >= 2 {
            one_step.push(level + trend);
        }
        let new_level = alpha * x + (1.0 - alpha) * (level + trend);
        trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
    }
    (one_step, (level, trend))
}

pub fn fit_holt(series: &[f64]) -> (f64, f64, f64) {
    let steps = default_steps();
    let mut best = (steps[0], steps[0], f64::INFINITY);
    for &a in &steps {
        for &b in &steps {
            let (fc, _) = holt_filter(series, a, b);
            let m = mse(&series[2.min(series.len())..], &fc);
            let m = if m.is_nan() { f64::INFINITY } else { m };
            if m < best.2 {
                best = (a, b, m);
            }
        }
    }
    best
}

/// Brown's double exponential smoothing; returns one-step forecasts for
/// `t ≥ 1` and the final `(level, trend)` pair `(2S' - S'', α/(1-α)(S' - S''))`.
pub fn brown_filter(series: &[f64], alpha: f64) -> (Vec<f64>, (f64, f64)) {
    let Some(&first) = series.first() else {
        return (Vec::new(), (0.0, 0.0));
    };
    let (mut s1, mut s2) = (first, first);
    let coef = alpha / (1.0 - alpha);
    let mut one_step = Vec::with_capacity(series.len());
    for &x in &series[1..] {
        one_step.push(2.0 * s1 - s2 + coef * (s1 - s2));
        s1 = alpha * x + (1.0 - alpha) * s1;
        s2 = alpha * s1 + (1.0 - alpha) * s2;
    }
    (one_step, (2.0 * s1 - s2, coef * (s1 - s2)))
}

pub fn fit_brown(series: &[f64]) -> (f64, f64) {
    let mut best = (0.05, f64::INFINITY);
    for i in 0..19 {
        let a = 0.05 + 0.05 * i as f64;
        let (fc, _) = brown_filter(series, a);
        let m = mse(&series[1.min(series.len())..], &fc);
        let m = if m.is_nan() { f64::INFINITY } else { m };
        if m < best.1 {
            best = (a, m);
        }
    }
    best
}
