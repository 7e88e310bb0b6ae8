//! Combining component forecasts of selected models, and error measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest triplet count the median combiner will materialise.
pub const MEDIAN_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    /// Mined consistent good sets.
    #[default]
    ConsistentGood,
    /// Full pools minus the mined bad sets.
    Filtered,
    /// Full pools.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CombinePolicy {
    pub statistic: Statistic,
    pub source: Source,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median; an even count averages the two middle values.
pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Combines the forecasts of every (T, S, I) triplet drawn from the three
/// sets. The mean factorises into the product of per-component means.
pub fn combine(trend: &[f64], seasonal: &[f64], irregular: &[f64], statistic: Statistic) -> Result<f64> {
    if trend.is_empty() || seasonal.is_empty() || irregular.is_empty() {
        return Err(Error::invalid("every component needs at least one forecast to combine"));
    }
    match statistic {
        Statistic::Mean => Ok(mean(trend) * mean(seasonal) * mean(irregular)),
        Statistic::Median => {
            let count = trend.len() * seasonal.len() * irregular.len();
            if count > MEDIAN_CAP {
                return Err(Error::CombineCap { count, cap: MEDIAN_CAP });
            }
            let mut products = Vec::with_capacity(count);
            for t in trend {
                for s in seasonal {
                    for i in irregular {
                        products.push(t * s * i);
                    }
                }
            }
            Ok(median(&mut products))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// Percent.
    pub mape: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mdape: f64,
}

pub fn metrics(actuals: &[f64], forecasts: &[f64]) -> Result<Metrics> {
    if actuals.is_empty() || actuals.len() != forecasts.len() {
        return Err(Error::invalid(format!(
            "metrics need equal non-empty lengths, got {} actuals and {} forecasts",
            actuals.len(),
            forecasts.len()
        )));
    }
    if let Some(i) = actuals.iter().position(|a| *a == 0.0) {
        return Err(Error::ZeroActual(i));
    }
    let n = actuals.len() as f64;
    let errors: Vec<f64> = actuals.iter().zip(forecasts).map(|(y, f)| y - f).collect();
    let mut apes: Vec<f64> = errors.iter().zip(actuals).map(|(e, y)| (e / y).abs()).collect();
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    Ok(Metrics {
        mse,
        mape: 100.0 * apes.iter().sum::<f64>() / n,
        mae: errors.iter().map(|e| e.abs()).sum::<f64>() / n,
        rmse: mse.sqrt(),
        mdape: 100.0 * median(&mut apes),
    })
}

/// Relative MAPE improvement over the baseline, in percent.
pub fn improvement(hw_mape: f64, cmm_mape: f64) -> f64 {
    100.0 * (hw_mape - cmm_mape) / hw_mape
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
