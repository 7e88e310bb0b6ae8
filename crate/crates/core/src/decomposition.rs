//! Multiplicative decomposition `D_t = T_t × S_t × IC_t`.
//!
//! * Trend: mean of the first cycle for the first `period` points, then a
//!   trailing `period`-window moving average.
//! * Detrended ratio `DT_t = D_t / T_t`.
//! * Seasonal index: expanding mean of `DT` over all earlier points of the
//!   same phase (`t, t-p, t-2p, …`), so it is a per-point sequence.
//! * Irregular `IC_t = DT_t / S_t`.
//!
//! Indices are not renormalised; the recomposition identity holds exactly by
//! construction.

use serde::{Deserialize, Serialize};

use crate::models::Role;
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub source_id: String,
    pub period: usize,
    pub trend: Vec<f64>,
    pub detrended: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub irregular: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    pub fn component(&self, role: Role) -> &[f64] {
        match role {
            Role::Trend => &self.trend,
            Role::Seasonal => &self.seasonal,
            Role::Irregular => &self.irregular,
        }
    }
}

pub fn decompose(ts: &TimeSeries) -> Decomposition {
    decompose_values(ts.id(), ts.values(), ts.period())
}

/// Decomposes raw values; callers guarantee positivity and `period ≥ 1`.
pub fn decompose_values(id: &str, values: &[f64], period: usize) -> Decomposition {
    let n = values.len();
    let p = period.max(1);
    let mut trend = vec![0.0; n];
    let first = p.min(n);
    if first > 0 {
        let head = values[..first].iter().sum::<f64>() / first as f64;
        trend[..first].fill(head);
    }
    for t in p..n {
        trend[t] = values[t + 1 - p..=t].iter().sum::<f64>() / p as f64;
    }
    assert!(trend.iter().all(|&v| v > 0.0), "trend must stay positive");

    let detrended: Vec<f64> = values.iter().zip(&trend).map(|(d, t)| d / t).collect();

    let mut seasonal = vec![0.0; n];
    let mut phase_sum = vec![0.0; p];
    let mut phase_count = vec![0usize; p];
    for t in 0..n {
        let ph = t % p;
        phase_sum[ph] += detrended[t];
        phase_count[ph] += 1;
        seasonal[t] = phase_sum[ph] / phase_count[ph] as f64;
    }

    let irregular: Vec<f64> = detrended.iter().zip(&seasonal).map(|(dt, s)| dt / s).collect();

    Decomposition {
        source_id: id.to_string(),
        period: p,
        trend,
        detrended,
        seasonal,
        irregular,
    }
}

pub fn recompose(dec: &Decomposition) -> Vec<f64> {
    dec.trend
        .iter()
        .zip(&dec.seasonal)
        .zip(&dec.irregular)
        .map(|((t, s), i)| t * s * i)
        .collect()
}
