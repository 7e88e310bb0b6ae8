//! Atomic component forecasters.
//!
//! Every model is described by a [`ModelSpec`] (family, orders, intercept,
//! log transform) and estimated with [`fit`] into a [`FittedModel`] that can
//! [`forecast`] from any extension of the series it was fitted on.

pub mod arima;
pub mod name;
pub mod optim;
pub mod registry;
pub mod smoothing;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use arima::{ArimaCoefficients, ArimaShape};
pub use registry::Registry;
pub use smoothing::{fit_hw, holt_winters, HwParams, HwState};

/// Which decomposed component a model forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Trend,
    Seasonal,
    Irregular,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Trend, Role::Seasonal, Role::Irregular];

    pub fn tag(self) -> char {
        match self {
            Role::Trend => 'T',
            Role::Seasonal => 'S',
            Role::Irregular => 'I',
        }
    }

    pub fn from_tag(c: char) -> Option<Role> {
        match c {
            'T' => Some(Role::Trend),
            'S' => Some(Role::Seasonal),
            'I' => Some(Role::Irregular),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Trend => "Trend",
            Role::Seasonal => "Seasonal",
            Role::Irregular => "Irregular",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Arima,
    Holt,
    HoltWinters,
    LinearTrendAr,
    LinearExponential,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Order {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SeasonalOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Seasonal lag; 0 when there is no seasonal part.
    pub s: usize,
}

impl SeasonalOrder {
    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.d == 0 && self.q == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub expert_id: u32,
    pub component_role: Role,
    pub name: String,
    pub family: Family,
    pub orders: Order,
    pub seasonal_orders: SeasonalOrder,
    pub intercept: bool,
    pub log_transform: bool,
}

impl ModelSpec {
    /// Builds a spec from a model name such as `Log ARIMA (0,1,1)(1,0,0)_s NOINT`,
    /// binding the seasonal lag to `period`.
    pub fn parse(expert_id: u32, role: Role, name: &str, period: usize) -> Result<ModelSpec> {
        let parsed = name::parse(name).map_err(Error::Invalid)?;
        let needs_season = !parsed.seasonal.is_zero() || parsed.family == Family::HoltWinters;
        let spec = ModelSpec {
            expert_id,
            component_role: role,
            name: String::new(),
            family: parsed.family,
            orders: parsed.order,
            seasonal_orders: SeasonalOrder {
                s: if needs_season { period } else { 0 },
                ..parsed.seasonal
            },
            intercept: parsed.intercept,
            log_transform: parsed.log,
        };
        let spec = ModelSpec {
            name: name::format(&spec),
            ..spec
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let o = self.orders;
        let so = self.seasonal_orders;
        if o.p + o.q + so.p + so.q > 6 {
            return Err(Error::invalid(format!("{}: more than 6 ARMA terms", self.name)));
        }
        if !so.is_zero() && so.s == 0 {
            return Err(Error::invalid(format!("{}: seasonal orders need a period", self.name)));
        }
        if self.family == Family::HoltWinters && so.s == 0 {
            return Err(Error::invalid(format!("{}: Holt-Winters needs a period", self.name)));
        }
        match self.family {
            Family::Arima => {}
            Family::LinearTrendAr => {
                if o.p == 0 || o.d != 0 || o.q != 0 || !so.is_zero() {
                    return Err(Error::invalid(format!("{}: linear trend takes AR(k) only", self.name)));
                }
            }
            _ => {
                if o != Order::default() || !so.is_zero() {
                    return Err(Error::invalid(format!("{}: family takes no ARIMA orders", self.name)));
                }
            }
        }
        Ok(())
    }

    /// Minimum series length accepted by [`fit`]:
    /// `max(3(p+q+1), 2s(P+Q+D+1), 8)`.
    pub fn min_fit_length(&self) -> usize {
        let o = self.orders;
        let so = self.seasonal_orders;
        let seasonal = if self.family == Family::HoltWinters {
            2 * so.s
        } else {
            2 * so.s * (so.p + so.q + so.d + 1)
        };
        (3 * (o.p + o.q + 1)).max(seasonal).max(8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedParams {
    Arima(ArimaCoefficients),
    LinearTrendAr { level: f64, slope: f64, ar: Vec<f64> },
    Holt { alpha: f64, beta: f64 },
    HoltWinters(HwParams),
    LinearExponential { alpha: f64 },
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: FittedParams,
    pub residual_variance: f64,
    pub fit_length: usize,
    pub converged: bool,
}

fn transformed(spec: &ModelSpec, series: &[f64]) -> Result<Vec<f64>> {
    if !spec.log_transform {
        return Ok(series.to_vec());
    }
    series
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::LogNonPositive {
                    model: spec.name.clone(),
                    index: i,
                    value: v,
                })
            }
        })
        .collect()
}

fn variance_of(sq_sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (sq_sum / n as f64).max(0.0)
    }
}

fn sum_sq(actual: &[f64], pred: &[f64]) -> f64 {
    actual.iter().zip(pred).map(|(a, p)| (a - p) * (a - p)).sum()
}

fn ols_line(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let tbar = (n - 1.0) / 2.0;
    let ybar = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - tbar;
        sxy += dt * (v - ybar);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ybar - slope * tbar, slope)
}

fn arma_shape(spec: &ModelSpec) -> ArimaShape {
    ArimaShape {
        p: spec.orders.p,
        q: spec.orders.q,
        sp: spec.seasonal_orders.p,
        sq: spec.seasonal_orders.q,
        period: spec.seasonal_orders.s,
        intercept: spec.intercept,
    }
}

/// Estimates a model on `series`.
///
/// ARIMA families minimise the conditional sum of squares with Nelder-Mead;
/// exhausting the iteration cap yields `converged = false` with the best
/// coefficients found, not an error.
pub fn fit(spec: &ModelSpec, series: &[f64]) -> Result<FittedModel> {
    spec.validate()?;
    let needed = spec.min_fit_length();
    if series.len() < needed {
        return Err(Error::FitTooShort {
            model: spec.name.clone(),
            len: series.len(),
            needed,
        });
    }
    let y = transformed(spec, series)?;
    let n = y.len();

    let (params, residual_variance, converged) = match spec.family {
        Family::Arima => {
            let poly = arima::differencing_poly(spec.orders.d, spec.seasonal_orders.d, spec.seasonal_orders.s);
            let w = arima::difference(&y, &poly);
            let shape = arma_shape(spec);
            let start = shape.p + shape.sp * shape.period;
            let n_params = shape.p + shape.q + shape.sp + shape.sq + usize::from(shape.intercept);
            if w.len() <= start + n_params {
                return Err(Error::FitTooShort {
                    model: spec.name.clone(),
                    len: series.len(),
                    needed: series.len() + start + n_params + 1 - w.len(),
                });
            }
            let fit = arima::fit_css(&w, shape);
            (
                FittedParams::Arima(fit.coef),
                variance_of(fit.css, fit.n_resid),
                fit.converged,
            )
        }
        Family::LinearTrendAr => {
            let (level, slope) = ols_line(&y);
            let resid: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(t, v)| v - (level + slope * t as f64))
                .collect();
            let shape = ArimaShape {
                p: spec.orders.p,
                q: 0,
                sp: 0,
                sq: 0,
                period: 0,
                intercept: false,
            };
            let fit = arima::fit_css(&resid, shape);
            (
                FittedParams::LinearTrendAr {
                    level,
                    slope,
                    ar: fit.coef.ar,
                },
                variance_of(fit.css, fit.n_resid),
                fit.converged,
            )
        }
        Family::Holt => {
            let (alpha, beta, m) = smoothing::fit_holt(&y);
            (FittedParams::Holt { alpha, beta }, m.max(0.0), true)
        }
        Family::HoltWinters => {
            let s = spec.seasonal_orders.s;
            let params = smoothing::fit_hw(&y, s, &smoothing::default_hw_grid())?;
            let m = smoothing::hw_in_sample_mse(&y, params.alpha, params.beta, params.gamma, s)?;
            (FittedParams::HoltWinters(params), m.max(0.0), true)
        }
        Family::LinearExponential => {
            let (alpha, m) = smoothing::fit_brown(&y);
            (FittedParams::LinearExponential { alpha }, m.max(0.0), true)
        }
        Family::RandomWalk => {
            let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
            (
                FittedParams::RandomWalk,
                variance_of(diffs.iter().map(|d| d * d).sum(), diffs.len()),
                true,
            )
        }
    };

    Ok(FittedModel {
        spec: spec.clone(),
        params,
        residual_variance,
        fit_length: n,
        converged,
    })
}

/// Recursive `h`-step forecasts from the end of `origin`, which is the fit
/// series or an extension of it. Future shocks are zero, differencing is
/// inverted by the summation recursion and log models are exponentiated.
pub fn forecast(fm: &FittedModel, origin: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Ok(Vec::new());
    }
    if origin.is_empty() {
        return Err(Error::invalid("empty forecast origin"));
    }
    let spec = &fm.spec;
    let y = transformed(spec, origin)?;
    let path = match &fm.params {
        FittedParams::Arima(coef) => {
            let poly = arima::differencing_poly(spec.orders.d, spec.seasonal_orders.d, spec.seasonal_orders.s);
            let lag = poly.len() - 1;
            if y.len() <= lag {
                return Err(Error::FitTooShort {
                    model: spec.name.clone(),
                    len: y.len(),
                    needed: lag + 1,
                });
            }
            let w = arima::difference(&y, &poly);
            let wf = arima::forecast_differenced(&w, coef, h);
            arima::integrate(&y, &wf, &poly)
        }
        FittedParams::LinearTrendAr { level, slope, ar } => {
            let resid: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(t, v)| v - (level + slope * t as f64))
                .collect();
            let coef = ArimaCoefficients {
                ar: ar.clone(),
                ..ArimaCoefficients::zeros(0, 0, 0, 0, 0)
            };
            let uf = arima::forecast_differenced(&resid, &coef, h);
            let n = y.len();
            uf.iter()
                .enumerate()
                .map(|(j, u)| level + slope * (n + j) as f64 + u)
                .collect()
        }
        FittedParams::Holt { alpha, beta } => {
            let (_, (l, b)) = smoothing::holt_filter(&y, *alpha, *beta);
            (1..=h).map(|i| l + i as f64 * b).collect()
        }
        FittedParams::HoltWinters(p) => {
            let (_, state) = smoothing::hw_filter(&y, p.alpha, p.beta, p.gamma, p.period)?;
            state.forecast(h)
        }
        FittedParams::LinearExponential { alpha } => {
            let (_, (l, b)) = smoothing::brown_filter(&y, *alpha);
            (1..=h).map(|i| l + i as f64 * b).collect()
        }
        FittedParams::RandomWalk => vec![*y.last().expect("non-empty"); h],
    };
    Ok(if spec.log_transform {
        path.into_iter().map(f64::exp).collect()
    } else {
        path
    })
}

/// One-step forecast for every `t` in `from..series.len()` using only
/// `series[..t]` as origin.
pub fn one_step_path(fm: &FittedModel, series: &[f64], from: usize) -> Result<Vec<f64>> {
    (from..series.len())
        .map(|t| forecast(fm, &series[..t], 1).map(|v| v[0]))
        .collect()
}

/// In-sample sum of squared one-step residuals, useful for diagnostics.
pub fn in_sample_sse(fm: &FittedModel, series: &[f64], from: usize) -> Result<f64> {
    let pred = one_step_path(fm, series, from)?;
    Ok(sum_sq(&series[from..], &pred))
}

#[cfg(test)]
mod tests;
