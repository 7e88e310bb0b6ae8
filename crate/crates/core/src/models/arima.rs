//! Seasonal ARIMA estimated by conditional sum of squares.
//!
//! The working series is `w = (1-B)^d (1-B^s)^D y`. With intercept `μ` the
//! model is
//!
//! ```text
//! φ(B) Φ(B^s) (w_t - μ) = θ(B) Θ(B^s) e_t
//! ```
//!
//! with `φ(B) = 1 - Σ φ_i B^i` and `θ(B) = 1 + Σ θ_i B^i`. Residuals are
//! computed conditionally: `e_t = 0` before the first full AR lag window.

use serde::{Deserialize, Serialize};

use super::optim::{nelder_mead, Minimum, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaCoefficients {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub intercept: f64,
    /// Seasonal lag, 0 when the model has no seasonal part.
    pub period: usize,
}

impl ArimaCoefficients {
    pub fn zeros(p: usize, q: usize, sp: usize, sq: usize, period: usize) -> Self {
        ArimaCoefficients {
            ar: vec![0.0; p],
            ma: vec![0.0; q],
            seasonal_ar: vec![0.0; sp],
            seasonal_ma: vec![0.0; sq],
            intercept: 0.0,
            period,
        }
    }

    /// Lag coefficients `a_k` of the expanded AR operator, so that
    /// `w_t - μ = Σ a_k (w_{t-k} - μ) + …`. Index 0 is lag 1.
    pub fn expanded_ar(&self) -> Vec<f64> {
        let poly = multiply(
            &signed_poly(&self.ar, 1, -1.0),
            &signed_poly(&self.seasonal_ar, self.period, -1.0),
        );
        poly[1..].iter().map(|c| -c).collect()
    }

    /// Lag coefficients `m_k` of the expanded MA operator. Index 0 is lag 1.
    pub fn expanded_ma(&self) -> Vec<f64> {
        let poly = multiply(
            &signed_poly(&self.ma, 1, 1.0),
            &signed_poly(&self.seasonal_ma, self.period, 1.0),
        );
        poly[1..].to_vec()
    }

    pub fn is_stationary_invertible(&self) -> bool {
        let neg = |v: &[f64]| v.iter().map(|c| -c).collect::<Vec<_>>();
        is_stationary(&self.ar)
            && is_stationary(&self.seasonal_ar)
            && is_stationary(&neg(&self.ma))
            && is_stationary(&neg(&self.seasonal_ma))
    }
}

/// `1 + sign·Σ c_i B^{i·lag}` as a dense coefficient vector.
fn signed_poly(coefs: &[f64], lag: usize, sign: f64) -> Vec<f64> {
    let mut poly = vec![0.0; coefs.len() * lag + 1];
    poly[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        poly[(i + 1) * lag] = sign * c;
    }
    poly
}

fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Whether `1 - Σ φ_i z^i` has all roots outside the unit circle, via the
/// step-down (Schur-Cohn) recursion on reflection coefficients.
pub fn is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
        a = prev;
    }
    true
}

/// Coefficients of `(1-B)^d (1-B^s)^D`, index 0 is lag 0 and equals 1.
pub fn differencing_poly(d: usize, sd: usize, period: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..d {
        poly = multiply(&poly, &[1.0, -1.0]);
    }
    if period > 0 {
        let mut seasonal = vec![0.0; period + 1];
        seasonal[0] = 1.0;
        seasonal[period] = -1.0;
        for _ in 0..sd {
            poly = multiply(&poly, &seasonal);
        }
    }
    poly
}

pub fn difference(y: &[f64], poly: &[f64]) -> Vec<f64> {
    let lag = poly.len() - 1;
    if y.len() <= lag {
        return Vec::new();
    }
    (lag..y.len())
        .map(|t| poly.iter().enumerate().map(|(k, c)| c * y[t - k]).sum())
        .collect()
}

/// Extends the level series `y` with `w_future`, inverting the differencing
/// recursion `y_t = w_t - Σ_{k≥1} δ_k y_{t-k}`.
pub fn integrate(y: &[f64], w_future: &[f64], poly: &[f64]) -> Vec<f64> {
    let mut path = y.to_vec();
    let n = y.len();
    for w in w_future {
        let t = path.len();
        let mut v = *w;
        for (k, c) in poly.iter().enumerate().skip(1) {
            v -= c * path[t - k];
        }
        path.push(v);
    }
    path.split_off(n)
}

/// Conditional residuals over the differenced series.
pub fn residuals(w: &[f64], coef: &ArimaCoefficients) -> Vec<f64> {
    let a = coef.expanded_ar();
    let m = coef.expanded_ma();
    residuals_expanded(w, coef.intercept, &a, &m)
}

fn residuals_expanded(w: &[f64], mu: f64, a: &[f64], m: &[f64]) -> Vec<f64> {
    let start = a.len();
    let mut e = vec![0.0; w.len()];
    for t in start..w.len() {
        let mut v = w[t] - mu;
        for (k, c) in a.iter().enumerate() {
            v -= c * (w[t - k - 1] - mu);
        }
        for (k, c) in m.iter().enumerate() {
            if t > k {
                v -= c * e[t - k - 1];
            }
        }
        e[t] = v;
    }
    e
}

/// Multi-step forecasts of the differenced series with future shocks zero.
pub fn forecast_differenced(w: &[f64], coef: &ArimaCoefficients, h: usize) -> Vec<f64> {
    let a = coef.expanded_ar();
    let m = coef.expanded_ma();
    let mu = coef.intercept;
    let mut e = residuals_expanded(w, mu, &a, &m);
    let mut path = w.to_vec();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let t = path.len();
        let mut v = mu;
        for (k, c) in a.iter().enumerate() {
            if t > k {
                v += c * (path[t - k - 1] - mu);
            }
        }
        for (k, c) in m.iter().enumerate() {
            if t > k {
                v += c * e[t - k - 1];
            }
        }
        path.push(v);
        e.push(0.0);
        out.push(v);
    }
    out
}

/// Orders of the parameter vector optimised by [`fit_css`].
#[derive(Debug, Clone, Copy)]
pub struct ArimaShape {
    pub p: usize,
    pub q: usize,
    pub sp: usize,
    pub sq: usize,
    pub period: usize,
    pub intercept: bool,
}

impl ArimaShape {
    fn n_coef(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    fn unpack(&self, x: &[f64], mu0: f64, mu_scale: f64) -> ArimaCoefficients {
        let mut it = x.iter().copied();
        let mut take = |k: usize| (0..k).map(|_| it.next().unwrap_or(0.0)).collect::<Vec<_>>();
        let ar = take(self.p);
        let ma = take(self.q);
        let seasonal_ar = take(self.sp);
        let seasonal_ma = take(self.sq);
        let intercept = if self.intercept {
            mu0 + mu_scale * x.get(self.n_coef()).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        ArimaCoefficients {
            ar,
            ma,
            seasonal_ar,
            seasonal_ma,
            intercept,
            period: self.period,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CssFit {
    pub coef: ArimaCoefficients,
    pub css: f64,
    pub n_resid: usize,
    pub converged: bool,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn autocov(y: &[f64], lag: usize, mu: f64) -> f64 {
    if lag >= y.len() {
        return 0.0;
    }
    (lag..y.len()).map(|t| (y[t] - mu) * (y[t - lag] - mu)).sum::<f64>() / y.len() as f64
}

/// Yule-Walker AR estimates by Levinson-Durbin.
pub fn yule_walker(y: &[f64], p: usize, demean: bool) -> Vec<f64> {
    if p == 0 {
        return Vec::new();
    }
    let mu = if demean { mean(y) } else { 0.0 };
    let gamma: Vec<f64> = (0..=p).map(|k| autocov(y, k, mu)).collect();
    if !(gamma[0] > 0.0) {
        return vec![0.0; p];
    }
    let mut phi = vec![0.0; p];
    let mut var = gamma[0];
    for k in 0..p {
        let mut num = gamma[k + 1];
        for j in 0..k {
            num -= phi[j] * gamma[k - j];
        }
        if !(var > 1e-300) {
            break;
        }
        let refl = (num / var).clamp(-0.99, 0.99);
        let prev = phi.clone();
        phi[k] = refl;
        for j in 0..k {
            phi[j] = prev[j] - refl * prev[k - 1 - j];
        }
        var *= 1.0 - refl * refl;
    }
    phi
}

fn css_objective(w: &[f64], coef: &ArimaCoefficients) -> f64 {
    let e = residuals(w, coef);
    let start = coef.expanded_ar().len();
    let css: f64 = e[start.min(e.len())..].iter().map(|v| v * v).sum();
    if coef.is_stationary_invertible() {
        css
    } else {
        css * 10.0
    }
}

/// Minimises the conditional sum of squares over `w` from two starts: all
/// zeros and a Yule-Walker AR initialisation.
pub fn fit_css(w: &[f64], shape: ArimaShape) -> CssFit {
    let mu0 = if shape.intercept { mean(w) } else { 0.0 };
    let sd = {
        let v = autocov(w, 0, mean(w)).sqrt();
        if v > 0.0 && v.is_finite() {
            v
        } else {
            mu0.abs().max(1.0)
        }
    };
    let n_params = shape.n_coef() + usize::from(shape.intercept);
    let start_lag = shape.p + shape.sp * shape.period;
    let n_resid = w.len().saturating_sub(start_lag);

    if n_params == 0 {
        let coef = shape.unpack(&[], mu0, sd);
        let css = css_objective(w, &coef);
        return CssFit {
            coef,
            css,
            n_resid,
            converged: true,
        };
    }

    let objective = |x: &[f64]| css_objective(w, &shape.unpack(x, mu0, sd));

    let mut starts = vec![vec![0.0; n_params]];
    if shape.p > 0 || shape.sp > 0 {
        let mut yw = vec![0.0; n_params];
        let ar = yule_walker(w, shape.p, shape.intercept);
        yw[..shape.p].copy_from_slice(&ar);
        if shape.sp > 0 {
            let mu = if shape.intercept { mean(w) } else { 0.0 };
            let g0 = autocov(w, 0, mu);
            let rho = if g0 > 0.0 {
                (autocov(w, shape.period, mu) / g0).clamp(-0.9, 0.9)
            } else {
                0.0
            };
            yw[shape.p + shape.q] = rho;
        }
        if yw.iter().any(|v| *v != 0.0) {
            starts.push(yw);
        }
    }

    let mut best: Option<Minimum> = None;
    for x0 in &starts {
        let m = nelder_mead(objective, x0, NelderMeadOptions::default());
        let better = match &best {
            None => true,
            Some(b) => m.f < b.f,
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let coef = shape.unpack(&best.x, mu0, sd);
    CssFit {
        css: css_objective(w, &coef),
        coef,
        n_resid,
        converged: best.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity_region() {
        assert!(is_stationary(&[0.5]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[1.2]));
        // AR(2) triangle: φ2 < 1, φ2 + φ1 < 1, φ2 - φ1 < 1.
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(!is_stationary(&[0.8, 0.3]));
        assert!(!is_stationary(&[0.2, -1.1]));
        assert!(is_stationary(&[]));
    }

    #[test]
    fn expanded_multiplicative_ar() {
        let c = ArimaCoefficients {
            ar: vec![0.5],
            ma: vec![],
            seasonal_ar: vec![0.4],
            seasonal_ma: vec![],
            intercept: 0.0,
            period: 4,
        };
        // (1 - .5B)(1 - .4B^4) = 1 - .5B - .4B^4 + .2B^5
        let a = c.expanded_ar();
        assert_eq!(a.len(), 5);
        assert!((a[0] - 0.5).abs() < 1e-15);
        assert!((a[3] - 0.4).abs() < 1e-15);
        assert!((a[4] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn differencing_round_trip() {
        let y: Vec<f64> = (0..30).map(|t| (t as f64).powi(2) + (t % 4) as f64).collect();
        let poly = differencing_poly(1, 1, 4);
        let w = difference(&y, &poly);
        let rebuilt = integrate(&y[..poly.len() - 1], &w, &poly);
        for (a, b) in rebuilt.iter().zip(&y[poly.len() - 1..]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ar1_recursion_by_hand() {
        let coef = ArimaCoefficients {
            ar: vec![0.5],
            ..ArimaCoefficients::zeros(1, 0, 0, 0, 0)
        };
        let f = forecast_differenced(&[3.0, 8.0], &coef, 3);
        assert_eq!(f, vec![4.0, 2.0, 1.0]);
    }
}
