//! Time-series data model, CSV ingestion, train/test splitting and a seeded
//! synthetic generator.
//!
//! Series are uniformly sampled with an integer seasonal `period`. Timestamps
//! are implied by a `(year, sub-period)` anchor plus the observation index and
//! are written as `YYYY-MM`, where `MM` is the 1-based sub-period.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar anchor: a year and a 1-based sub-period within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    pub year: i32,
    pub sub: u32,
}

impl Stamp {
    pub fn new(year: i32, sub: u32) -> Self {
        Stamp { year, sub }
    }

    /// The stamp `steps` observations later, for a series with `period`
    /// sub-periods per year.
    pub fn advance(self, steps: usize, period: usize) -> Stamp {
        let p = period as i64;
        let zero_based = self.year as i64 * p + (self.sub as i64 - 1) + steps as i64;
        Stamp {
            year: zero_based.div_euclid(p) as i32,
            sub: (zero_based.rem_euclid(p) + 1) as u32,
        }
    }

    fn parse(text: &str, period: usize) -> std::result::Result<Stamp, String> {
        let (y, m) = text
            .trim()
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got {text:?}"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in {text:?}"))?;
        let sub: u32 = m.parse().map_err(|_| format!("bad sub-period in {text:?}"))?;
        if sub == 0 || sub as usize > period {
            return Err(format!("sub-period {sub} outside 1..={period}"));
        }
        Ok(Stamp { year, sub })
    }
}

impl Default for Stamp {
    fn default() -> Self {
        Stamp { year: 2000, sub: 1 }
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.sub)
    }
}

/// A uniformly sampled, strictly positive series with a seasonal period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    id: String,
    period: usize,
    start: Stamp,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a validated series: `period ≥ 1`, `len ≥ 3 × period`, every
    /// value finite and positive.
    pub fn new(id: impl Into<String>, period: usize, start: Stamp, values: Vec<f64>) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("period must be positive"));
        }
        if start.sub == 0 || start.sub as usize > period {
            return Err(Error::invalid(format!(
                "start sub-period {} outside 1..={period}",
                start.sub
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::NonPositive { row: i + 1, value: v });
            }
        }
        if values.len() < 3 * period {
            return Err(Error::TooShort {
                len: values.len(),
                min: 3 * period,
            });
        }
        Ok(TimeSeries {
            id: id.into(),
            period,
            start,
            values,
        })
    }

    /// A segment of an already validated series; skips the length check so
    /// short test windows can be represented.
    fn segment(&self, from: usize, to: usize) -> TimeSeries {
        TimeSeries {
            id: self.id.clone(),
            period: self.period,
            start: self.start.advance(from, self.period),
            values: self.values[from..to].to_vec(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn start(&self) -> Stamp {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stamp(&self, index: usize) -> Stamp {
        self.start.advance(index, self.period)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same timestamps, values multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<TimeSeries> {
        TimeSeries::new(
            self.id.clone(),
            self.period,
            self.start,
            self.values.iter().map(|v| v * k).collect(),
        )
    }
}

/// Reads a `date,value` CSV. The series id is the file stem.
pub fn load_csv(path: impl AsRef<Path>, period: usize) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    read_csv(file, id, period)
}

/// Parses `date,value` rows from any reader. Row numbers in errors are
/// 1-based and exclude the header.
pub fn read_csv<R: Read>(reader: R, id: impl Into<String>, period: usize) -> Result<TimeSeries> {
    if period == 0 {
        return Err(Error::invalid("period must be positive"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        row: 0,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "value" {
        return Err(Error::Parse {
            row: 0,
            column: "header".into(),
            message: format!("expected header `date,value`, got {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }

    let mut start = None;
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "record".into(),
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Parse {
                row,
                column: "record".into(),
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let stamp = Stamp::parse(&record[0], period).map_err(|message| Error::Parse {
            row,
            column: "date".into(),
            message,
        })?;
        let value: f64 = record[1].parse().map_err(|_| Error::Parse {
            row,
            column: "value".into(),
            message: format!("not a number: {:?}", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                row,
                column: "value".into(),
                message: format!("not finite: {:?}", &record[1]),
            });
        }
        if value <= 0.0 {
            return Err(Error::NonPositive { row, value });
        }
        match start {
            None => start = Some(stamp),
            Some(s) => {
                let expected = Stamp::advance(s, values.len(), period);
                if stamp != expected {
                    return Err(Error::Gap {
                        row,
                        expected: expected.to_string(),
                        found: stamp.to_string(),
                    });
                }
            }
        }
        values.push(value);
    }
    TimeSeries::new(id, period, start.unwrap_or_default(), values)
}

/// Writes the `date,value` format read by [`read_csv`]. Values use the
/// shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(ts: &TimeSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "date,value")?;
    for (i, v) in ts.values.iter().enumerate() {
        writeln!(out, "{},{}", ts.stamp(i), v)?;
    }
    Ok(())
}

/// Deterministic prefix/suffix split with an evaluation horizon inside the
/// test part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train_fraction: f64,
    pub train: TimeSeries,
    pub test: TimeSeries,
    pub eval_horizon: usize,
}

/// Number of training observations for `fraction` of `n`.
///
/// The product is nudged by 1e-9 before flooring so that e.g. `0.7 × 120`
/// yields 84 regardless of binary representation.
pub fn train_len(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 1e-9).floor() as usize
}

pub fn split(ts: &TimeSeries, fraction: f64, horizon: usize) -> Result<Split> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("train fraction {fraction} outside (0, 1]")));
    }
    let n_train = train_len(ts.len(), fraction).min(ts.len());
    if n_train < 3 * ts.period {
        return Err(Error::TooShort {
            len: n_train,
            min: 3 * ts.period,
        });
    }
    let n_test = ts.len() - n_train;
    if horizon > n_test {
        return Err(Error::invalid(format!(
            "evaluation horizon {horizon} exceeds test length {n_test}"
        )));
    }
    Ok(Split {
        train_fraction: fraction,
        train: ts.segment(0, n_train),
        test: ts.segment(n_train, ts.len()),
        eval_horizon: horizon,
    })
}

fn default_id() -> String {
    "synth".to_string()
}

/// Parameters of the multiplicative synthetic generator
/// `(base + slope·t) × amp[t mod period] × exp(ε_t)`, `ε_t ~ N(0, noise_sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub start: Stamp,
    pub n: usize,
    pub period: usize,
    pub base_level: f64,
    pub trend_slope: f64,
    pub seasonal_amplitudes: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Seasonal factors `1 + amplitude·sin(2π(j + phase)/period)`, which
    /// average exactly 1 up to round-off.
    pub fn sinusoidal_factors(period: usize, amplitude: f64, phase: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..period)
            .map(|j| 1.0 + amplitude * (2.0 * std::f64::consts::PI * (j as f64 + phase) / period as f64).sin())
            .collect();
        let mean = raw.iter().sum::<f64>() / period as f64;
        raw.into_iter().map(|v| v / mean).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::invalid("period must be positive"));
        }
        if self.seasonal_amplitudes.len() != self.period {
            return Err(Error::invalid(format!(
                "expected {} seasonal amplitudes, got {}",
                self.period,
                self.seasonal_amplitudes.len()
            )));
        }
        if self.seasonal_amplitudes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("seasonal amplitudes must be positive"));
        }
        let mean = self.seasonal_amplitudes.iter().sum::<f64>() / self.period as f64;
        if (mean - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "seasonal amplitudes must average 1 (mean is {mean})"
            )));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::invalid("noise_sd must be a non-negative number"));
        }
        if !self.base_level.is_finite() || !self.trend_slope.is_finite() {
            return Err(Error::invalid("base_level and trend_slope must be finite"));
        }
        Ok(())
    }
}

pub fn generate(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut values = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        let eps = noise.sample(&mut rng);
        let level = spec.base_level + spec.trend_slope * t as f64;
        let v = level * spec.seasonal_amplitudes[t % spec.period] * eps.exp();
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "generated value {v} at t={t} is not positive (base_level={}, trend_slope={})",
                spec.base_level, spec.trend_slope
            )));
        }
        values.push(v);
    }
    TimeSeries::new(spec.id.clone(), spec.period, spec.start, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monthly_csv(values: &[f64]) -> String {
        let ts_start = Stamp::new(1990, 1);
        let mut s = String::from("date,value\n");
        for (i, v) in values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", ts_start.advance(i, 12), v));
        }
        s
    }

    #[test]
    fn loads_120_rows() {
        let vals: Vec<f64> = (0..120).map(|i| 100.0 + i as f64).collect();
        let ts = read_csv(monthly_csv(&vals).as_bytes(), "x", 12).unwrap();
        assert_eq!(ts.len(), 120);
        assert_eq!(ts.start(), Stamp::new(1990, 1));
        assert_eq!(ts.stamp(12), Stamp::new(1991, 1));
    }

    #[test]
    fn zero_value_names_row() {
        let mut vals: Vec<f64> = vec![5.0; 40];
        vals[6] = 0.0;
        match read_csv(monthly_csv(&vals).as_bytes(), "x", 12) {
            Err(Error::NonPositive { row, .. }) => assert_eq!(row, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_series_rejected() {
        let vals = vec![1.0; 30];
        let err = read_csv(monthly_csv(&vals).as_bytes(), "x", 12).unwrap_err();
        assert!(matches!(err, Error::TooShort { len: 30, min: 36 }));
        assert!(err.to_string().contains("3×period"));
    }

    #[test]
    fn gap_rejected() {
        let s = "date,value\n2000-01,1\n2000-02,1\n2000-04,1\n";
        assert!(matches!(read_csv(s.as_bytes(), "x", 12), Err(Error::Gap { row: 3, .. })));
    }

    #[test]
    fn bad_number_reports_column() {
        let s = "date,value\n2000-01,abc\n";
        match read_csv(s.as_bytes(), "x", 12) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "value");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn split_arithmetic() {
        let ts = TimeSeries::new("x", 12, Stamp::default(), vec![1.0; 120]).unwrap();
        let s = split(&ts, 0.7, 24).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (84, 36));
        assert_eq!(s.test.start(), ts.stamp(84));

        let s = split(&ts, 1.0, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (120, 0));
        assert!(split(&ts, 1.0, 1).is_err());

        let ts = TimeSeries::new("x", 12, Stamp::default(), vec![1.0; 100]).unwrap();
        assert_eq!(split(&ts, 0.5, 24).unwrap().train.len(), 50);
        assert!(matches!(split(&ts, 0.3, 1), Err(Error::TooShort { .. })));
        assert!(split(&ts, 0.0, 1).is_err());
    }

    fn spec4() -> SynthSpec {
        SynthSpec {
            id: "s".into(),
            start: Stamp::default(),
            n: 24,
            period: 4,
            base_level: 100.0,
            trend_slope: 1.0,
            seasonal_amplitudes: vec![1.2, 0.8, 1.1, 0.9],
            noise_sd: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn generator_hand_value() {
        let ts = generate(&spec4()).unwrap();
        assert!((ts.values()[5] - 84.0).abs() < 1e-12);
    }

    #[test]
    fn generator_constant() {
        let spec = SynthSpec {
            trend_slope: 0.0,
            seasonal_amplitudes: vec![1.0; 4],
            ..spec4()
        };
        assert!(generate(&spec).unwrap().values().iter().all(|&v| v == 100.0));
    }

    #[test]
    fn generator_rejects_negative() {
        let spec = SynthSpec {
            trend_slope: -10.0,
            ..spec4()
        };
        let err = generate(&spec).unwrap_err().to_string();
        assert!(err.contains("trend_slope=-10"), "{err}");
        let spec = SynthSpec {
            seasonal_amplitudes: vec![1.0, 1.0, 1.0, 1.1],
            ..spec4()
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn sinusoidal_factors_average_one() {
        let f = SynthSpec::sinusoidal_factors(12, 0.3, 0.25);
        let mean = f.iter().sum::<f64>() / 12.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }
}
