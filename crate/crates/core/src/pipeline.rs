//! End-to-end run: decompose, score experts on the training window, mine
//! consistent models, combine them over the evaluation window and compare
//! against a Holt-Winters baseline.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{self, CombinePolicy, Metrics, Source, Statistic};
use crate::decomposition::{decompose, Decomposition};
use crate::error::{Error, Result, StageExt};
use crate::experts::{
    self, BestModelSets, ComponentForecastTable, ForecastMode, PointRanking, RefitPolicy,
};
use crate::mining::{self, ClosedItemset, ComponentSets, ConsistentSets, Polarity, TransactionDB};
use crate::models::{smoothing, HwParams, Registry, Role};
use crate::series::{self, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmmConfig {
    pub train_fraction: f64,
    pub k_ratio: f64,
    pub minsup_ratio: f64,
    pub policy: CombinePolicy,
    pub horizon: usize,
    pub refit: RefitPolicy,
    /// First scored training point; defaults to the registry's longest
    /// minimum fit length, capped at `n_train - period`.
    pub warmup: Option<usize>,
    /// Forecast the evaluation window as one path instead of rolling
    /// one-step forecasts.
    pub multi_step: bool,
    /// Holt-Winters baseline grid; `None` uses the default 7×7×7 grid.
    pub hw_grid: Option<Vec<(f64, f64, f64)>>,
}

impl Default for CmmConfig {
    fn default() -> Self {
        CmmConfig {
            train_fraction: 0.7,
            k_ratio: 0.2073,
            minsup_ratio: 0.6,
            policy: CombinePolicy::default(),
            horizon: 24,
            refit: RefitPolicy::Once,
            warmup: None,
            multi_step: false,
            hw_grid: None,
        }
    }
}

impl CmmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train_fraction", self.train_fraction),
            ("k_ratio", self.k_ratio),
            ("minsup_ratio", self.minsup_ratio),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name}={v} must lie in (0, 1]")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.refit == RefitPolicy::Every(0) {
            return Err(Error::invalid("refit interval must be at least 1"));
        }
        if let Some(grid) = &self.hw_grid {
            for &(a, b, g) in grid {
                HwParams::new(a, b, g, 1)?;
            }
        }
        Ok(())
    }

    fn mode(&self) -> ForecastMode {
        if self.multi_step {
            ForecastMode::MultiStep
        } else {
            ForecastMode::OneStep
        }
    }

    fn grid(&self) -> Vec<(f64, f64, f64)> {
        self.hw_grid.clone().unwrap_or_else(smoothing::default_hw_grid)
    }
}

/// Everything produced by the training-side stages.
#[derive(Debug, Clone, Serialize)]
pub struct MiningOutcome {
    pub series_id: String,
    pub n_train: usize,
    pub warmup: usize,
    pub k: usize,
    pub triplet_count: usize,
    #[serde(skip)]
    pub table: ComponentForecastTable,
    #[serde(skip)]
    pub rankings: Vec<PointRanking>,
    pub best: BestModelSets,
    pub good_db: TransactionDB,
    pub bad_db: TransactionDB,
    pub good_closed: Vec<ClosedItemset>,
    pub bad_closed: Vec<ClosedItemset>,
    pub sets: ConsistentSets,
    pub missed_cells: usize,
}

fn resolve_warmup(config: &CmmConfig, registry: &Registry, n_train: usize, period: usize) -> Result<usize> {
    let warmup = match config.warmup {
        Some(w) => w,
        None => registry.max_min_fit_length().min(n_train.saturating_sub(period)).max(1),
    };
    if warmup == 0 || warmup >= n_train {
        return Err(Error::invalid(format!(
            "warmup {warmup} must lie in 1..{n_train} (training length)"
        )));
    }
    Ok(warmup)
}

fn mine_polarity(db: Result<TransactionDB>, minsup_ratio: f64) -> Result<(TransactionDB, Vec<ClosedItemset>, ComponentSets)> {
    match db {
        Ok(db) => {
            let (closed, sets) = mining::mine_consistent(&db, minsup_ratio)?;
            Ok((db, closed, sets))
        }
        Err(Error::EmptyDatabase) => Ok(Default::default()),
        Err(e) => Err(e),
    }
}

/// Scores every expert at each training point after the warmup, and mines
/// the consistent good and bad model sets.
pub fn mine(ts: &TimeSeries, registry: &Registry, config: &CmmConfig, keep_rankings: bool) -> Result<MiningOutcome> {
    config.validate()?;
    let dec = decompose(ts);
    mine_decomposed(ts, &dec, registry, config, keep_rankings)
}

fn mine_decomposed(
    ts: &TimeSeries,
    dec: &Decomposition,
    registry: &Registry,
    config: &CmmConfig,
    keep_rankings: bool,
) -> Result<MiningOutcome> {
    let split = series::split(ts, config.train_fraction, config.horizon).stage("split")?;
    let n_train = split.train.len();
    let warmup = resolve_warmup(config, registry, n_train, ts.period()).stage("split")?;

    let table = experts::build_table(dec, registry, warmup..n_train, warmup, config.refit, ForecastMode::OneStep)
        .stage("forecast table")?;
    let total = table.triplet_count();
    let k = experts::default_k(config.k_ratio, total);
    let sizes = table.pool_sizes();
    let values = ts.values();

    let ranked: Vec<Result<PointRanking>> = (0..table.points.len())
        .into_par_iter()
        .map(|pos| experts::rank_point(&table, pos, values[table.points[pos]], k))
        .collect();
    let mut best = BestModelSets::default();
    let mut rankings = Vec::new();
    for r in ranked {
        match r {
            Ok(r) => {
                best.points.push(experts::best_models(&r, sizes));
                if keep_rankings {
                    rankings.push(r);
                }
            }
            Err(Error::ZeroActual(t)) => best.dropped.push(t),
            Err(e) => return Err(e.in_stage("rank")),
        }
    }

    let (good_db, good_closed, good) =
        mine_polarity(mining::build_db(&best, Polarity::Good), config.minsup_ratio).stage("mine")?;
    if good_db.is_empty() {
        return Err(Error::EmptyDatabase.in_stage("mine"));
    }
    let (bad_db, bad_closed, bad) =
        mine_polarity(mining::build_db(&best, Polarity::Bad), config.minsup_ratio).stage("mine")?;

    let missed_cells = Role::ALL.iter().map(|r| table.component(*r).miss_count()).sum();
    Ok(MiningOutcome {
        series_id: ts.id().to_string(),
        n_train,
        warmup,
        k,
        triplet_count: total,
        table,
        rankings,
        best,
        good_db,
        bad_db,
        good_closed,
        bad_closed,
        sets: ConsistentSets { good, bad },
        missed_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: usize,
    pub date: String,
    pub actual: f64,
    pub forecast: f64,
    pub error: f64,
    pub hw_forecast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub series_id: String,
    /// Series whose consistent sets were used, when transferred.
    pub source_series: Option<String>,
    pub n_train: usize,
    pub policy: CombinePolicy,
    pub rows: Vec<ReportRow>,
    pub metrics: Metrics,
    pub hw_metrics: Metrics,
    pub hw_params: HwParams,
    /// Relative MAPE improvement over Holt-Winters, percent, 2 decimals.
    pub improvement_pct: f64,
    pub consistent: ConsistentSets,
    /// Ids actually combined per component.
    pub combined: ComponentSets,
    pub dropped_points: Vec<usize>,
    pub missed_cells: usize,
}

/// Ids combined for `role` under the policy's source; empty selections fall
/// back to the full pool.
fn selection(registry: &Registry, sets: &ConsistentSets, source: Source, role: Role) -> BTreeSet<u32> {
    let pool: BTreeSet<u32> = registry.pool(role).iter().map(|m| m.expert_id).collect();
    let chosen: BTreeSet<u32> = match source {
        Source::All => pool.clone(),
        Source::ConsistentGood => sets.good.get(role).intersection(&pool).copied().collect(),
        Source::Filtered => pool.difference(sets.bad.get(role)).copied().collect(),
    };
    if chosen.is_empty() {
        pool
    } else {
        chosen
    }
}

/// One-step (or one multi-step path) Holt-Winters forecasts for `points`,
/// with constants fitted on `series[..n_train]`.
fn hw_baseline(series: &[f64], period: usize, n_train: usize, points: &[usize], config: &CmmConfig) -> Result<(HwParams, Vec<f64>)> {
    let params = smoothing::fit_hw(&series[..n_train], period, &config.grid())?;
    let first = points[0];
    let out = if config.multi_step {
        let (path, _) = smoothing::holt_winters(&series[..first], &params, points.len())?;
        path
    } else {
        let (one_step, _) = smoothing::hw_filter(series, params.alpha, params.beta, params.gamma, period)?;
        // one_step[k] forecasts series[k + period].
        points.iter().map(|t| one_step[t - period]).collect()
    };
    Ok((params, out))
}

/// Evaluates given consistent sets on `ts`: component models are fitted on
/// the training prefix and combined over the last `horizon` points.
pub fn evaluate_with_sets(
    ts: &TimeSeries,
    registry: &Registry,
    config: &CmmConfig,
    sets: &ConsistentSets,
    source_series: Option<String>,
) -> Result<ForecastReport> {
    config.validate()?;
    let dec = decompose(ts);
    evaluate_decomposed(ts, &dec, registry, config, sets, source_series, Vec::new(), 0)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_decomposed(
    ts: &TimeSeries,
    dec: &Decomposition,
    registry: &Registry,
    config: &CmmConfig,
    sets: &ConsistentSets,
    source_series: Option<String>,
    dropped_points: Vec<usize>,
    train_misses: usize,
) -> Result<ForecastReport> {
    let split = series::split(ts, config.train_fraction, config.horizon).stage("split")?;
    let n = ts.len();
    let n_train = split.train.len();
    let combined = ComponentSets {
        trend: selection(registry, sets, config.policy.source, Role::Trend),
        seasonal: selection(registry, sets, config.policy.source, Role::Seasonal),
        irregular: selection(registry, sets, config.policy.source, Role::Irregular),
    };
    if config.policy.statistic == Statistic::Median {
        let count: usize = Role::ALL.iter().map(|r| combined.get(*r).len()).product();
        if count > combine::MEDIAN_CAP {
            return Err(Error::CombineCap {
                count,
                cap: combine::MEDIAN_CAP,
            }
            .in_stage("combine"));
        }
    }
    let reduced = registry
        .subset(
            &combined.trend.iter().copied().collect::<Vec<_>>(),
            &combined.seasonal.iter().copied().collect::<Vec<_>>(),
            &combined.irregular.iter().copied().collect::<Vec<_>>(),
        )
        .stage("combine")?;
    let points = n - config.horizon..n;
    let table = experts::build_table(dec, &reduced, points.clone(), n_train, config.refit, config.mode())
        .stage("evaluation table")?;

    let forecasts: Vec<f64> = (0..table.points.len())
        .map(|pos| {
            combine::combine(
                &table.trend.values[pos],
                &table.seasonal.values[pos],
                &table.irregular.values[pos],
                config.policy.statistic,
            )
        })
        .collect::<Result<_>>()
        .stage("combine")?;
    let (hw_params, hw) = hw_baseline(ts.values(), ts.period(), n_train, &table.points, config).stage("baseline")?;

    let actuals: Vec<f64> = points.clone().map(|t| ts.values()[t]).collect();
    let metrics = combine::metrics(&actuals, &forecasts).stage("metrics")?;
    let hw_metrics = combine::metrics(&actuals, &hw).stage("metrics")?;
    let rows = points
        .enumerate()
        .map(|(k, t)| ReportRow {
            t,
            date: ts.stamp(t).to_string(),
            actual: actuals[k],
            forecast: forecasts[k],
            error: actuals[k] - forecasts[k],
            hw_forecast: hw[k],
        })
        .collect();
    let eval_misses: usize = Role::ALL.iter().map(|r| table.component(*r).miss_count()).sum();
    Ok(ForecastReport {
        series_id: ts.id().to_string(),
        source_series,
        n_train,
        policy: config.policy,
        rows,
        improvement_pct: combine::round2(combine::improvement(hw_metrics.mape, metrics.mape)),
        metrics,
        hw_metrics,
        hw_params,
        consistent: sets.clone(),
        combined,
        dropped_points,
        missed_cells: train_misses + eval_misses,
    })
}

/// Full pipeline on one series.
pub fn run_cmm(ts: &TimeSeries, registry: &Registry, config: &CmmConfig) -> Result<(MiningOutcome, ForecastReport)> {
    config.validate()?;
    let dec = decompose(ts);
    let outcome = mine_decomposed(ts, &dec, registry, config, false)?;
    let report = evaluate_decomposed(
        ts,
        &dec,
        registry,
        config,
        &outcome.sets,
        None,
        outcome.best.dropped.clone(),
        outcome.missed_cells,
    )?;
    Ok((outcome, report))
}

/// Recomputes the stored metrics from the report rows.
pub fn recompute_metrics(report: &ForecastReport) -> Result<Metrics> {
    let actuals: Vec<f64> = report.rows.iter().map(|r| r.actual).collect();
    let forecasts: Vec<f64> = report.rows.iter().map(|r| r.forecast).collect();
    combine::metrics(&actuals, &forecasts)
}

pub const AVERAGE_ROW: &str = "Average Improvement (All Series)";

/// Comparison table: one row per series plus the average improvement.
pub fn comparison_csv(reports: &[ForecastReport]) -> String {
    let mut out = String::from("series,hw_mape,cmm_mape,improvement_pct\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2}",
            r.series_id, r.hw_metrics.mape, r.metrics.mape, r.improvement_pct
        );
    }
    let avg = if reports.is_empty() {
        0.0
    } else {
        reports.iter().map(|r| r.improvement_pct).sum::<f64>() / reports.len() as f64
    };
    let _ = writeln!(out, "{AVERAGE_ROW},,,{avg:.2}");
    out
}

/// Plot data: `point,actual,cmm_forecast,hw_forecast`.
pub fn plot_csv(report: &ForecastReport) -> String {
    let mut out = String::from("point,actual,cmm_forecast,hw_forecast\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.actual, r.forecast, r.hw_forecast);
    }
    out
}
