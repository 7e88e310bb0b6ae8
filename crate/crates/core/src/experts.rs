//! Expert space: per-point component forecasts for every atomic model,
//! triplet products, APE ranking and the count-threshold selection of
//! best and bad atomic models.

use std::collections::BTreeSet;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::models::{self, Registry, Role};

/// When component models are re-estimated inside a forecast window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RefitPolicy {
    /// Fit once on the data before the window.
    #[default]
    Once,
    /// Additionally refit every `m` points inside the window.
    Every(usize),
}

/// How forecasts inside a window are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ForecastMode {
    /// One step ahead; the origin is extended with observed values.
    #[default]
    OneStep,
    /// One multi-step path from the window start.
    MultiStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExpertTriplet {
    pub trend_id: u32,
    pub seasonal_id: u32,
    pub irregular_id: u32,
}

/// Forecasts of one component at every scored point, one column per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentForecasts {
    pub role: Role,
    pub ids: Vec<u32>,
    /// `values[point][model]`.
    pub values: Vec<Vec<f64>>,
    /// Cells replaced by the last observed value (failed fit or non-finite
    /// forecast).
    pub missed: Vec<Vec<bool>>,
    /// Fit error per model at the first fit, if any.
    pub fit_errors: Vec<Option<String>>,
}

impl ComponentForecasts {
    pub fn position(&self, id: u32) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn value(&self, point: usize, id: u32) -> Option<f64> {
        self.position(id).map(|m| self.values[point][m])
    }

    pub fn miss_count(&self) -> usize {
        self.missed.iter().flatten().filter(|m| **m).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentForecastTable {
    /// Absolute series indices of the scored points.
    pub points: Vec<usize>,
    pub trend: ComponentForecasts,
    pub seasonal: ComponentForecasts,
    pub irregular: ComponentForecasts,
}

impl ComponentForecastTable {
    pub fn component(&self, role: Role) -> &ComponentForecasts {
        match role {
            Role::Trend => &self.trend,
            Role::Seasonal => &self.seasonal,
            Role::Irregular => &self.irregular,
        }
    }

    pub fn rows_per_point(&self) -> usize {
        self.trend.ids.len() + self.seasonal.ids.len() + self.irregular.ids.len()
    }

    pub fn triplet_count(&self) -> usize {
        self.trend.ids.len() * self.seasonal.ids.len() * self.irregular.ids.len()
    }

    pub fn pool_sizes(&self) -> [usize; 3] {
        [self.trend.ids.len(), self.seasonal.ids.len(), self.irregular.ids.len()]
    }

    pub fn position_of(&self, t: usize) -> Option<usize> {
        self.points.iter().position(|&p| p == t)
    }
}

fn model_column(
    spec: &models::ModelSpec,
    series: &[f64],
    points: &Range<usize>,
    fit_end: usize,
    refit: RefitPolicy,
    mode: ForecastMode,
) -> (Vec<(f64, bool)>, Option<String>) {
    let mut fitted = models::fit(spec, &series[..fit_end]);
    let first_error = fitted.as_ref().err().map(|e| e.to_string());
    let mut column = Vec::with_capacity(points.len());
    let mut multi: Option<Vec<f64>> = None;
    for (k, t) in points.clone().enumerate() {
        if let RefitPolicy::Every(m) = refit {
            if m > 0 && k > 0 && k % m == 0 && mode == ForecastMode::OneStep {
                fitted = models::fit(spec, &series[..t]);
            }
        }
        let origin_end = match mode {
            ForecastMode::OneStep => t,
            ForecastMode::MultiStep => points.start,
        };
        let fallback = series[origin_end - 1];
        let value = match (&fitted, mode) {
            (Err(_), _) => None,
            (Ok(fm), ForecastMode::OneStep) => models::forecast(fm, &series[..t], 1).ok().map(|v| v[0]),
            (Ok(fm), ForecastMode::MultiStep) => {
                if multi.is_none() {
                    multi = models::forecast(fm, &series[..points.start], points.len()).ok();
                }
                multi.as_ref().map(|path| path[k])
            }
        };
        match value {
            Some(v) if v.is_finite() => column.push((v, false)),
            _ => column.push((fallback, true)),
        }
    }
    (column, first_error)
}

/// Forecasts every registry model on its component at each point of
/// `points`, fitting on `component[..fit_end]` (with optional refits).
///
/// Fit failures never abort the table: the affected cells carry the
/// component's last observed value and are flagged as missed.
pub fn build_table(
    dec: &Decomposition,
    registry: &Registry,
    points: Range<usize>,
    fit_end: usize,
    refit: RefitPolicy,
    mode: ForecastMode,
) -> Result<ComponentForecastTable> {
    if fit_end == 0 || fit_end > points.start || points.end > dec.len() || points.is_empty() {
        return Err(Error::invalid(format!(
            "scored points {points:?} must follow a non-empty fit window ending at {fit_end} within {} observations",
            dec.len()
        )));
    }
    registry.validate()?;
    let jobs: Vec<(Role, &models::ModelSpec)> = Role::ALL
        .iter()
        .flat_map(|r| registry.pool(*r).iter().map(move |m| (*r, m)))
        .collect();
    let columns: Vec<(Vec<(f64, bool)>, Option<String>)> = jobs
        .par_iter()
        .map(|(role, spec)| model_column(spec, dec.component(*role), &points, fit_end, refit, mode))
        .collect();

    let mut offset = 0;
    let mut assemble = |role: Role| {
        let pool = registry.pool(role);
        let cols = &columns[offset..offset + pool.len()];
        offset += pool.len();
        let values = (0..points.len())
            .map(|k| cols.iter().map(|(c, _)| c[k].0).collect())
            .collect();
        let missed = (0..points.len())
            .map(|k| cols.iter().map(|(c, _)| c[k].1).collect())
            .collect();
        ComponentForecasts {
            role,
            ids: pool.iter().map(|m| m.expert_id).collect(),
            values,
            missed,
            fit_errors: cols.iter().map(|(_, e)| e.clone()).collect(),
        }
    };
    let trend = assemble(Role::Trend);
    let seasonal = assemble(Role::Seasonal);
    let irregular = assemble(Role::Irregular);
    Ok(ComponentForecastTable {
        points: points.collect(),
        trend,
        seasonal,
        irregular,
    })
}

/// Product of the three component forecasts at table position `pos`.
pub fn expert_forecast(triplet: &ExpertTriplet, table: &ComponentForecastTable, pos: usize) -> Option<f64> {
    Some(
        table.trend.value(pos, triplet.trend_id)?
            * table.seasonal.value(pos, triplet.seasonal_id)?
            * table.irregular.value(pos, triplet.irregular_id)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedTriplet {
    pub triplet: ExpertTriplet,
    /// Absolute percentage error as a fraction.
    pub ape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRanking {
    pub t: usize,
    pub k: usize,
    /// Ascending |APE|, ties by smaller id triple.
    pub top: Vec<RankedTriplet>,
    /// Descending |APE|, ties by smaller id triple.
    pub bottom: Vec<RankedTriplet>,
}

/// Default number of ranked triplets: `round(ratio × count)`, at least 1.
pub fn default_k(k_ratio: f64, triplet_count: usize) -> usize {
    ((k_ratio * triplet_count as f64).round() as usize).clamp(1, triplet_count.max(1))
}

/// Ranks every triplet at table position `pos` by `|F - Y| / |Y|`.
pub fn rank_point(table: &ComponentForecastTable, pos: usize, actual: f64, k: usize) -> Result<PointRanking> {
    let t = table.points[pos];
    if actual == 0.0 {
        return Err(Error::ZeroActual(t));
    }
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let tv = &table.trend.values[pos];
    let sv = &table.seasonal.values[pos];
    let iv = &table.irregular.values[pos];
    let (nt, ns, ni) = (tv.len(), sv.len(), iv.len());
    let total = nt * ns * ni;
    let mut apes = Vec::with_capacity(total);
    for a in tv {
        for b in sv {
            let ab = a * b;
            for c in iv {
                let ape = ((ab * c - actual) / actual).abs();
                apes.push(if ape.is_nan() { f64::INFINITY } else { ape });
            }
        }
    }
    let k = k.min(total);
    // Flat index order equals lexicographic id order because pools are
    // sorted by expert id.
    let mut order: Vec<u32> = (0..total as u32).collect();
    let by_ape = |x: &u32, y: &u32| apes[*x as usize].total_cmp(&apes[*y as usize]).then(x.cmp(y));
    let pick = |order: &mut Vec<u32>, cmp: &dyn Fn(&u32, &u32) -> std::cmp::Ordering| -> Vec<u32> {
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, |a, b| cmp(a, b));
            order.truncate(k);
        }
        order.sort_by(|a, b| cmp(a, b));
        order.clone()
    };
    let to_ranked = |idx: u32| {
        let i = idx as usize;
        let (a, rest) = (i / (ns * ni), i % (ns * ni));
        let (b, c) = (rest / ni, rest % ni);
        RankedTriplet {
            triplet: ExpertTriplet {
                trend_id: table.trend.ids[a],
                seasonal_id: table.seasonal.ids[b],
                irregular_id: table.irregular.ids[c],
            },
            ape: apes[i],
        }
    };
    let top = pick(&mut order.clone(), &by_ape);
    let bottom = pick(&mut order, &|x: &u32, y: &u32| {
        apes[*y as usize].total_cmp(&apes[*x as usize]).then(x.cmp(y))
    });
    Ok(PointRanking {
        t,
        k,
        top: top.into_iter().map(to_ranked).collect(),
        bottom: bottom.into_iter().map(to_ranked).collect(),
    })
}

/// Best and bad atomic ids at one point, indexed by [`Role::index`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointBest {
    pub t: usize,
    pub best: [BTreeSet<u32>; 3],
    pub bad: [BTreeSet<u32>; 3],
}

fn frequent_ids(list: &[RankedTriplet], pool_sizes: [usize; 3]) -> [BTreeSet<u32>; 3] {
    let size = list.len();
    let mut counts: [std::collections::BTreeMap<u32, usize>; 3] = Default::default();
    for r in list {
        *counts[0].entry(r.triplet.trend_id).or_default() += 1;
        *counts[1].entry(r.triplet.seasonal_id).or_default() += 1;
        *counts[2].entry(r.triplet.irregular_id).or_default() += 1;
    }
    let mut out: [BTreeSet<u32>; 3] = Default::default();
    for role in 0..3 {
        // count > K / |pool|, compared exactly in integers.
        out[role] = counts[role]
            .iter()
            .filter(|(_, &c)| c * pool_sizes[role] > size)
            .map(|(&id, _)| id)
            .collect();
    }
    out
}

/// An id is best (bad) when its count among the top (bottom) K triplets
/// strictly exceeds `K / |pool|`.
pub fn best_models(ranking: &PointRanking, pool_sizes: [usize; 3]) -> PointBest {
    PointBest {
        t: ranking.t,
        best: frequent_ids(&ranking.top, pool_sizes),
        bad: frequent_ids(&ranking.bottom, pool_sizes),
    }
}

/// Per-point best/bad sets over a scoring window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BestModelSets {
    pub points: Vec<PointBest>,
    /// Points skipped because the actual value was zero.
    pub dropped: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_from(t: Vec<f64>, s: Vec<f64>, i: Vec<f64>) -> ComponentForecastTable {
        let comp = |role, v: Vec<f64>| ComponentForecasts {
            role,
            ids: (1..=v.len() as u32).collect(),
            missed: vec![vec![false; v.len()]],
            fit_errors: vec![None; v.len()],
            values: vec![v],
        };
        ComponentForecastTable {
            points: vec![10],
            trend: comp(Role::Trend, t),
            seasonal: comp(Role::Seasonal, s),
            irregular: comp(Role::Irregular, i),
        }
    }

    #[test]
    fn product_forecast() {
        let tab = table_from(vec![100.0], vec![1.1], vec![1.0]);
        let trip = ExpertTriplet {
            trend_id: 1,
            seasonal_id: 1,
            irregular_id: 1,
        };
        assert!((expert_forecast(&trip, &tab, 0).unwrap() - 110.0).abs() < 1e-12);
        let tab = table_from(vec![0.0], vec![1.1], vec![1.0]);
        assert_eq!(expert_forecast(&trip, &tab, 0).unwrap(), 0.0);
    }

    #[test]
    fn exact_triplet_ranks_first_and_ties_by_ids() {
        let tab = table_from(vec![90.0, 100.0], vec![1.0], vec![1.0, 1.0]);
        let r = rank_point(&tab, 0, 100.0, 4).unwrap();
        assert_eq!(r.top[0].ape, 0.0);
        assert_eq!(r.top[0].triplet.trend_id, 2);
        // (2,1,1) and (2,1,2) tie at zero; smaller id tuple first.
        assert_eq!(r.top[0].triplet.irregular_id, 1);
        assert_eq!(r.top[1].triplet.irregular_id, 2);
        assert_eq!(r.bottom[0].triplet.trend_id, 1);
        assert_eq!(r.bottom[0].triplet.irregular_id, 1);
        assert!(matches!(rank_point(&tab, 0, 0.0, 4), Err(Error::ZeroActual(10))));
    }

    #[test]
    fn ranking_matches_brute_force_sort() {
        let tab = table_from(vec![95.0, 102.0, 99.0], vec![1.02, 0.97], vec![1.01, 0.995]);
        let actual: f64 = 100.0;
        let mut all = Vec::new();
        for (a, tv) in [95.0, 102.0, 99.0].iter().enumerate() {
            for (b, sv) in [1.02, 0.97].iter().enumerate() {
                for (c, iv) in [1.01, 0.995].iter().enumerate() {
                    let ape: f64 = ((tv * sv * iv - actual) / actual).abs();
                    all.push((ape, (a as u32 + 1, b as u32 + 1, c as u32 + 1)));
                }
            }
        }
        all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let r = rank_point(&tab, 0, actual, 12).unwrap();
        let got: Vec<(u32, u32, u32)> = r
            .top
            .iter()
            .map(|x| (x.triplet.trend_id, x.triplet.seasonal_id, x.triplet.irregular_id))
            .collect();
        let want: Vec<(u32, u32, u32)> = all.iter().map(|x| x.1).collect();
        assert_eq!(got, want);
        let r5 = rank_point(&tab, 0, actual, 5).unwrap();
        assert_eq!(r5.top.len(), 5);
        assert_eq!(r5.top[..], r.top[..5]);
    }

    #[test]
    fn threshold_arithmetic() {
        // 20,000 / 86 = 232.56: 233 appearances qualify, 232 do not.
        let ranked = |trend_one: usize| -> Vec<RankedTriplet> {
            (0..20_000)
                .map(|i| RankedTriplet {
                    triplet: ExpertTriplet {
                        trend_id: if i < trend_one { 1 } else { 2 + (i % 85) as u32 },
                        seasonal_id: 1 + (i % 33) as u32,
                        irregular_id: 1 + (i % 34) as u32,
                    },
                    ape: i as f64,
                })
                .collect()
        };
        for (count, expect) in [(233, true), (232, false)] {
            let top = ranked(count);
            let r = PointRanking {
                t: 0,
                k: 20_000,
                bottom: top.clone(),
                top,
            };
            let b = best_models(&r, [86, 33, 34]);
            assert_eq!(b.best[0].contains(&1), expect, "count {count}");
        }
        assert_eq!(default_k(0.2073, 96_492), 20_003);
        assert_eq!(default_k(0.2073, 1), 1);
    }

    #[test]
    fn uniform_top_gives_empty_best() {
        let trip = |a, b, c| RankedTriplet {
            triplet: ExpertTriplet {
                trend_id: a,
                seasonal_id: b,
                irregular_id: c,
            },
            ape: 0.0,
        };
        let ranking = PointRanking {
            t: 0,
            k: 4,
            top: vec![trip(1, 1, 1), trip(2, 2, 2), trip(1, 2, 1), trip(2, 1, 2)],
            bottom: vec![],
        };
        let best = best_models(&ranking, [2, 2, 2]);
        assert!(best.best.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn rigged_toy_pool_best_counts() {
        // Trend model 1 is exact; every triplet using it beats the rest.
        let tab = table_from(vec![100.0, 80.0, 130.0], vec![1.0, 1.05], vec![1.0, 0.97]);
        let r = rank_point(&tab, 0, 100.0, 4).unwrap();
        assert!(r.top.iter().all(|x| x.triplet.trend_id == 1));
        let best = best_models(&r, [3, 2, 2]);
        // Hand count in top 4: T1 ×4, S1 ×2, S2 ×2, I1 ×2, I2 ×2.
        assert_eq!(best.best[0], BTreeSet::from([1]));
        assert!(best.best[1].is_empty() && best.best[2].is_empty());
        // Bottom 4 is all four T3 triplets (36.5, 32.5, 30, 26.1%); the
        // seasonal and irregular ids appear twice each, not above 4/2.
        assert_eq!(best.bad[0], BTreeSet::from([3]));
        assert!(best.bad[1].is_empty() && best.bad[2].is_empty());
    }

    #[test]
    fn rank_stable_under_power_of_two_scaling() {
        let tab = table_from(vec![95.0, 102.0, 99.0], vec![1.02, 0.97], vec![1.01, 0.995]);
        let mut scaled = tab.clone();
        for v in scaled.trend.values[0].iter_mut() {
            *v *= 8.0;
        }
        let a = rank_point(&tab, 0, 100.0, 12).unwrap();
        let b = rank_point(&scaled, 0, 800.0, 12).unwrap();
        assert_eq!(a, b);
    }
}
