//! Movement-pattern dissimilarity between series (SFD), grouping by it,
//! and transfer of consistent model sets within a group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mining::ConsistentSets;
use crate::models::{Registry, Role};
use crate::pipeline::{self, CmmConfig, ForecastReport};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Up,
    Down,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub direction: Direction,
    pub pct_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfdConfig {
    /// Percent; smaller absolute changes count as flat.
    pub flat_threshold: f64,
    /// Percentage points allowed between same-direction moves.
    pub pct_diff_threshold: f64,
    /// Maximum normalised SFD for two series to be linked.
    pub similarity_ratio: f64,
}

impl Default for SfdConfig {
    fn default() -> Self {
        SfdConfig {
            flat_threshold: 1.0,
            pct_diff_threshold: 5.0,
            similarity_ratio: 0.3,
        }
    }
}

impl SfdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flat_threshold >= 0.0 && self.pct_diff_threshold >= 0.0) {
            return Err(Error::invalid("SFD thresholds must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.similarity_ratio) {
            return Err(Error::invalid(format!(
                "similarity_ratio={} must lie in [0, 1]",
                self.similarity_ratio
            )));
        }
        Ok(())
    }
}

pub fn movements(series: &[f64], cfg: &SfdConfig) -> Result<Vec<Movement>> {
    if series.len() < 2 {
        return Err(Error::invalid("movements need at least two values"));
    }
    if let Some(i) = series.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive {
            row: i + 1,
            value: series[i],
        });
    }
    Ok(series
        .windows(2)
        .map(|w| {
            let pct = 100.0 * (w[1] - w[0]) / w[0];
            let direction = if pct.abs() < cfg.flat_threshold {
                Direction::Flat
            } else if pct > 0.0 {
                Direction::Up
            } else {
                Direction::Down
            };
            Movement {
                direction,
                pct_change: pct,
            }
        })
        .collect())
}

/// Number of steps over the common prefix where the two series move in
/// different directions, or in the same direction by percentages more than
/// `pct_diff_threshold` apart.
pub fn sfd(p: &[f64], q: &[f64], cfg: &SfdConfig) -> Result<usize> {
    let n = p.len().min(q.len());
    let mp = movements(&p[..n.max(2).min(p.len())], cfg)?;
    let mq = movements(&q[..n.max(2).min(q.len())], cfg)?;
    Ok(mp
        .iter()
        .zip(&mq)
        .filter(|(a, b)| a.direction != b.direction || (a.pct_change - b.pct_change).abs() > cfg.pct_diff_threshold)
        .count())
}

/// SFD divided by the number of compared steps.
pub fn normalized_sfd(p: &[f64], q: &[f64], cfg: &SfdConfig) -> Result<f64> {
    let steps = p.len().min(q.len()).saturating_sub(1).max(1);
    Ok(sfd(p, q, cfg)? as f64 / steps as f64)
}

/// Pairwise normalised SFD matrix.
pub fn sfd_matrix(series: &[&[f64]], cfg: &SfdConfig) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    let n = series.len();
    let cells: Vec<Result<f64>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                Ok(0.0)
            } else {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                normalized_sfd(series[a], series[b], cfg)
            }
        })
        .collect();
    let flat: Vec<f64> = cells.into_iter().collect::<Result<_>>()?;
    Ok(flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesGroup {
    pub members: Vec<String>,
    /// Normalised SFD between members, in member order.
    pub sfd: Vec<Vec<f64>>,
    pub representative: String,
}

/// Single-linkage groups: series are linked when their normalised SFD is at
/// most `similarity_ratio`. Groups and members keep input order; the
/// representative is `representative` when it is a member, else the first
/// member.
pub fn group(series: &[TimeSeries], cfg: &SfdConfig, representative: Option<&str>) -> Result<Vec<SeriesGroup>> {
    cfg.validate()?;
    if series.len() < 2 {
        return Err(Error::invalid("grouping needs at least two series"));
    }
    let values: Vec<&[f64]> = series.iter().map(TimeSeries::values).collect();
    let matrix = sfd_matrix(&values, cfg)?;
    let n = series.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[i][j] <= cfg.similarity_ratio {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    Ok(groups
        .into_iter()
        .map(|idx| {
            let members: Vec<String> = idx.iter().map(|&i| series[i].id().to_string()).collect();
            let rep = representative
                .filter(|r| members.iter().any(|m| m == r))
                .map(str::to_string)
                .unwrap_or_else(|| members[0].clone());
            SeriesGroup {
                sfd: idx.iter().map(|&i| idx.iter().map(|&j| matrix[i][j]).collect()).collect(),
                members,
                representative: rep,
            }
        })
        .collect())
}

/// Evaluates `target` with another series' consistent sets; no mining is
/// done on the target and atomic models are refitted on its components.
pub fn transfer(
    source_id: &str,
    source: &ConsistentSets,
    target: &TimeSeries,
    registry: &Registry,
    config: &CmmConfig,
) -> Result<ForecastReport> {
    if !Role::ALL.iter().all(|r| !source.good.get(*r).is_empty()) {
        return Err(Error::invalid(format!(
            "consistent sets of {source_id} are empty for at least one component"
        )));
    }
    pipeline::evaluate_with_sets(target, registry, config, source, Some(source_id.to_string()))
}
