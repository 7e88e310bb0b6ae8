//! Built-in pools of atomic forecasters: 86 trend, 33 seasonal and 34
//! irregular models, keyed by `(role, expert_id)`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelSpec, Role};
use crate::error::{Error, Result};

pub const IRREGULAR_NAMES: [&str; 34] = [
    "ARIMA (0,0,1) _s",
    "ARIMA (0,1,0)",
    "ARIMA (0,1,1)",
    "ARIMA (0,1,1)(1,0,0) _s NOINT",
    "ARIMA (0,1,1) _s NOINT",
    "ARIMA (1,0,0)",
    "ARIMA (1,0,0) _s",
    "ARIMA (1,0,1) _s",
    "ARIMA (1,1,0)",
    "ARIMA (1,1,2)",
    "ARIMA (2,0,0)",
    "ARIMA (2,0,0)(1,0,0) _s",
    "ARIMA (3,0,0)(1,0,0) _s",
    "Linear Exponential",
    "Linear Trend AR1",
    "Linear Trend AR2",
    "Linear Trend AR3",
    "Log ARIMA (0,0,1) _s",
    "Log ARIMA (0,1,0)",
    "Log ARIMA (0,1,1)(1,0,0) _s NOINT",
    "Log ARIMA (0,1,1) _s NOINT",
    "Log ARIMA (1,0,0)",
    "Log ARIMA (1,0,0) _s",
    "Log ARIMA (1,0,1) _s",
    "Log ARIMA (1,1,0)",
    "Log ARIMA (1,1,2)",
    "Log ARIMA (2,0,0)",
    "Log ARIMA (2,0,0)(1,0,0) _s",
    "Log (3,1,1)NOINT",
    "Log Linear Exponential",
    "Log Linear Trend AR1",
    "Log Linear Trend AR2",
    "Log Linear Trend AR3",
    "Random",
];

/// IDs 48–52, 60–64, 72–76 and 84–86 follow the log-mirror pattern of the
/// surrounding rows: the log block repeats unlogged rows 1–43 except the
/// undifferenced (1,0,1) and (2,0,1) models.
pub const TREND_NAMES: [&str; 86] = [
    "ARIMA (0,1,0)(0,0,1) _s",
    "ARIMA (0,1,0)(1,0,0) _s",
    "ARIMA (0,1,0)(1,0,0) _s NOINT",
    "ARIMA (0,1,0)(1,0,1) _s",
    "ARIMA (0,1,1)",
    "ARIMA (0,1,1)(1,0,0) _s NOINT",
    "ARIMA (0,1,1) NOINT",
    "ARIMA (0,1,2)",
    "ARIMA (0,1,2) NOINT",
    "ARIMA (0,2,1)",
    "ARIMA (0,2,1) NOINT",
    "ARIMA (1,0,1)",
    "ARIMA (1,1,0)",
    "ARIMA (1,1,0)(0,0,1) _s",
    "ARIMA (1,1,0)(1,0,0) _s",
    "ARIMA (1,1,0)(1,0,0) _s NOINT",
    "ARIMA (1,1,0)(1,0,1) _s",
    "ARIMA (1,1,0) NOINT",
    "ARIMA (1,1,1)",
    "ARIMA (1,1,1)(0,0,1) _s",
    "ARIMA (1,1,1) NOINT",
    "ARIMA (1,1,2)",
    "ARIMA (1,1,2)(0,0,1) _s",
    "ARIMA (1,1,2)(1,0,0) _s",
    "ARIMA (1,1,2) NOINT",
    "ARIMA (1,2,0)",
    "ARIMA (1,2,0) NOINT",
    "ARIMA (1,2,1)",
    "ARIMA (1,2,1) NOINT",
    "ARIMA (2,0,1)",
    "ARIMA (2,1,0)",
    "ARIMA (2,1,0)(1,0,0) _s",
    "ARIMA (2,1,0)(1,0,0) _s NOINT",
    "ARIMA (2,1,0) NOINT",
    "ARIMA (2,1,1)",
    "ARIMA (2,1,1) NOINT",
    "ARIMA (2,1,2)",
    "ARIMA (2,1,2) NOINT",
    "ARIMA (2,2,1)",
    "ARIMA (2,2,1) NOINT",
    "ARIMA (3,1,0)",
    "ARIMA (3,1,0)(0,0,1) _s",
    "ARIMA (3,1,0)(1,0,0) _s",
    "ARIMA (3,1,0) NOINT",
    "Holt",
    "Log ARIMA (0,1,0)(0,0,1) _s",
    "Log ARIMA (0,1,0)(1,0,0) _s",
    "Log ARIMA (0,1,0)(1,0,0) _s NOINT",
    "Log ARIMA (0,1,0)(1,0,1) _s",
    "Log ARIMA (0,1,1)",
    "Log ARIMA (0,1,1)(1,0,0) _s NOINT",
    "Log ARIMA (0,1,1) NOINT",
    "Log ARIMA (0,1,2)",
    "Log ARIMA (0,1,2) NOINT",
    "Log ARIMA (0,2,1)",
    "Log ARIMA (0,2,1) NOINT",
    "Log ARIMA (1,1,0)",
    "Log ARIMA (1,1,0)(0,0,1) _s",
    "Log ARIMA (1,1,0)(1,0,0) _s",
    "Log ARIMA (1,1,0)(1,0,0) _s NOINT",
    "Log ARIMA (1,1,0)(1,0,1) _s",
    "Log ARIMA (1,1,0) NOINT",
    "Log ARIMA (1,1,1)",
    "Log ARIMA (1,1,1)(0,0,1) _s",
    "Log ARIMA (1,1,1) NOINT",
    "Log ARIMA (1,1,2)",
    "Log ARIMA (1,1,2)(0,0,1) _s",
    "Log ARIMA (1,1,2)(1,0,0) _s",
    "Log ARIMA (1,1,2) NOINT",
    "Log ARIMA (1,2,0)",
    "Log ARIMA (1,2,0) NOINT",
    "Log ARIMA (1,2,1)",
    "Log ARIMA (1,2,1) NOINT",
    "Log ARIMA (2,1,0)",
    "Log ARIMA (2,1,0)(1,0,0) _s",
    "Log ARIMA (2,1,0)(1,0,0) _s NOINT",
    "Log ARIMA (2,1,0) NOINT",
    "Log ARIMA (2,1,1)",
    "Log ARIMA (2,1,1) NOINT",
    "Log ARIMA (2,1,2)",
    "Log ARIMA (2,1,2) NOINT",
    "Log ARIMA (2,2,1)",
    "Log ARIMA (2,2,1) NOINT",
    "Log ARIMA (3,1,0)",
    "Log ARIMA (3,1,0)(0,0,1) _s",
    "Log ARIMA (3,1,0)(1,0,0) _s",
];

pub const SEASONAL_NAMES: [&str; 33] = [
    "ARIMA(0,0,1)(0,1,1) _s",
    "ARIMA(0,0,2)(0,1,1) _s",
    "ARIMA(0,1,1)(0,1,1) _s",
    "ARIMA(0,1,1) _s",
    "ARIMA(0,1,2)(0,1,1) _s",
    "ARIMA(1,0,0)(0,1,1) _s",
    "ARIMA(1,0,1)(0,1,1) _s",
    "ARIMA(1,1,0)(0,1,1) _s",
    "ARIMA(1,1,1)(0,1,1) _s",
    "ARIMA(1,1,2)(0,1,1) _s",
    "ARIMA(2,0,0)(0,1,1) _s",
    "ARIMA(2,1,0)(0,1,1) _s",
    "ARIMA(2,1,1)(0,1,1) _s",
    "ARIMA(2,1,2)(0,1,1) _s",
    "ARIMA(3,0,0)(0,1,1) _s",
    "ARIMA(3,1,0)(0,1,1) _s",
    "Log ARIMA(0,0,1)(0,1,1) _s",
    "Log ARIMA(0,0,2)(0,1,1) _s",
    "Log ARIMA(0,1,1)(0,1,1) _s",
    "Log ARIMA(0,1,1) _s",
    "Log ARIMA(0,1,2)(0,1,1) _s",
    "Log ARIMA(1,0,0)(0,1,1) _s",
    "Log ARIMA(1,0,1)(0,1,1) _s",
    "Log ARIMA(1,1,0)(0,1,1) _s",
    "Log ARIMA(1,1,1)(0,1,1) _s",
    "Log ARIMA(1,1,2)(0,1,1) _s",
    "Log ARIMA(2,0,0)(0,1,1) _s",
    "Log ARIMA(2,1,0)(0,1,1) _s",
    "Log ARIMA(2,1,1)(0,1,1) _s",
    "Log ARIMA(2,1,2)(0,1,1) _s",
    "Log ARIMA(3,0,0)(0,1,1) _s",
    "Log ARIMA(3,1,0)(0,1,1) _s",
    "Holt Winter",
];

/// Three component pools, each ordered by `expert_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub trend: Vec<ModelSpec>,
    pub seasonal: Vec<ModelSpec>,
    pub irregular: Vec<ModelSpec>,
}

fn pool(role: Role, names: &[&str], period: usize) -> Result<Vec<ModelSpec>> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| ModelSpec::parse(i as u32 + 1, role, n, period))
        .collect()
}

impl Registry {
    /// The built-in pools with seasonal lags bound to `period`.
    pub fn builtin(period: usize) -> Registry {
        Registry {
            trend: pool(Role::Trend, &TREND_NAMES, period).expect("built-in trend names parse"),
            seasonal: pool(Role::Seasonal, &SEASONAL_NAMES, period).expect("built-in seasonal names parse"),
            irregular: pool(Role::Irregular, &IRREGULAR_NAMES, period).expect("built-in irregular names parse"),
        }
    }

    /// Builds pools from `(id, name)` lists, e.g. a reduced subset.
    pub fn from_names(
        period: usize,
        trend: &[(u32, &str)],
        seasonal: &[(u32, &str)],
        irregular: &[(u32, &str)],
    ) -> Result<Registry> {
        let build = |role, list: &[(u32, &str)]| -> Result<Vec<ModelSpec>> {
            list.iter()
                .map(|(id, n)| ModelSpec::parse(*id, role, n, period))
                .collect()
        };
        let reg = Registry {
            trend: build(Role::Trend, trend)?,
            seasonal: build(Role::Seasonal, seasonal)?,
            irregular: build(Role::Irregular, irregular)?,
        };
        reg.validate()?;
        Ok(reg)
    }

    /// Keeps only the listed ids of each built-in pool.
    pub fn subset(&self, trend: &[u32], seasonal: &[u32], irregular: &[u32]) -> Result<Registry> {
        let pick = |pool: &[ModelSpec], ids: &[u32]| -> Result<Vec<ModelSpec>> {
            let mut out: Vec<ModelSpec> = ids
                .iter()
                .map(|id| {
                    pool.iter()
                        .find(|m| m.expert_id == *id)
                        .cloned()
                        .ok_or_else(|| Error::invalid(format!("unknown expert id {id}")))
                })
                .collect::<Result<_>>()?;
            out.sort_by_key(|m| m.expert_id);
            Ok(out)
        };
        let reg = Registry {
            trend: pick(&self.trend, trend)?,
            seasonal: pick(&self.seasonal, seasonal)?,
            irregular: pick(&self.irregular, irregular)?,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn pool(&self, role: Role) -> &[ModelSpec] {
        match role {
            Role::Trend => &self.trend,
            Role::Seasonal => &self.seasonal,
            Role::Irregular => &self.irregular,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.trend.len(), self.seasonal.len(), self.irregular.len()]
    }

    pub fn triplet_count(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn component_rows(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// Longest minimum fit length over all pools.
    pub fn max_min_fit_length(&self) -> usize {
        Role::ALL
            .iter()
            .flat_map(|r| self.pool(*r))
            .map(ModelSpec::min_fit_length)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        for role in Role::ALL {
            let pool = self.pool(role);
            if pool.is_empty() {
                return Err(Error::invalid(format!("{role} pool is empty")));
            }
            let mut seen = BTreeSet::new();
            for m in pool {
                if m.component_role != role {
                    return Err(Error::invalid(format!(
                        "model {} listed in the {role} pool has role {}",
                        m.expert_id, m.component_role
                    )));
                }
                if !seen.insert(m.expert_id) {
                    return Err(Error::invalid(format!("duplicate {role} expert id {}", m.expert_id)));
                }
                m.validate()?;
            }
            if pool.windows(2).any(|w| w[0].expert_id > w[1].expert_id) {
                return Err(Error::invalid(format!("{role} pool is not ordered by expert id")));
            }
        }
        Ok(())
    }

    /// Flat JSON array of model records ordered by `(role, expert_id)`.
    pub fn to_json(&self) -> Result<String> {
        let all: Vec<&ModelSpec> = Role::ALL.iter().flat_map(|r| self.pool(*r)).collect();
        Ok(serde_json::to_string_pretty(&all)?)
    }

    pub fn from_json(text: &str) -> Result<Registry> {
        let mut all: Vec<ModelSpec> = serde_json::from_str(text)?;
        all.sort_by_key(|m| (m.component_role, m.expert_id));
        let take = |role| all.iter().filter(|m| m.component_role == role).cloned().collect::<Vec<_>>();
        let reg = Registry {
            trend: take(Role::Trend),
            seasonal: take(Role::Seasonal),
            irregular: take(Role::Irregular),
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Registry> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Registry::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    #[test]
    fn builtin_counts() {
        let r = Registry::builtin(12);
        assert_eq!(r.sizes(), [86, 33, 34]);
        assert_eq!(r.triplet_count(), 96_492);
        assert_eq!(r.component_rows(), 153);
        r.validate().unwrap();
    }

    #[test]
    fn builtin_rows_decode() {
        let r = Registry::builtin(12);
        let t45 = &r.trend[44];
        assert_eq!((t45.expert_id, t45.family), (45, Family::Holt));
        let s33 = &r.seasonal[32];
        assert_eq!(s33.family, Family::HoltWinters);
        assert_eq!(s33.seasonal_orders.s, 12);
        let i20 = &r.irregular[19];
        assert_eq!(i20.name, "Log ARIMA (0,1,1)(1,0,0)_s NOINT");
        assert!(i20.log_transform && !i20.intercept);
        assert_eq!(r.irregular[33].family, Family::RandomWalk);
        assert_eq!(r.trend[85].name, "Log ARIMA (3,1,0)(1,0,0)_s");
        // Non-seasonal models carry s = 0.
        assert_eq!(r.trend[4].seasonal_orders.s, 0);
    }

    #[test]
    fn names_round_trip() {
        let r = Registry::builtin(12);
        for m in r.trend.iter().chain(&r.seasonal).chain(&r.irregular) {
            let again = ModelSpec::parse(m.expert_id, m.component_role, &m.name, 12).unwrap();
            assert_eq!(&again, m);
        }
    }

    #[test]
    fn json_round_trip() {
        let r = Registry::builtin(4);
        let back = Registry::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn subset_and_duplicates() {
        let r = Registry::builtin(12);
        let s = r.subset(&[5, 1], &[33], &[34]).unwrap();
        assert_eq!(s.sizes(), [2, 1, 1]);
        assert_eq!(s.trend[0].expert_id, 1);
        assert!(r.subset(&[999], &[1], &[1]).is_err());
        assert!(r.subset(&[1, 1], &[1], &[1]).is_err());
    }
}
