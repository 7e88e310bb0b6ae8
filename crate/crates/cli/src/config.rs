use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use cmm_core::combine::{Source, Statistic};
use cmm_core::experts::RefitPolicy;
use cmm_core::models::Registry;
use cmm_core::pipeline::CmmConfig;
use cmm_core::similarity::SfdConfig;
use serde::Serialize;
use serde_json::{Map, Value};

/// Fully resolved configuration of one invocation, as recorded in `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub pipeline: CmmConfig,
    pub sfd: SfdConfig,
    pub seed: u64,
    pub period: usize,
    /// Registry JSON; `None` means the built-in pools.
    pub registry: Option<PathBuf>,
    /// Series whose consistent sets a group would transfer.
    pub representative: Option<String>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: CmmConfig::default(),
            sfd: SfdConfig::default(),
            seed: 0,
            period: 12,
            registry: None,
            representative: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parses a config file. Keys other than the CLI-level ones are handed to
    /// the pipeline config, which rejects unknown fields.
    pub fn from_json(text: &str) -> anyhow::Result<RunConfig> {
        let mut map: Map<String, Value> = serde_json::from_str(text).context("config is not a JSON object")?;
        let mut cfg = RunConfig::default();
        if let Some(v) = map.remove("sfd") {
            cfg.sfd = serde_json::from_value(v).context("config field `sfd`")?;
        }
        if let Some(v) = map.remove("seed") {
            cfg.seed = serde_json::from_value(v).context("config field `seed`")?;
        }
        if let Some(v) = map.remove("period") {
            cfg.period = serde_json::from_value(v).context("config field `period`")?;
        }
        if let Some(v) = map.remove("registry") {
            cfg.registry = serde_json::from_value(v).context("config field `registry`")?;
        }
        if let Some(v) = map.remove("representative") {
            cfg.representative = serde_json::from_value(v).context("config field `representative`")?;
        }
        if let Some(v) = map.remove("out") {
            cfg.out = serde_json::from_value(v).context("config field `out`")?;
        }
        cfg.pipeline = serde_json::from_value(Value::Object(map)).context("pipeline config")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        RunConfig::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.pipeline.validate()?;
        self.sfd.validate()?;
        if self.period == 0 {
            bail!("period must be at least 1");
        }
        Ok(())
    }

    pub fn registry(&self) -> anyhow::Result<Registry> {
        match &self.registry {
            Some(path) => Ok(Registry::load(path)?),
            None => Ok(Registry::builtin(self.period)),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatisticArg {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceArg {
    ConsistentGood,
    Filtered,
    All,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence over its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Maximum worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Observations per seasonal cycle
    #[arg(long, global = true)]
    pub period: Option<usize>,
    /// Model registry JSON (default: built-in pools)
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub k_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub minsup_ratio: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub statistic: Option<StatisticArg>,
    /// Which models are combined
    #[arg(long, global = true, value_enum)]
    pub combine_source: Option<SourceArg>,
    /// Evaluation window length
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Refit component models every N points inside a window
    #[arg(long, global = true)]
    pub refit_every: Option<usize>,
    /// First scored training point
    #[arg(long, global = true)]
    pub warmup: Option<usize>,
    /// Forecast the evaluation window as a single multi-step path
    #[arg(long, global = true)]
    pub multi_step: bool,
    #[arg(long, global = true)]
    pub flat_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub pct_diff_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub similarity_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub representative: Option<String>,
}

impl Overrides {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.pipeline;
        if let Some(v) = self.train_fraction {
            p.train_fraction = v;
        }
        if let Some(v) = self.k_ratio {
            p.k_ratio = v;
        }
        if let Some(v) = self.minsup_ratio {
            p.minsup_ratio = v;
        }
        if let Some(v) = self.statistic {
            p.policy.statistic = match v {
                StatisticArg::Mean => Statistic::Mean,
                StatisticArg::Median => Statistic::Median,
            };
        }
        if let Some(v) = self.combine_source {
            p.policy.source = match v {
                SourceArg::ConsistentGood => Source::ConsistentGood,
                SourceArg::Filtered => Source::Filtered,
                SourceArg::All => Source::All,
            };
        }
        if let Some(v) = self.horizon {
            p.horizon = v;
        }
        if let Some(v) = self.refit_every {
            p.refit = RefitPolicy::Every(v);
        }
        if let Some(v) = self.warmup {
            p.warmup = Some(v);
        }
        if self.multi_step {
            p.multi_step = true;
        }
        if let Some(v) = self.flat_threshold {
            cfg.sfd.flat_threshold = v;
        }
        if let Some(v) = self.pct_diff_threshold {
            cfg.sfd.pct_diff_threshold = v;
        }
        if let Some(v) = self.similarity_ratio {
            cfg.sfd.similarity_ratio = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.period {
            cfg.period = v;
        }
        if let Some(v) = &self.registry {
            cfg.registry = Some(v.clone());
        }
        if let Some(v) = &self.representative {
            cfg.representative = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_config_round_trip() {
        let text = r#"{"k_ratio": 0.1, "horizon": 12, "seed": 9, "sfd": {"similarity_ratio": 0.5},
                       "policy": {"statistic": "MEDIAN", "source": "FILTERED"}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.pipeline.k_ratio, 0.1);
        assert_eq!(cfg.pipeline.horizon, 12);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sfd.similarity_ratio, 0.5);
        assert_eq!(cfg.sfd.flat_threshold, 1.0);
        assert_eq!(cfg.pipeline.policy.statistic, Statistic::Median);

        // The recorded form parses back to the same config.
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&cfg).unwrap());
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(RunConfig::from_json(r#"{"k_ratoi": 0.1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sfd": {"flat": 1}}"#).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"horizon": 12, "minsup_ratio": 0.5}"#).unwrap();
        let o = Overrides {
            config: Some(path),
            horizon: Some(6),
            ..Default::default()
        };
        let cfg = o.resolve().unwrap();
        assert_eq!(cfg.pipeline.horizon, 6);
        assert_eq!(cfg.pipeline.minsup_ratio, 0.5);
    }

    #[test]
    fn invariants_checked_after_overrides() {
        let o = Overrides {
            k_ratio: Some(1.5),
            ..Default::default()
        };
        assert!(o.resolve().is_err());
    }
}
