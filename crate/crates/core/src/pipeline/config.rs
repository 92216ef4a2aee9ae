use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ErrorKind, PipelineError, Stage};
use crate::climate::{PeriodSpec, DEFAULT_THRESHOLD_C};
use crate::disruption::{RankingMode, Scenario};
use crate::metrics::DEFAULT_COLLAPSE_THRESHOLD;
use crate::network::{ColumnMap, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkInputs {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(default)]
    pub columns: ColumnMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConfig {
    /// Number of independent random removal orders (R).
    pub trials: usize,
    /// Trial `i` uses seed `base_seed + i`.
    pub base_seed: u64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { trials: 50, base_seed: 1 }
    }
}

/// Exactly one of `profiles`, `series` or `grid_series` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClimateInputs {
    /// Precomputed hot-day profiles.
    pub profiles: Option<PathBuf>,
    /// Per-node daily series.
    pub series: Option<PathBuf>,
    /// Gridded daily series, mapped to nodes by nearest cell.
    pub grid_series: Option<PathBuf>,
    /// Models to use; empty means every model in the input.
    pub models: Vec<String>,
    pub baseline: PeriodSpec,
    pub futures: Vec<PeriodSpec>,
    /// Future period whose change drives the hot-day removal scenario.
    pub removal_period: PeriodSpec,
    pub threshold_c: f64,
}

impl Default for ClimateInputs {
    fn default() -> Self {
        ClimateInputs {
            profiles: None,
            series: None,
            grid_series: None,
            models: Vec::new(),
            baseline: PeriodSpec::BASELINE,
            futures: vec![PeriodSpec::NEAR_FUTURE, PeriodSpec::FAR_FUTURE],
            removal_period: PeriodSpec::FAR_FUTURE,
            threshold_c: DEFAULT_THRESHOLD_C,
        }
    }
}

/// Full pipeline configuration, read from one JSON document. Relative
/// paths are resolved against the directory holding the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkInputs,
    /// Modes to analyse; empty means every mode present in the nodes table.
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub random: RandomConfig,
    #[serde(default)]
    pub ranking: RankingMode,
    #[serde(default)]
    pub climate: Option<ClimateInputs>,
    #[serde(default = "default_collapse")]
    pub collapse_threshold: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Removal counts at which SCF and residual tonnage are tabulated.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Directory relative paths were resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn all_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}

fn default_collapse() -> f64 {
    DEFAULT_COLLAPSE_THRESHOLD
}

fn default_top_k() -> usize {
    10
}

fn default_checkpoints() -> Vec<usize> {
    vec![10, 20]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn config_error(message: impl Into<String>) -> PipelineError {
    PipelineError::new(Stage::Config, ErrorKind::Config, message)
}

impl RunConfig {
    pub fn new(nodes: impl Into<PathBuf>, edges: impl Into<PathBuf>) -> Self {
        RunConfig {
            network: NetworkInputs { nodes: nodes.into(), edges: edges.into(), columns: ColumnMap::default() },
            modes: Vec::new(),
            scenarios: all_scenarios(),
            random: RandomConfig::default(),
            ranking: RankingMode::default(),
            climate: None,
            collapse_threshold: default_collapse(),
            top_k: default_top_k(),
            checkpoints: default_checkpoints(),
            out: default_out(),
            base_dir: PathBuf::new(),
        }
    }

    /// Parses a JSON document. Errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(format!("field `{path}`: {}", e.into_inner()))
        })
    }

    /// Reads a config file and resolves its relative paths.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.base_dir = base.to_path_buf();
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.network.nodes);
        fix(&mut self.network.edges);
        fix(&mut self.out);
        if let Some(c) = &mut self.climate {
            for p in [&mut c.profiles, &mut c.series, &mut c.grid_series].into_iter().flatten() {
                fix(p);
            }
        }
    }

    /// Checks the invariants every run relies on.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let exists = |field: &str, p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(config_error(format!("field `{field}`: file {} does not exist", p.display())))
            }
        };
        exists("network.nodes", &self.network.nodes)?;
        exists("network.edges", &self.network.edges)?;
        if self.scenarios.is_empty() {
            return Err(config_error("field `scenarios`: at least one scenario is required"));
        }
        if self.random.trials == 0 {
            return Err(config_error("field `random.trials`: must be at least 1"));
        }
        if !(self.collapse_threshold > 0.0 && self.collapse_threshold < 1.0) {
            return Err(config_error(format!(
                "field `collapse_threshold`: {} is not strictly between 0 and 1",
                self.collapse_threshold
            )));
        }
        if self.top_k == 0 {
            return Err(config_error("field `top_k`: must be at least 1"));
        }
        match &self.climate {
            None if self.scenarios.contains(&Scenario::HotDays) => {
                return Err(config_error("field `climate`: required by the hot_days scenario"));
            }
            None => {}
            Some(c) => {
                let sources = [("climate.profiles", &c.profiles), ("climate.series", &c.series), ("climate.grid_series", &c.grid_series)];
                let set: Vec<_> = sources.iter().filter(|(_, p)| p.is_some()).collect();
                if set.len() != 1 {
                    return Err(config_error(
                        "field `climate`: set exactly one of `profiles`, `series` or `grid_series`",
                    ));
                }
                let (field, path) = set[0];
                exists(field, path.as_ref().unwrap())?;
                if !c.threshold_c.is_finite() {
                    return Err(config_error("field `climate.threshold_c`: must be finite"));
                }
                if !c.futures.contains(&c.removal_period) {
                    return Err(config_error(format!(
                        "field `climate.removal_period`: {} is not one of `climate.futures`",
                        c.removal_period
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the config's canonical JSON form. Input paths enter
    /// relative to the config directory and the output path not at all, so
    /// the digest does not depend on where a run is launched from.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canon = self.clone();
        let base = self.base_dir.clone();
        let rel = |p: &mut PathBuf| {
            if let Ok(r) = p.strip_prefix(&base) {
                *p = r.to_path_buf();
            }
        };
        rel(&mut canon.network.nodes);
        rel(&mut canon.network.edges);
        if let Some(c) = &mut canon.climate {
            for p in [&mut c.profiles, &mut c.series, &mut c.grid_series].into_iter().flatten() {
                rel(p);
            }
        }
        canon.out = PathBuf::new();
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
