//! Resolved run configuration: flags override the `--config` file, which
//! overrides built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use deephybrid::{Architecture, ArchitectureConfig, Direction, TrainConfig};
use serde::{Deserialize, Serialize};

/// Direction selector for commands that can run both sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directions {
    Item,
    User,
    Both,
}

impl Directions {
    pub fn list(self) -> Vec<Direction> {
        match self {
            Directions::Item => vec![Direction::Item],
            Directions::User => vec![Direction::User],
            Directions::Both => Direction::BOTH.to_vec(),
        }
    }
}

impl FromStr for Directions {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "item" => Ok(Directions::Item),
            "user" => Ok(Directions::User),
            "both" => Ok(Directions::Both),
            _ => Err(format!("expected item, user or both, got {s:?}")),
        }
    }
}

/// Which interactions `train` withholds before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Holdout {
    Item,
    User,
    None,
}

impl Holdout {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Holdout::Item => Some(Direction::Item),
            Holdout::User => Some(Direction::User),
            Holdout::None => None,
        }
    }
}

impl FromStr for Holdout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "item" => Ok(Holdout::Item),
            "user" => Ok(Holdout::User),
            "none" => Ok(Holdout::None),
            _ => Err(format!("expected item, user or none, got {s:?}")),
        }
    }
}

impl fmt::Display for Holdout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Holdout::Item => "item",
            Holdout::User => "user",
            Holdout::None => "none",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub interactions: Option<PathBuf>,
    pub user_features: Option<PathBuf>,
    pub item_features: Option<PathBuf>,
    pub schema: Option<PathBuf>,

    pub arch: Architecture,
    pub mf_dim: usize,
    pub dnn_id_dim: usize,
    pub cat_embed_dim: usize,
    pub predictive_dim: usize,
    /// Derived from `predictive_dim` when absent.
    pub hidden_layers: Option<Vec<usize>>,
    pub init_stddev: f64,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    pub seed: u64,

    pub k: usize,
    pub eval_negatives: usize,
    pub repeats: usize,
    pub direction: Directions,
    /// Defaults to `seed`.
    pub eval_seed: Option<u64>,
    pub holdout: Holdout,
    pub factors: Vec<usize>,

    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let arch = ArchitectureConfig::new(Architecture::DeepHybrid);
        let train = TrainConfig::default();
        RunConfig {
            interactions: None,
            user_features: None,
            item_features: None,
            schema: None,
            arch: Architecture::DeepHybrid,
            mf_dim: arch.mf_dim,
            dnn_id_dim: arch.dnn_id_dim,
            cat_embed_dim: arch.cat_embed_dim,
            predictive_dim: arch.predictive_dim,
            hidden_layers: None,
            init_stddev: arch.init_stddev,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            negatives: train.negatives_per_positive,
            seed: train.seed,
            k: 10,
            eval_negatives: 99,
            repeats: 1,
            direction: Directions::Both,
            eval_seed: None,
            holdout: Holdout::Item,
            factors: deephybrid::eval::DEFAULT_FACTORS.to_vec(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn architecture(&self) -> ArchitectureConfig {
        let mut c = ArchitectureConfig::new(self.arch);
        c.mf_dim = self.mf_dim;
        c.dnn_id_dim = self.dnn_id_dim;
        c.cat_embed_dim = self.cat_embed_dim;
        c.predictive_dim = self.predictive_dim;
        c.hidden_layers = self
            .hidden_layers
            .clone()
            .unwrap_or_else(|| ArchitectureConfig::default_hidden(self.predictive_dim));
        c.init_stddev = self.init_stddev;
        c
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            negatives_per_positive: self.negatives,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    pub fn eval_seed(&self) -> u64 {
        self.eval_seed.unwrap_or(self.seed)
    }

    /// Makes every input path absolute so `run.json` stays usable from any
    /// working directory.
    pub fn absolutize(&mut self) -> Result<()> {
        for p in [
            &mut self.interactions,
            &mut self.user_features,
            &mut self.item_features,
            &mut self.schema,
        ]
        .into_iter()
        .flatten()
        {
            *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
        }
        Ok(())
    }
}

/// Contents of `run.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub command: String,
    pub config: T,
}

pub fn write_run_record<T: Serialize>(out_dir: &Path, command: &str, config: &T) -> Result<()> {
    let record = RunRecord {
        command: command.to_owned(),
        config,
    };
    let path = out_dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&record)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Resolved config of the run that produced the checkpoint at `model`.
pub fn run_config_beside(model: &Path) -> Result<Option<RunConfig>> {
    let path = model.parent().unwrap_or(Path::new(".")).join("run.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let record: RunRecord<RunConfig> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Some(record.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_library() {
        let c = RunConfig::default();
        assert_eq!(c.architecture(), ArchitectureConfig::new(Architecture::DeepHybrid));
        assert_eq!(c.train(), TrainConfig::default());
        assert_eq!((c.k, c.eval_negatives), (10, 99));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"epochs": 3, "arch": "gmf"}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.arch, Architecture::Gmf);
        assert_eq!(c.batch_size, 200);
        assert!(serde_json::from_str::<RunConfig>(r#"{"epoch": 3}"#).is_err());
    }

    #[test]
    fn predictive_dim_rebuilds_pyramid() {
        let c = RunConfig {
            predictive_dim: 8,
            ..RunConfig::default()
        };
        assert_eq!(c.architecture().hidden_layers, vec![32, 16, 8]);
    }
}
