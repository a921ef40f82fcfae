use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use deephybrid::data::SynthMode;
use deephybrid::{Architecture, Direction};

use crate::config::{Directions, Holdout, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "deephybrid", version, about = "Hybrid implicit-feedback recommender")]
pub struct Cli {
    /// Log filter, e.g. `info` or `deephybrid=debug`.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset (interactions, features, schema).
    GenSynth(GenSynthArgs),
    /// Fit a model and save a `.dhm` checkpoint.
    Train(TrainArgs),
    /// Leave-one-out HR@k / NDCG@k of saved checkpoints.
    Eval(EvalArgs),
    /// Train and evaluate one model per latent factor.
    Sweep(SweepArgs),
    /// Top-n candidates for one user or item.
    Recommend(RecommendArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 500)]
    pub users: usize,
    #[arg(long, default_value_t = 300)]
    pub items: usize,
    #[arg(long, default_value_t = 20)]
    pub per_user: usize,
    #[arg(long, default_value = "latent")]
    pub mode: SynthMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON file with run-config keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Base seed; init, sampling and evaluation streams derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct DataArgs {
    /// CSV with `user_id,item_id[,timestamp]`.
    #[arg(long)]
    pub interactions: Option<PathBuf>,
    #[arg(long)]
    pub user_features: Option<PathBuf>,
    #[arg(long)]
    pub item_features: Option<PathBuf>,
    /// Schema declaration naming the feature columns.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub arch: Option<Architecture>,
    #[arg(long)]
    pub mf_dim: Option<usize>,
    #[arg(long)]
    pub dnn_id_dim: Option<usize>,
    #[arg(long)]
    pub cat_embed_dim: Option<usize>,
    #[arg(long)]
    pub predictive_dim: Option<usize>,
    /// Comma-separated widths; the last must equal the predictive dimension.
    #[arg(long, value_delimiter = ',')]
    pub hidden_layers: Option<Vec<usize>>,
    #[arg(long)]
    pub init_stddev: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct FitArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    /// Sampled negatives per positive during training.
    #[arg(long)]
    pub negatives: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Withhold each query's latest interaction in this direction (`none` trains on everything).
    #[arg(long)]
    pub holdout: Option<Holdout>,
    #[arg(long)]
    pub eval_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoints; each direction uses the one trained with the matching holdout.
    #[arg(long = "model", required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub direction: Option<Directions>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Sampled negatives per test query.
    #[arg(long, visible_alias = "eval-negatives")]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub eval_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<usize>>,
    #[arg(long)]
    pub direction: Option<Directions>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eval_negatives: Option<usize>,
    #[arg(long)]
    pub eval_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct RecommendArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// External id of the query (a user for `item`, an item for `user`).
    #[arg(long)]
    pub query_id: String,
    #[arg(long, default_value = "item")]
    pub direction: Direction,
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum accepted relative error.
    #[arg(long, default_value_t = deephybrid::gradcheck::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Perturb the analytic gradient of this parameter group (self-test).
    #[arg(long, hide = true)]
    pub corrupt_group: Option<String>,
}

fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

impl CommonArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.out_dir, &self.out_dir);
        set(&mut c.seed, &self.seed);
    }
}

impl DataArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        for (slot, flag) in [
            (&mut c.interactions, &self.interactions),
            (&mut c.user_features, &self.user_features),
            (&mut c.item_features, &self.item_features),
            (&mut c.schema, &self.schema),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
    }
}

impl ModelArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.arch, &self.arch);
        set(&mut c.mf_dim, &self.mf_dim);
        set(&mut c.dnn_id_dim, &self.dnn_id_dim);
        set(&mut c.cat_embed_dim, &self.cat_embed_dim);
        set(&mut c.predictive_dim, &self.predictive_dim);
        set(&mut c.init_stddev, &self.init_stddev);
        if self.hidden_layers.is_some() {
            c.hidden_layers.clone_from(&self.hidden_layers);
        }
    }
}

impl FitArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.epochs, &self.epochs);
        set(&mut c.batch_size, &self.batch_size);
        set(&mut c.learning_rate, &self.learning_rate);
        set(&mut c.negatives, &self.negatives);
    }
}

/// `--config` file or defaults, before any other flag is applied.
pub fn base_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

impl TrainArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = base_config(&self.common)?;
        self.common.apply(&mut c);
        self.data.apply(&mut c);
        self.model.apply(&mut c);
        self.fit.apply(&mut c);
        set(&mut c.holdout, &self.holdout);
        if self.eval_seed.is_some() {
            c.eval_seed = self.eval_seed;
        }
        Ok(c)
    }
}

impl SweepArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = base_config(&self.common)?;
        self.common.apply(&mut c);
        self.data.apply(&mut c);
        self.model.apply(&mut c);
        self.fit.apply(&mut c);
        set(&mut c.factors, &self.factors);
        set(&mut c.direction, &self.direction);
        set(&mut c.k, &self.k);
        set(&mut c.eval_negatives, &self.eval_negatives);
        if self.eval_seed.is_some() {
            c.eval_seed = self.eval_seed;
        }
        Ok(c)
    }
}
