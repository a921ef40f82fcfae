use serde::{Deserialize, Serialize};

use super::metrics::{eval_split, evaluate, RankingMetrics};
use crate::data::{Direction, EntityFeatures, FeatureSchema, InteractionDataset};
use crate::error::{Error, Result};
use crate::model::{ArchitectureConfig, DeepHybridModel};
use crate::train::{fit, TrainConfig, TrainHistory};

/// Leave-one-out protocol parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub k: usize,
    pub negatives: usize,
    pub eval_seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            k: 10,
            negatives: 99,
            eval_seed: 0,
        }
    }
}

pub struct Outcome {
    pub model: DeepHybridModel,
    pub history: TrainHistory,
    pub metrics: RankingMetrics,
}

/// Holds out one interaction per query in `direction`, trains a fresh model
/// on the rest and evaluates it in the same direction.
pub fn train_and_evaluate(
    dataset: &InteractionDataset,
    schema: &FeatureSchema,
    features: &EntityFeatures,
    architecture: &ArchitectureConfig,
    train: &TrainConfig,
    direction: Direction,
    settings: EvalSettings,
) -> Result<Outcome> {
    let split = eval_split(dataset, direction, settings.negatives, settings.eval_seed)?;
    let mut model = DeepHybridModel::build(
        architecture.clone(),
        dataset.num_users(),
        dataset.num_items(),
        schema,
        train.seed,
    )?;
    let history = fit(&mut model, &split.train, features, train, None)?;
    let metrics = evaluate(&model, &split, features, settings.k)?;
    Ok(Outcome {
        model,
        history,
        metrics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: usize,
    pub direction: Direction,
    pub hr: f64,
    pub ndcg: f64,
}

pub const SWEEP_HEADER: &str = "factor,direction,hr,ndcg";

pub const DEFAULT_FACTORS: [usize; 4] = [4, 8, 16, 32];

/// One model per factor and direction. The factor sets the MF dimension and
/// the predictive dimension (and with it the default tower); other widths
/// stay as in `base`.
pub fn factor_sweep(
    dataset: &InteractionDataset,
    schema: &FeatureSchema,
    features: &EntityFeatures,
    factors: &[usize],
    directions: &[Direction],
    base: &ArchitectureConfig,
    train: &TrainConfig,
    settings: EvalSettings,
) -> Result<Vec<SweepRow>> {
    if factors.is_empty() {
        return Err(Error::invalid("factor list is empty"));
    }
    if directions.is_empty() {
        return Err(Error::invalid("direction list is empty"));
    }
    let mut rows = Vec::with_capacity(factors.len() * directions.len());
    for &factor in factors {
        let arch = base.clone().with_factor(factor);
        for &direction in directions {
            let out = train_and_evaluate(dataset, schema, features, &arch, train, direction, settings)?;
            log::info!(
                "factor {factor} {direction}: hr {:.4} ndcg {:.4}",
                out.metrics.hr,
                out.metrics.ndcg
            );
            rows.push(SweepRow {
                factor,
                direction,
                hr: out.metrics.hr,
                ndcg: out.metrics.ndcg,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:.6},{:.6}\n", r.factor, r.direction, r.hr, r.ndcg));
    }
    out
}
