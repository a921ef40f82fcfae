use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::loss::{bce_grad_logit, bce_loss};
use crate::data::{sample_training_instances, EntityFeatures, InteractionDataset, TrainingInstance};
use crate::error::{Error, Result};
use crate::kernel::{AdamConfig, AdamState, GroupUpdate};
use crate::model::{DeepHybridModel, Params};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub clamp_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 200,
            learning_rate: 0.001,
            negatives_per_positive: 3,
            seed: 0,
            clamp_epsilon: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be a non-negative number"));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(Error::invalid("clamp_epsilon must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub instances: usize,
    pub skipped_negatives: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }
}

/// Mean BCE of `model` over `instances`.
pub fn batch_loss(
    model: &DeepHybridModel,
    instances: &[TrainingInstance],
    features: &EntityFeatures,
    clamp_epsilon: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for x in instances {
        let y_hat = model.predict(features.user(x.user), features.item(x.item))?;
        total += bce_loss(y_hat, x.label, clamp_epsilon)?;
    }
    Ok(total / instances.len().max(1) as f64)
}

/// Optimizer state carried across epochs; one Adam state spans every parameter group.
pub struct Trainer {
    config: TrainConfig,
    adam: AdamState,
    grads: Params,
}

impl Trainer {
    pub fn new(model: &DeepHybridModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(
            AdamConfig::with_learning_rate(config.learning_rate),
            &model.params().group_sizes(),
        )?;
        Ok(Trainer {
            grads: model.params().zeros_like(),
            config,
            adam,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.adam
    }

    /// Forward/backward over the batch, then one Adam step on the mean gradient.
    /// Returns the batch's mean loss before the step.
    pub fn train_batch(
        &mut self,
        model: &mut DeepHybridModel,
        batch: &[TrainingInstance],
        features: &EntityFeatures,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let eps = self.config.clamp_epsilon;
        let scale = 1.0 / batch.len() as f64;
        self.grads.fill_zero();
        let mut total = 0.0;
        for x in batch {
            let trace = model.forward(features.user(x.user), features.item(x.item))?;
            total += bce_loss(trace.prediction, x.label, eps)?;
            let dlogit = bce_grad_logit(trace.prediction, x.label, eps) * scale;
            model.accumulate_gradients(&trace, dlogit, &mut self.grads)?;
        }
        let mean = total * scale;
        if !mean.is_finite() {
            return Err(Error::numeric("batch loss", mean.to_string()));
        }
        let grad_groups = self.grads.groups();
        let mut updates: Vec<GroupUpdate<'_>> = model
            .params_mut()
            .groups_mut()
            .into_iter()
            .zip(&grad_groups)
            .map(|(p, g)| GroupUpdate {
                name: g.name.as_str(),
                params: p.values,
                grads: g.values,
            })
            .collect();
        self.adam.step(&mut updates)?;
        Ok(mean)
    }

    /// One pass over freshly sampled instances for `epoch`.
    pub fn train_epoch(
        &mut self,
        model: &mut DeepHybridModel,
        train: &InteractionDataset,
        features: &EntityFeatures,
        epoch: usize,
    ) -> Result<EpochRecord> {
        let start = Instant::now();
        let sampled = sample_training_instances(
            train,
            self.config.negatives_per_positive,
            self.config.seed,
            epoch as u64,
        );
        let mut total = 0.0;
        for (b, batch) in sampled.instances.chunks(self.config.batch_size).enumerate() {
            let mean = self.train_batch(model, batch, features).map_err(|e| match e {
                Error::Numeric { context, detail } => Error::Numeric {
                    context: format!("{context} (epoch {epoch}, batch {b})"),
                    detail,
                },
                other => other,
            })?;
            total += mean * batch.len() as f64;
        }
        let n = sampled.instances.len();
        Ok(EpochRecord {
            epoch,
            mean_loss: if n == 0 { 0.0 } else { total / n as f64 },
            instances: n,
            skipped_negatives: sampled.skipped_negatives,
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

pub type EpochCallback<'a> = dyn FnMut(&EpochRecord, &DeepHybridModel) -> Result<()> + 'a;

/// Trains for `config.epochs` epochs (indexed from 0), calling `on_epoch`
/// after each.
pub fn fit(
    model: &mut DeepHybridModel,
    train: &InteractionDataset,
    features: &EntityFeatures,
    config: &TrainConfig,
    mut on_epoch: Option<&mut EpochCallback<'_>>,
) -> Result<TrainHistory> {
    if train.num_users() != model.num_users() || train.num_items() != model.num_items() {
        return Err(Error::shape(format!(
            "model built for {}x{} but data has {}x{}",
            model.num_users(),
            model.num_items(),
            train.num_users(),
            train.num_items()
        )));
    }
    let mut trainer = Trainer::new(model, config.clone())?;
    let mut history = TrainHistory::default();
    for epoch in 0..config.epochs {
        let record = trainer.train_epoch(model, train, features, epoch)?;
        log::debug!(
            "epoch {epoch}: loss {:.6} over {} instances ({:.2}s)",
            record.mean_loss,
            record.instances,
            record.seconds
        );
        if let Some(cb) = on_epoch.as_mut() {
            cb(&record, model)?;
        }
        history.epochs.push(record);
    }
    Ok(history)
}
