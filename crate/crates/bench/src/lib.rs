//! Shared fixtures for the benchmarks.

use deephybrid::data::{generate_synthetic, SynthConfig, SynthMode};
use deephybrid::eval::eval_split;
use deephybrid::{Architecture, ArchitectureConfig, DeepHybridModel, Direction, EntityFeatures, LooSplit};

pub struct Fixture {
    pub split: LooSplit,
    pub features: EntityFeatures,
    pub model: DeepHybridModel,
}

/// Mixed-mode synthetic data with an untrained model of `architecture`.
pub fn fixture(users: usize, items: usize, per_user: usize, architecture: Architecture) -> Fixture {
    let data = generate_synthetic(&SynthConfig {
        num_users: users,
        num_items: items,
        interactions_per_user: per_user,
        mode: SynthMode::Mixed,
        seed: 7,
    })
    .expect("synthetic data");
    let (schema, features) = data.encoded().expect("features");
    let split = eval_split(&data.dataset, Direction::Item, 99, 7).expect("split");
    let model = DeepHybridModel::build(
        ArchitectureConfig::new(architecture),
        data.dataset.num_users(),
        data.dataset.num_items(),
        &schema,
        7,
    )
    .expect("model");
    Fixture {
        split,
        features,
        model,
    }
}
