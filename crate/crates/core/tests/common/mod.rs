#![allow(dead_code)]

use std::path::PathBuf;

use deephybrid::data::{fit_schema, FeatureTable, SchemaDeclaration};
use deephybrid::{EntityFeatures, FeatureSchema, InteractionDataset};

pub const FIXTURE_SEED: u64 = 42;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct Fixture {
    pub dataset: InteractionDataset,
    pub schema: FeatureSchema,
    pub features: EntityFeatures,
}

/// Loads a committed fixture the same way the CLI does.
pub fn load(name: &str) -> Fixture {
    let dir = fixture_dir(name);
    let dataset = InteractionDataset::load_interactions(dir.join("interactions.csv")).unwrap();
    let users = FeatureTable::load(dir.join("user_features.csv"), "user_id").unwrap();
    let items = FeatureTable::load(dir.join("item_features.csv"), "item_id").unwrap();
    let decl = SchemaDeclaration::load(dir.join("schema.json")).unwrap();
    let schema = fit_schema(&decl, Some(&users), Some(&items)).unwrap();
    let features = EntityFeatures::build(&schema, &dataset, Some(&users), Some(&items)).unwrap();
    Fixture {
        dataset,
        schema,
        features,
    }
}
