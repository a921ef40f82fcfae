//! Interaction data, auxiliary features, leave-one-out splits and negative sampling.

mod dataset;
mod features;
mod sampling;
mod schema;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

pub use dataset::{IdIndex, Interaction, InteractionDataset};
pub use features::{encode_entity, normalize_continuous, EntityFeatures, FeatureTable, FeatureVector};
pub use sampling::{sample_training_instances, SampledEpoch, TrainingInstance};
pub use schema::{fit_schema, FeatureSchema, FieldDecl, FieldEncoder, FieldKind, FittedField, SchemaDeclaration};
pub use split::{leave_one_out_split, LooSplit, TestCase};
pub use synth::{generate_synthetic, SynthConfig, SynthMode, SyntheticData, SyntheticWorld};

/// Which entity type a feature or index belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::User => Side::Item,
            Side::Item => Side::User,
        }
    }
}

/// Recommendation direction. `Item` ranks items for a user (query axis =
/// users); `User` ranks users for an item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Item,
    User,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Item, Direction::User];

    pub fn query_side(self) -> Side {
        match self {
            Direction::Item => Side::User,
            Direction::User => Side::Item,
        }
    }

    pub fn candidate_side(self) -> Side {
        self.query_side().other()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Item => "item",
            Direction::User => "user",
        }
    }

    pub fn transposed(self) -> Direction {
        match self {
            Direction::Item => Direction::User,
            Direction::User => Direction::Item,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "item" | "item_recommendation" => Ok(Direction::Item),
            "user" | "user_recommendation" => Ok(Direction::User),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown direction {other:?} (expected item or user)"
            ))),
        }
    }
}
