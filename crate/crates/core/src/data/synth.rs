//! Synthetic implicit-feedback datasets with a known generating process.
//!
//! Every user and item carries three categorical features (vocabularies of
//! 2, 5 and 10 values) and one continuous feature. Which of them drives the
//! interactions depends on the mode:
//!
//! - `Latent`: hidden 8-dimensional factors, affinity `sigmoid(g * <p_u, q_i> - b)`
//! - `Feature`: a fixed random compatibility table over (user value, item value)
//!   pairs of each field, affinity `sigmoid(g * compat - b)`
//! - `Mixed`: mean of the two affinities
//!
//! Each user draws `interactions_per_user` distinct items with probability
//! proportional to affinity (successive sampling without replacement).
//! Timestamps interleave users round by round.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{IdIndex, Interaction, InteractionDataset};
use super::features::{EntityFeatures, FeatureTable};
use super::schema::{fit_schema, FeatureSchema, FieldDecl, FieldKind, SchemaDeclaration};
use crate::error::{Error, Result};
use crate::kernel::{sigmoid, Matrix};
use crate::rng::{self, stream};

pub const LATENT_DIM: usize = 8;
pub const VOCAB_SIZES: [usize; 3] = [2, 5, 10];
const CATEGORICAL_FIELDS: [&str; 3] = ["cat_a", "cat_b", "cat_c"];
const CONTINUOUS_FIELD: &str = "score";
/// Quantile bins of the continuous feature used by the compatibility table.
const CONTINUOUS_BINS: usize = 4;
/// Affinity logit is `SHARPNESS * signal - OFFSET`, with `signal` of unit variance.
const SHARPNESS: f64 = 5.0;
const OFFSET: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Latent,
    Feature,
    Mixed,
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latent" => Ok(SynthMode::Latent),
            "feature" => Ok(SynthMode::Feature),
            "mixed" => Ok(SynthMode::Mixed),
            other => Err(Error::invalid(format!("unknown synthetic mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub interactions_per_user: usize,
    pub mode: SynthMode,
    pub seed: u64,
}

/// Entity attributes of one side.
#[derive(Clone, Debug, PartialEq)]
pub struct EntityAttributes {
    pub latent: Matrix,
    pub categorical: Vec<[usize; 3]>,
    /// Continuous feature before scaling to its raw range, in `[0, 1)`.
    pub continuous: Vec<f64>,
}

impl EntityAttributes {
    fn draw(n: usize, r: &mut rng::Rng) -> Self {
        let scale = 1.0 / (LATENT_DIM as f64).sqrt().sqrt();
        let latent_data = (0..n * LATENT_DIM)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, r))
            .collect::<Vec<f64>>();
        let categorical = (0..n)
            .map(|_| VOCAB_SIZES.map(|v| r.random_range(0..v)))
            .collect();
        let continuous = (0..n).map(|_| r.random::<f64>()).collect();
        EntityAttributes {
            latent: Matrix::from_vec(n, LATENT_DIM, latent_data).expect("sized"),
            categorical,
            continuous,
        }
    }

    fn continuous_bin(&self, idx: usize) -> usize {
        ((self.continuous[idx] * CONTINUOUS_BINS as f64) as usize).min(CONTINUOUS_BINS - 1)
    }
}

/// Ground truth behind a synthetic dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorld {
    pub mode: SynthMode,
    pub users: EntityAttributes,
    pub items: EntityAttributes,
    /// Per categorical field: `vocab x vocab` compatibility, N(0, 1) entries.
    pub compatibility: Vec<Matrix>,
    pub continuous_compatibility: Matrix,
}

impl SyntheticWorld {
    fn draw(cfg: &SynthConfig, r: &mut rng::Rng) -> Self {
        let users = EntityAttributes::draw(cfg.num_users, r);
        let items = EntityAttributes::draw(cfg.num_items, r);
        let std_normal = |rows, cols, r: &mut rng::Rng| {
            Matrix::gaussian(rows, cols, 1.0, r).expect("positive dims")
        };
        let compatibility = VOCAB_SIZES.iter().map(|&v| std_normal(v, v, r)).collect();
        let continuous_compatibility = std_normal(CONTINUOUS_BINS, CONTINUOUS_BINS, r);
        SyntheticWorld {
            mode: cfg.mode,
            users,
            items,
            compatibility,
            continuous_compatibility,
        }
    }

    /// Unit-variance compatibility score of the feature values of `user` and `item`.
    pub fn feature_signal(&self, user: usize, item: usize) -> f64 {
        let cu = &self.users.categorical[user];
        let ci = &self.items.categorical[item];
        let mut s: f64 = (0..3).map(|f| self.compatibility[f].get(cu[f], ci[f])).sum();
        s += self
            .continuous_compatibility
            .get(self.users.continuous_bin(user), self.items.continuous_bin(item));
        s / 2.0
    }

    pub fn latent_signal(&self, user: usize, item: usize) -> f64 {
        self.users
            .latent
            .row(user)
            .iter()
            .zip(self.items.latent.row(item))
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Relative interaction propensity of a pair under the world's mode.
    pub fn affinity(&self, user: usize, item: usize) -> f64 {
        let squash = |s: f64| sigmoid(SHARPNESS * s - OFFSET);
        match self.mode {
            SynthMode::Latent => squash(self.latent_signal(user, item)),
            SynthMode::Feature => squash(self.feature_signal(user, item)),
            SynthMode::Mixed => {
                0.5 * (squash(self.latent_signal(user, item)) + squash(self.feature_signal(user, item)))
            }
        }
    }
}

pub struct SyntheticData {
    pub dataset: InteractionDataset,
    pub user_features_csv: String,
    pub item_features_csv: String,
    pub declaration: SchemaDeclaration,
    pub world: SyntheticWorld,
}

impl SyntheticData {
    pub fn schema_json(&self) -> String {
        serde_json::to_string_pretty(&self.declaration).expect("declaration serializes")
    }

    pub fn user_table(&self) -> FeatureTable {
        FeatureTable::from_csv_reader(self.user_features_csv.as_bytes(), "user_id").expect("generated csv")
    }

    pub fn item_table(&self) -> FeatureTable {
        FeatureTable::from_csv_reader(self.item_features_csv.as_bytes(), "item_id").expect("generated csv")
    }

    /// Fitted schema and encoded features of all entities.
    pub fn encoded(&self) -> Result<(FeatureSchema, EntityFeatures)> {
        let (ut, it) = (self.user_table(), self.item_table());
        let schema = fit_schema(&self.declaration, Some(&ut), Some(&it))?;
        let features = EntityFeatures::build(&schema, &self.dataset, Some(&ut), Some(&it))?;
        Ok((schema, features))
    }
}

fn declaration() -> SchemaDeclaration {
    let fields = || {
        CATEGORICAL_FIELDS
            .iter()
            .map(|n| FieldDecl {
                name: n.to_string(),
                kind: FieldKind::Categorical,
            })
            .chain(std::iter::once(FieldDecl {
                name: CONTINUOUS_FIELD.to_string(),
                kind: FieldKind::Continuous,
            }))
            .collect()
    };
    SchemaDeclaration {
        user_fields: fields(),
        item_fields: fields(),
    }
}

fn features_csv(id_column: &str, ids: &IdIndex, attrs: &EntityAttributes, lo: f64, hi: f64) -> String {
    let mut out = format!("{id_column},{},{CONTINUOUS_FIELD}\n", CATEGORICAL_FIELDS.join(","));
    for (idx, id) in ids.ids().iter().enumerate() {
        let [a, b, c] = attrs.categorical[idx];
        let raw = lo + (hi - lo) * attrs.continuous[idx];
        writeln!(out, "{id},a{a},b{b},c{c},{raw:.3}").expect("string write");
    }
    out
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    if cfg.num_users == 0 || cfg.num_items == 0 || cfg.interactions_per_user == 0 {
        return Err(Error::invalid("synthetic dataset counts must be at least 1"));
    }
    if cfg.interactions_per_user > cfg.num_items {
        return Err(Error::invalid(format!(
            "{} interactions per user exceed the {} available items",
            cfg.interactions_per_user, cfg.num_items
        )));
    }
    let base = rng::derive_seed(cfg.seed, stream::DATA);
    let world = SyntheticWorld::draw(cfg, &mut rng::child(base, 0));
    let mut draw_rng = rng::child(base, 1);

    let n = cfg.interactions_per_user;
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(cfg.num_items);
    let mut interactions = Vec::with_capacity(cfg.num_users * n);
    for user in 0..cfg.num_users {
        // Exponential-race keys: descending order of ln(u)/w is a weighted
        // draw without replacement.
        keyed.clear();
        for item in 0..cfg.num_items {
            let u: f64 = 1.0 - draw_rng.random::<f64>();
            keyed.push((u.ln() / world.affinity(user, item), item));
        }
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (round, &(_, item)) in keyed.iter().take(n).enumerate() {
            let timestamp = (round * cfg.num_users + user) as i64;
            interactions.push(Interaction {
                user,
                item,
                timestamp,
                order: timestamp as usize,
            });
        }
    }
    interactions.sort_by_key(|x| x.order);

    let users = IdIndex::sequential("u", cfg.num_users);
    let items = IdIndex::sequential("i", cfg.num_items);
    let user_features_csv = features_csv("user_id", &users, &world.users, 18.0, 65.0);
    let item_features_csv = features_csv("item_id", &items, &world.items, 0.0, 100.0);
    let dataset = InteractionDataset::new(users, items, interactions)?;
    Ok(SyntheticData {
        dataset,
        user_features_csv,
        item_features_csv,
        declaration: declaration(),
        world,
    })
}
