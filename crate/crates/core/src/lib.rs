//! Hybrid recommender for implicit feedback.
//!
//! A generalized matrix factorization branch and a feed-forward branch over
//! ID embeddings plus auxiliary user/item features are fused at a single
//! sigmoid output unit. Branch and feature toggles give four models from one
//! code path: GMF, DNN, NeuMF and DeepHybrid.
//!
//! The crate covers the whole pipeline:
//!
//! - [`kernel`]: dense layers, Adam, finite-difference gradient checking
//! - [`data`]: interaction/feature ingestion, leave-one-out splits, negative sampling,
//!   synthetic datasets
//! - [`model`]: the unified architecture with hand-derived gradients
//! - [`train`]: binary cross-entropy training loop and checkpoints
//! - [`eval`]: HR@k / NDCG@k under the sampled-negatives protocol, factor sweeps

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod kernel;
pub mod model;
pub mod rng;
pub mod train;

pub use data::{
    Direction, EntityFeatures, FeatureSchema, FeatureVector, InteractionDataset, LooSplit, Side,
};
pub use error::{Error, Result};
pub use eval::{evaluate, RankingMetrics, Scorer};
pub use model::{Architecture, ArchitectureConfig, DeepHybridModel};
pub use train::{fit, TrainConfig, TrainHistory};
