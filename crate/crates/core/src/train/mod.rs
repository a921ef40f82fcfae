//! Binary cross-entropy training with mini-batch Adam, and checkpoints.

mod checkpoint;
mod loss;
mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest, FORMAT_VERSION};
pub use loss::{bce_grad_logit, bce_loss};
pub use trainer::{fit, batch_loss, EpochRecord, TrainConfig, TrainHistory, Trainer};
