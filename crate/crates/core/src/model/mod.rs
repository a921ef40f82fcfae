//! The unified hybrid architecture.
//!
//! | architecture | MF branch | DNN branch | auxiliary features |
//! |--------------|-----------|------------|--------------------|
//! | GMF          | yes       | no         | no                 |
//! | DNN          | no        | yes        | yes                |
//! | NeuMF        | yes       | yes        | no                 |
//! | DeepHybrid   | yes       | yes        | yes                |
//!
//! The MF branch is `p_u ⊙ q_i`; the DNN branch is a dense stack over the
//! concatenation `[id_u, cat_u, con_u, id_i, cat_i, con_i]`. Both branches use
//! their own ID embedding tables. The prediction is `sigmoid(h · [psi_mf, psi_dnn])`.

mod config;
mod network;
mod params;

pub use config::{Architecture, ArchitectureConfig, FeatureLayout};
pub use network::{DeepHybridModel, ForwardTrace};
pub use params::{ParamGroup, ParamGroupMut, Params};
