use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, Side};
use crate::error::{Error, Result};
use crate::kernel::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Gmf,
    Dnn,
    NeuMf,
    DeepHybrid,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::Gmf,
        Architecture::Dnn,
        Architecture::NeuMf,
        Architecture::DeepHybrid,
    ];

    /// `(mf_branch, dnn_branch, use_aux_features)`.
    pub fn toggles(self) -> (bool, bool, bool) {
        match self {
            Architecture::Gmf => (true, false, false),
            Architecture::Dnn => (false, true, true),
            Architecture::NeuMf => (true, true, false),
            Architecture::DeepHybrid => (true, true, true),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Gmf => "gmf",
            Architecture::Dnn => "dnn",
            Architecture::NeuMf => "neumf",
            Architecture::DeepHybrid => "deephybrid",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown architecture {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub mf_branch: bool,
    pub dnn_branch: bool,
    pub use_aux_features: bool,
    /// Latent dimension K of the MF branch.
    pub mf_dim: usize,
    /// ID embedding width of the DNN branch, per side.
    pub dnn_id_dim: usize,
    pub cat_embed_dim: usize,
    /// Widths of the dense stack; the last one is `predictive_dim`.
    pub hidden_layers: Vec<usize>,
    pub predictive_dim: usize,
    pub hidden_activation: Activation,
    pub init_stddev: f64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig::new(Architecture::DeepHybrid)
    }
}

impl ArchitectureConfig {
    pub fn new(arch: Architecture) -> Self {
        let (mf_branch, dnn_branch, use_aux_features) = arch.toggles();
        ArchitectureConfig {
            mf_branch,
            dnn_branch,
            use_aux_features,
            mf_dim: 16,
            dnn_id_dim: 32,
            cat_embed_dim: 1,
            hidden_layers: Self::default_hidden(16),
            predictive_dim: 16,
            hidden_activation: Activation::Relu,
            init_stddev: 0.01,
        }
    }

    /// Halving pyramid ending at `predictive_dim`: `[4p, 2p, p]`.
    pub fn default_hidden(predictive_dim: usize) -> Vec<usize> {
        vec![4 * predictive_dim, 2 * predictive_dim, predictive_dim]
    }

    /// Sets the latent factor: MF dimension and DNN predictive dimension,
    /// rebuilding the default layer pyramid.
    pub fn with_factor(mut self, factor: usize) -> Self {
        self.mf_dim = factor;
        self.predictive_dim = factor;
        self.hidden_layers = Self::default_hidden(factor);
        self
    }

    pub fn architecture(&self) -> Option<Architecture> {
        let t = (self.mf_branch, self.dnn_branch, self.use_aux_features);
        Architecture::ALL.into_iter().find(|a| a.toggles() == t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mf_branch && !self.dnn_branch {
            return Err(Error::Config("at least one of mf_branch and dnn_branch must be enabled".into()));
        }
        if self.use_aux_features && !self.dnn_branch {
            return Err(Error::Config("use_aux_features requires dnn_branch".into()));
        }
        if self.mf_branch && self.mf_dim == 0 {
            return Err(Error::Config("mf_dim must be positive".into()));
        }
        if self.dnn_branch {
            if self.dnn_id_dim == 0 || self.cat_embed_dim == 0 || self.predictive_dim == 0 {
                return Err(Error::Config(
                    "dnn_id_dim, cat_embed_dim and predictive_dim must be positive".into(),
                ));
            }
            match self.hidden_layers.last() {
                None => return Err(Error::Config("hidden_layers must be non-empty with dnn_branch".into())),
                Some(&w) if w != self.predictive_dim => {
                    return Err(Error::Config(format!(
                        "last hidden layer width {w} must equal predictive_dim {}",
                        self.predictive_dim
                    )))
                }
                _ => {}
            }
            if self.hidden_layers.contains(&0) {
                return Err(Error::Config("hidden layer widths must be positive".into()));
            }
        }
        if !(self.init_stddev > 0.0) {
            return Err(Error::Config("init_stddev must be positive".into()));
        }
        Ok(())
    }

    /// Length of the fusion weight vector `h`.
    pub fn fusion_dim(&self) -> usize {
        (if self.mf_branch { self.mf_dim } else { 0 }) + (if self.dnn_branch { self.predictive_dim } else { 0 })
    }
}

/// Auxiliary inputs the model was built for.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    /// Embedding-table rows (vocabulary + OOV) per user categorical field.
    pub user_categorical: Vec<usize>,
    pub user_continuous: usize,
    pub item_categorical: Vec<usize>,
    pub item_continuous: usize,
}

impl FeatureLayout {
    pub fn from_schema(schema: &FeatureSchema) -> Self {
        FeatureLayout {
            user_categorical: schema.categorical_sizes(Side::User),
            user_continuous: schema.continuous_count(Side::User),
            item_categorical: schema.categorical_sizes(Side::Item),
            item_continuous: schema.continuous_count(Side::Item),
        }
    }

    pub fn categorical(&self, side: Side) -> &[usize] {
        match side {
            Side::User => &self.user_categorical,
            Side::Item => &self.item_categorical,
        }
    }

    pub fn continuous(&self, side: Side) -> usize {
        match side {
            Side::User => self.user_continuous,
            Side::Item => self.item_continuous,
        }
    }

    pub fn transpose(&self) -> Self {
        FeatureLayout {
            user_categorical: self.item_categorical.clone(),
            user_continuous: self.item_continuous,
            item_categorical: self.user_categorical.clone(),
            item_continuous: self.user_continuous,
        }
    }
}
