//! Dual-branch graph network: a GCN over the homophilic graph, a
//! self-connection network over the condensed heterophilic graph, and a
//! linear head over both. Gradients are derived by hand.

mod checkpoint;
mod gradcheck;
mod metrics;
mod model;
mod sparse;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::graph::Split;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, ShapeEntry};
pub use gradcheck::{gradient_check, GradCheckReport, GradTarget};
pub use metrics::{
    class_separation, evaluate, oversmoothing_profile, predict, score_predictions, Metrics,
};
pub use model::{
    fuse_predict, heterophilic_forward, homophilic_forward, scatter_heterophilic,
    softmax_cross_entropy, HeterophilicInputs, HeterophilicParams, ModelInputs, ModelParams,
};
pub use sparse::SparseMatrix;
pub use train::{history_csv, train, EpochRecord, TrainOutcome};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no training nodes")]
    NoTrainNodes,
    #[error("{0:?} mask is empty")]
    EmptyMask(Split),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// Propagation operator of the homophilic branch, built from `A + I`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomophilicNorm {
    /// `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
    #[default]
    Symmetric,
    /// `A + I` unnormalized.
    Raw,
}

fn default_layers() -> usize {
    3
}

fn default_dropout() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_layers")]
    pub num_layers: usize,
    pub hidden_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub homophilic_norm: HomophilicNorm,
    /// Seeds weight initialization.
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(hidden_dim: usize) -> Self {
        Self {
            num_layers: default_layers(),
            hidden_dim,
            dropout_rate: default_dropout(),
            activation: Activation::Relu,
            homophilic_norm: HomophilicNorm::Symmetric,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.num_layers == 0 {
            return Err(NnError::Config("num_layers must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(NnError::Config("hidden_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Seeds dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            max_epochs: 1000,
            patience: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// `learning_rate = 0` is accepted; it freezes the parameters.
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config(format!(
                "learning_rate must be a finite nonnegative number, got {}",
                self.learning_rate
            )));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(NnError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(NnError::Config("eps must be positive".into()));
        }
        Ok(())
    }
}
