//! Localization and sensing networks behind a shared subcarrier-selection mask.
//!
//! Both networks are plain MLPs whose input is `features ⊙ expand(w̄)`. The
//! selection vector is an explicit graph parameter, so one backward pass gives
//! gradients for the network weights and for `w̄` together.

mod checkpoint;
mod data;
mod mlp;
mod selection;


pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest, CHECKPOINT_FORMAT_VERSION};
pub use data::{Batch, SensingMode, SensingTargets, Standardizer, TaskData};
pub use mlp::{localization_loss, sensing_loss, HeadKind, LossGrad, SelectionParam, TaskModel};
pub use selection::{apply_selection, round_selection, sigmoid_selection_params, Selection};

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("selection weight {index} = {value} lies outside [0, 1]")]
    SelectionRange { index: usize, value: f64 },
    #[error("{features} features cannot be grouped over {weights} selection weights")]
    SelectionLength { features: usize, weights: usize },
    #[error("architecture: {0}")]
    Architecture(String),
    #[error("{0}")]
    TargetKind(&'static str),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
