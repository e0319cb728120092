//! Synthetic MIMO-OFDM channel state information.
//!
//! Each TX/RX pair sees a superposition of static paths (direct ray and wall
//! reflections, free-space amplitude `a0/d²`), target-scattered dynamic paths
//! (amplitude `b0·γ(s)/d²`, with `γ` set by the target's posture) and complex
//! Gaussian noise. Datasets sweep a target over a uniform grid of the room in
//! every posture.

mod channel;
mod dataset;
mod geometry;
mod io;
mod scenario;

pub use channel::{delay, dynamic_gain, static_gain, superpose, Channel, Components, CsiMatrix, PathTerm};
pub use dataset::{generate_dataset, CsiSample, Dataset, Featurization};
pub use geometry::{distance, path_geometry, Path, PathKind};
pub use io::{load_dataset, read_manifest, save_dataset, DatasetManifest, DATASET_FORMAT_VERSION};
pub use scenario::{SimScenario, TargetState, SPEED_OF_LIGHT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsiError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("dataset format: {0}")]
    Format(String),
    #[error("unsupported dataset format version {0}")]
    UnsupportedVersion(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
