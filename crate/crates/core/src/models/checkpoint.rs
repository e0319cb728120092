use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::Standardizer;
use super::mlp::{HeadKind, TaskModel};
use super::selection::Selection;
use super::ModelError;
use crate::fsio::{f64s_to_le_bytes, le_bytes_to_f64s, write_atomic};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// `manifest.json` of a checkpoint directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub head: HeadKind,
    pub n_subs: usize,
    pub n_params: usize,
    /// Whether `standardizer.bin` (feature means then scales) is present.
    pub standardized: bool,
}

/// A trained network together with the selection it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: TaskModel,
    pub selection: Selection,
    pub standardizer: Option<Standardizer>,
}

/// Writes `params.bin`, `selection.bin`, optionally `standardizer.bin`, and
/// finally `manifest.json` into `dir`.
pub fn save_checkpoint(ckpt: &Checkpoint, dir: &Path) -> Result<CheckpointManifest, ModelError> {
    let model = &ckpt.model;
    if ckpt.selection.len() != model.n_subs() {
        return Err(ModelError::SelectionLength { features: model.n_subs(), weights: ckpt.selection.len() });
    }
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("params.bin"), &f64s_to_le_bytes(model.theta()))?;
    write_atomic(&dir.join("selection.bin"), &f64s_to_le_bytes(ckpt.selection.relaxed()))?;
    if let Some(st) = &ckpt.standardizer {
        let mut v = st.mean.clone();
        v.extend_from_slice(&st.scale);
        write_atomic(&dir.join("standardizer.bin"), &f64s_to_le_bytes(&v))?;
    }
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        layer_sizes: model.layer_sizes().to_vec(),
        head: model.head(),
        n_subs: model.n_subs(),
        n_params: model.n_params(),
        standardized: ckpt.standardizer.is_some(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| ModelError::Format(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

fn read_f64s(path: &Path, expected: usize) -> Result<Vec<f64>, ModelError> {
    let v = le_bytes_to_f64s(&fs::read(path)?)?;
    if v.len() != expected {
        return Err(ModelError::Format(format!(
            "{} holds {} values, expected {expected}",
            path.display(),
            v.len()
        )));
    }
    Ok(v)
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint, ModelError> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let m: CheckpointManifest = serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))?;
    if m.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(ModelError::Format(format!("unsupported checkpoint version {}", m.format_version)));
    }
    let mut model = TaskModel::from_parts(m.layer_sizes.clone(), m.head, m.n_subs, Vec::new())?;
    if model.n_params() != m.n_params {
        return Err(ModelError::Format(format!(
            "manifest lists {} parameters, layers imply {}",
            m.n_params,
            model.n_params()
        )));
    }
    model.set_theta(read_f64s(&dir.join("params.bin"), m.n_params)?)?;
    let selection = Selection::new(read_f64s(&dir.join("selection.bin"), m.n_subs)?)?;
    let standardizer = if m.standardized {
        let width = model.input_width();
        let v = read_f64s(&dir.join("standardizer.bin"), 2 * width)?;
        Some(Standardizer { mean: v[..width].to_vec(), scale: v[width..].to_vec() })
    } else {
        None
    };
    Ok(Checkpoint { model, selection, standardizer })
}
