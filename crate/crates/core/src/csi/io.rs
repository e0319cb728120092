use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channel::CsiMatrix;
use super::dataset::{CsiSample, Dataset, Featurization};
use super::{CsiError, SimScenario};
use crate::fsio::{f64s_to_le_bytes, le_bytes_to_f64s, write_atomic};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// `manifest.json` of a dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub featurization: Featurization,
    pub num_samples: usize,
    pub n_pairs: usize,
    pub subcarriers: usize,
    /// `[N, N_pair, M, 2]`, complex interleaved as (re, im).
    pub h_shape: [usize; 4],
    /// `[N]`, state index per sample.
    pub m_shape: [usize; 1],
    /// `[N, 2]`, position in metres.
    pub p_shape: [usize; 2],
    pub scenario: SimScenario,
}

impl DatasetManifest {
    pub fn for_dataset(ds: &Dataset) -> Self {
        let n = ds.len();
        let pairs = ds.scenario.n_pairs();
        let m = ds.scenario.subcarriers;
        Self {
            format_version: DATASET_FORMAT_VERSION,
            seed: ds.seed,
            featurization: ds.featurization,
            num_samples: n,
            n_pairs: pairs,
            subcarriers: m,
            h_shape: [n, pairs, m, 2],
            m_shape: [n],
            p_shape: [n, 2],
            scenario: ds.scenario.clone(),
        }
    }
}

/// Writes `manifest.json`, `h.bin`, `m.bin` and `p.bin` into `dir`
/// (created if missing). The manifest is written last.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<DatasetManifest, CsiError> {
    fs::create_dir_all(dir)?;
    let h: Vec<f64> = ds.samples.iter().flat_map(|s| s.h.data.iter().flat_map(|c| [c.re, c.im])).collect();
    let m: Vec<f64> = ds.samples.iter().map(|s| s.state as f64).collect();
    let p: Vec<f64> = ds.samples.iter().flat_map(|s| s.position).collect();
    write_atomic(&dir.join("h.bin"), &f64s_to_le_bytes(&h))?;
    write_atomic(&dir.join("m.bin"), &f64s_to_le_bytes(&m))?;
    write_atomic(&dir.join("p.bin"), &f64s_to_le_bytes(&p))?;
    let manifest = DatasetManifest::for_dataset(ds);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CsiError::Format(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, CsiError> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| CsiError::Format(e.to_string()))?;
    let version = raw.get("format_version").and_then(|v| v.as_u64());
    if version != Some(DATASET_FORMAT_VERSION as u64) {
        return Err(CsiError::UnsupportedVersion(format!("{:?}", raw.get("format_version"))));
    }
    serde_json::from_value(raw).map_err(|e| CsiError::Format(e.to_string()))
}

fn read_f64s(path: &Path, expected: usize) -> Result<Vec<f64>, CsiError> {
    let values = le_bytes_to_f64s(&fs::read(path)?)?;
    if values.len() != expected {
        return Err(CsiError::Format(format!(
            "{} holds {} values, manifest implies {}",
            path.display(),
            values.len(),
            expected
        )));
    }
    Ok(values)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, CsiError> {
    let manifest = read_manifest(dir)?;
    manifest.scenario.validate()?;
    let [n, pairs, m, _] = manifest.h_shape;
    if n != manifest.num_samples || pairs != manifest.scenario.n_pairs() || m != manifest.scenario.subcarriers {
        return Err(CsiError::Format("manifest shapes disagree with its scenario".into()));
    }
    let h = read_f64s(&dir.join("h.bin"), n * pairs * m * 2)?;
    let states = read_f64s(&dir.join("m.bin"), n)?;
    let pos = read_f64s(&dir.join("p.bin"), n * 2)?;
    let per = pairs * m;
    let samples = (0..n)
        .map(|i| {
            let data = h[i * per * 2..(i + 1) * per * 2]
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect();
            let state = states[i];
            if state < 0.0 || state.fract() != 0.0 || state as usize >= manifest.scenario.states.len() {
                return Err(CsiError::Format(format!("sample {i} has invalid state label {state}")));
            }
            Ok(CsiSample {
                h: CsiMatrix { pairs, subcarriers: m, data },
                state: state as usize,
                position: [pos[2 * i], pos[2 * i + 1]],
                slot: i,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { scenario: manifest.scenario, seed: manifest.seed, featurization: manifest.featurization, samples })
}
