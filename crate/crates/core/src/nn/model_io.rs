//! Model persistence: a JSON envelope next to a flat parameter file.
//!
//! The parameter file is every tensor's values as little-endian `f32`,
//! concatenated in the order listed in the envelope (offsets and lengths
//! count values, not bytes). Saving rounds parameters to `f32`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Init, LayerSpec, Network, NnError, Tensor};
use crate::features::{FeatureFamily, NormStats};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub format_version: u32,
    pub architecture: String,
    pub layers: Vec<LayerSpec>,
    pub input_shape: [usize; 3],
    pub feature_families: Vec<FeatureFamily>,
    pub normalization: NormStats,
    pub seed: u64,
    pub parameter_file: String,
    pub parameters: Vec<ParamEntry>,
}

/// A trained network plus everything needed to feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub architecture: String,
    pub network: Network,
    pub feature_families: Vec<FeatureFamily>,
    pub normalization: NormStats,
    pub seed: u64,
}

impl SavedModel {
    /// Envelope and parameter bytes; `parameter_file` is recorded verbatim.
    pub fn encode(&self, parameter_file: &str) -> (ModelEnvelope, Vec<u8>) {
        let mut entries = Vec::new();
        let mut bytes = Vec::with_capacity(self.network.parameter_count() * 4);
        let mut offset = 0;
        for (t, name) in self.network.params().iter().zip(self.network.param_names()) {
            entries.push(ParamEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                offset,
                len: t.len(),
            });
            offset += t.len();
            for &v in t.data() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let envelope = ModelEnvelope {
            format_version: MODEL_FORMAT_VERSION,
            architecture: self.architecture.clone(),
            layers: self.network.specs().to_vec(),
            input_shape: self.network.input_shape(),
            feature_families: self.feature_families.clone(),
            normalization: self.normalization.clone(),
            seed: self.seed,
            parameter_file: parameter_file.to_string(),
            parameters: entries,
        };
        (envelope, bytes)
    }

    /// Rebuilds a model, checking every listed tensor against the layer list.
    pub fn decode(envelope: &ModelEnvelope, bytes: &[u8]) -> Result<Self, String> {
        if envelope.format_version != MODEL_FORMAT_VERSION {
            return Err(format!("unsupported format version {}", envelope.format_version));
        }
        let mut network = Network::new(&envelope.layers, envelope.input_shape, envelope.seed, Init::ZeroOutput)
            .map_err(|e| e.to_string())?;
        if !bytes.len().is_multiple_of(4) {
            return Err(format!("parameter file length {} is not a multiple of 4", bytes.len()));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let expected = network.params();
        if envelope.parameters.len() != expected.len() {
            return Err(format!(
                "{} parameter tensors listed, architecture has {}",
                envelope.parameters.len(),
                expected.len()
            ));
        }
        let mut params = Vec::with_capacity(expected.len());
        for (entry, t) in envelope.parameters.iter().zip(expected) {
            if entry.shape != t.shape() || entry.len != t.len() {
                return Err(format!(
                    "tensor {} has shape {:?}, architecture needs {:?}",
                    entry.name,
                    entry.shape,
                    t.shape()
                ));
            }
            let slice = values
                .get(entry.offset..entry.offset + entry.len)
                .ok_or_else(|| format!("tensor {} runs past the parameter file", entry.name))?;
            params.push(Tensor::new(&entry.shape, slice.to_vec()).map_err(|e| e.to_string())?);
        }
        let total: usize = envelope.parameters.iter().map(|e| e.len).sum();
        if total != values.len() {
            return Err(format!("parameter file holds {} values, envelope lists {total}", values.len()));
        }
        network.set_params(params).map_err(|e| e.to_string())?;
        let pattern_len: usize = envelope.input_shape.iter().product();
        if envelope.normalization.mean.len() != pattern_len || envelope.normalization.std.len() != pattern_len {
            return Err(format!(
                "normalization covers {} entries, input has {pattern_len}",
                envelope.normalization.mean.len()
            ));
        }
        Ok(Self {
            architecture: envelope.architecture.clone(),
            network,
            feature_families: envelope.feature_families.clone(),
            normalization: envelope.normalization.clone(),
            seed: envelope.seed,
        })
    }
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("bin")
}

fn model_err(path: &Path, message: impl ToString) -> NnError {
    NnError::Model {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Writes `path` (JSON) and a sibling `.bin` parameter file.
pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), NnError> {
    let bin = sidecar(path);
    let file_name = bin
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| model_err(path, "path has no usable file name"))?;
    let (envelope, bytes) = model.encode(file_name);
    let json = serde_json::to_vec_pretty(&envelope).map_err(|e| model_err(path, e))?;
    fs::write(&bin, bytes).map_err(|e| model_err(&bin, e))?;
    fs::write(path, json).map_err(|e| model_err(path, e))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, NnError> {
    let json = fs::read(path).map_err(|e| model_err(path, e))?;
    let envelope: ModelEnvelope = serde_json::from_slice(&json).map_err(|e| model_err(path, e))?;
    let bin = path.with_file_name(&envelope.parameter_file);
    let bytes = fs::read(&bin).map_err(|e| model_err(&bin, e))?;
    SavedModel::decode(&envelope, &bytes).map_err(|m| model_err(path, m))
}
