//! Binary checkpoint: `SACC`, a `u32` format version, a `u64` header
//! length, the JSON header, then every parameter as little-endian `f64`
//! in header order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::attention::{ModelConfig, ModelParams};
use crate::encoder::Vocabulary;
use crate::model::SaccModel;
use crate::tensor::{ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"SACC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: [usize; 2],
    /// Position of the first value, counted in `f64`s.
    offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: BTreeMap<String, usize>,
    min_freq: usize,
    label_names: Vec<String>,
    params: Vec<ParamEntry>,
}

pub fn to_bytes(model: &SaccModel) -> Vec<u8> {
    let mut offset = 0;
    let params = model
        .store
        .iter()
        .map(|p| {
            let e = ParamEntry { name: p.name.clone(), shape: p.value().shape(), offset };
            offset += p.value().len();
            e
        })
        .collect();
    let header = Header {
        config: model.config.clone(),
        vocab: model.vocab.to_map(),
        min_freq: model.vocab.min_freq(),
        label_names: model.label_names.clone(),
        params,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + offset * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.store.iter() {
        for x in p.value().data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<SaccModel, TrainError> {
    let bad = |msg: &str| TrainError::BadCheckpoint(msg.to_string());
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing SACC magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(TrainError::BadCheckpoint(format!("unsupported format version {version}")));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body_start = 16usize.checked_add(header_len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[16..body_start])
        .map_err(|e| TrainError::BadCheckpoint(format!("header: {e}")))?;
    let body = &bytes[body_start..];

    let vocab = Vocabulary::from_map(&header.vocab, header.min_freq).ok_or_else(|| bad("vocabulary ids not contiguous"))?;
    header.config.validate().map_err(|e| TrainError::BadCheckpoint(e.to_string()))?;

    let mut reference = ParamStore::new();
    ModelParams::init(&mut reference, &header.config, vocab.len(), &mut ChaCha8Rng::seed_from_u64(0));
    let expected: Vec<(&str, [usize; 2])> = reference.iter().map(|p| (p.name.as_str(), p.value().shape())).collect();
    let got: Vec<(&str, [usize; 2])> = header.params.iter().map(|p| (p.name.as_str(), p.shape)).collect();
    if expected != got {
        return Err(bad("parameter manifest does not match the model config"));
    }

    let mut store = ParamStore::new();
    for entry in &header.params {
        let n = entry.shape[0] * entry.shape[1];
        let start = entry.offset * 8;
        let end = start + n * 8;
        let raw = body.get(start..end).ok_or_else(|| bad("truncated parameter data"))?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        store.add(entry.name.clone(), Tensor::from_vec(entry.shape[0], entry.shape[1], data).expect("sized above"));
    }
    let params = ModelParams::lookup(&store, &header.config).ok_or_else(|| bad("missing parameters"))?;
    Ok(SaccModel { config: header.config, vocab, label_names: header.label_names, store, params })
}

pub fn save(model: &SaccModel, path: &Path) -> Result<(), TrainError> {
    fs::write(path, to_bytes(model)).map_err(|e| TrainError::Io(path.to_path_buf(), e.to_string()))
}

pub fn load(path: &Path) -> Result<SaccModel, TrainError> {
    let bytes = fs::read(path).map_err(|e| TrainError::Io(path.to_path_buf(), e.to_string()))?;
    from_bytes(&bytes)
}
