//! WTS1 weight container.
//!
//! Layout: magic `WTS1`, little-endian `u32` manifest length, a JSON manifest
//! `[{"name", "dims"}, ..., {"config": ...}]`, then every tensor as
//! little-endian `f32` in manifest order. Spectral-norm vectors are stored
//! after the trainable parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{NnError, Result};
use crate::model::{Model, ModelConfig};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"WTS1";

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    dims: Vec<usize>,
}

pub fn save_weights<T: Scalar>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    let tensors = model.params().iter().chain(model.buffers());
    let mut manifest: Vec<Value> = tensors
        .clone()
        .map(|t| {
            serde_json::to_value(Entry {
                name: t.name.clone(),
                dims: t.tensor.shape().to_vec(),
            })
            .expect("entry serializes")
        })
        .collect();
    manifest.push(serde_json::json!({ "config": model.config() }));
    let manifest = serde_json::to_vec(&manifest).expect("manifest serializes");

    let payload: usize = tensors.clone().map(|t| 4 * t.tensor.numel()).sum();
    let mut bytes = Vec::with_capacity(8 + manifest.len() + payload);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&manifest);
    for t in tensors {
        for &x in t.tensor.data() {
            bytes.extend_from_slice(&(x.f64() as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_weights<T: Scalar>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let manifest_err = |detail: String| NnError::Manifest {
        path: path.to_path_buf(),
        detail,
    };
    if bytes.len() < 8 {
        return Err(NnError::Truncated {
            path: path.to_path_buf(),
            expected: 8,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(NnError::BadMagic {
            path: path.to_path_buf(),
            found: bytes[..4].try_into().expect("four bytes"),
        });
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes")) as usize;
    let Some(raw) = bytes.get(8..8 + len) else {
        return Err(NnError::Truncated {
            path: path.to_path_buf(),
            expected: 8 + len,
            found: bytes.len(),
        });
    };
    let mut items: Vec<Value> = serde_json::from_slice(raw).map_err(|e| manifest_err(e.to_string()))?;
    let config_item = items.pop().ok_or_else(|| manifest_err("empty manifest".into()))?;
    let config: ModelConfig = config_item
        .get("config")
        .cloned()
        .ok_or_else(|| manifest_err("last entry is not a config".into()))
        .and_then(|c| serde_json::from_value(c).map_err(|e| manifest_err(e.to_string())))?;
    let entries: Vec<Entry> = items
        .into_iter()
        .map(serde_json::from_value)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| manifest_err(e.to_string()))?;

    let mut model = Model::<T>::build(&config, 0)?;
    let expected: Vec<(String, Vec<usize>)> = model
        .params()
        .iter()
        .chain(model.buffers())
        .map(|t| (t.name.clone(), t.tensor.shape().to_vec()))
        .collect();
    if expected.len() != entries.len() {
        return Err(manifest_err(format!(
            "{} tensors listed, architecture has {}",
            entries.len(),
            expected.len()
        )));
    }
    for (e, (name, dims)) in entries.iter().zip(&expected) {
        if &e.name != name {
            return Err(manifest_err(format!("expected tensor `{name}`, found `{}`", e.name)));
        }
        if &e.dims != dims {
            return Err(NnError::WeightShape {
                path: path.to_path_buf(),
                name: name.clone(),
                found: e.dims.clone(),
                expected: dims.clone(),
            });
        }
    }

    let payload: usize = expected.iter().map(|(_, d)| 4 * d.iter().product::<usize>()).sum();
    let data = &bytes[8 + len..];
    if data.len() != payload {
        return Err(NnError::Truncated {
            path: path.to_path_buf(),
            expected: 8 + len + payload,
            found: bytes.len(),
        });
    }
    let mut floats = data
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes(c.try_into().expect("four bytes")) as f64));
    for p in model.params_mut() {
        for x in p.tensor.data_mut() {
            *x = floats.next().expect("payload length checked");
        }
    }
    for b in model.buffers_mut() {
        for x in b.tensor.data_mut() {
            *x = floats.next().expect("payload length checked");
        }
    }
    Ok(model)
}
