//! Checkpoint file: `u64` little-endian header length, a JSON header, then
//! every parameter as little-endian `f32` in layout order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{layout, ArchConfig, NetworkError, Params, Real, TensorSpec};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    dtype: String,
    arch: ArchConfig,
    tensors: Vec<TensorSpec>,
    #[serde(default)]
    meta: serde_json::Value,
}

fn err(m: impl Into<String>) -> NetworkError {
    NetworkError::Checkpoint(m.into())
}

/// Writes `params` as `f32`. `meta` is stored verbatim in the header.
pub fn save_checkpoint<T: Real>(
    params: &Params<T>,
    meta: serde_json::Value,
    path: &Path,
) -> Result<(), NetworkError> {
    let header = Header {
        version: CHECKPOINT_VERSION,
        dtype: "f32le".into(),
        arch: params.arch.clone(),
        tensors: params.specs.clone(),
        meta,
    };
    let json = serde_json::to_vec(&header).map_err(|e| err(e.to_string()))?;
    let mut bytes = Vec::with_capacity(8 + json.len() + 4 * params.len());
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for v in &params.data {
        bytes.extend_from_slice(&(v.to_f64().unwrap_or(f64::NAN) as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| err(format!("{}: {e}", path.display())))
}

/// Reads a checkpoint; returns the parameters and the stored metadata.
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(Params<T>, serde_json::Value), NetworkError> {
    let bytes = fs::read(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    if bytes.len() < 8 {
        return Err(err("file too short"));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(8..8 + hlen).ok_or_else(|| err("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| err(format!("header: {e}")))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(err(format!("unsupported version {}", header.version)));
    }
    if header.dtype != "f32le" {
        return Err(err(format!("unsupported dtype {}", header.dtype)));
    }
    if header.tensors != layout(&header.arch) {
        return Err(err("tensor table does not match the architecture"));
    }
    let mut params = Params::<T>::zeros(header.arch);
    let data = &bytes[8 + hlen..];
    if data.len() != 4 * params.len() {
        return Err(err(format!(
            "expected {} parameter bytes, found {}",
            4 * params.len(),
            data.len()
        )));
    }
    for (dst, chunk) in params.data.iter_mut().zip(data.chunks_exact(4)) {
        *dst = T::of(f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64);
    }
    Ok((params, header.meta))
}
