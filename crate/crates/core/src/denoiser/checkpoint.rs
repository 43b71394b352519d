//! Parameter archive: a magic line, a little-endian `u64` manifest length,
//! a JSON manifest (names, shapes, dtype, seed, hyperparameters), then every
//! tensor as little-endian `f64` in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tape::Mat;
use super::{DenoiserHyper, DenoiserParams, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"SENSORPLACE-CKPT\n";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: u32,
    dtype: String,
    seed: u64,
    hyper: DenoiserHyper,
    tensors: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: [usize; 2],
}

pub fn to_bytes(p: &DenoiserParams) -> Vec<u8> {
    let manifest = Manifest {
        version: 1,
        dtype: "f64-le".into(),
        seed: p.seed,
        hyper: p.hyper,
        tensors: p
            .tensors
            .iter()
            .map(|t| Entry {
                name: t.name.clone(),
                shape: [t.value.rows, t.value.cols],
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + 8 * p.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &p.tensors {
        for v in &t.value.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<DenoiserParams> {
    let bad = |msg: &str| Error::Checkpoint(msg.to_string());
    let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("missing magic header"))?;
    if rest.len() < 8 {
        return Err(bad("truncated manifest length"));
    }
    let len = u64::from_le_bytes(rest[..8].try_into().expect("8 bytes")) as usize;
    let rest = &rest[8..];
    if rest.len() < len {
        return Err(bad("truncated manifest"));
    }
    let manifest: Manifest =
        serde_json::from_slice(&rest[..len]).map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
    if manifest.version != 1 || manifest.dtype != "f64-le" {
        return Err(bad("unsupported version or dtype"));
    }
    manifest.hyper.validate()?;
    let mut data = &rest[len..];
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for e in manifest.tensors {
        let count = e.shape[0] * e.shape[1];
        if data.len() < 8 * count {
            return Err(Error::Checkpoint(format!("tensor {} truncated", e.name)));
        }
        let values = data[..8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        data = &data[8 * count..];
        tensors.push(Tensor {
            name: e.name,
            value: Mat::from_vec(e.shape[0], e.shape[1], values),
        });
    }
    if !data.is_empty() {
        return Err(bad("trailing bytes"));
    }
    let params = DenoiserParams {
        hyper: manifest.hyper,
        seed: manifest.seed,
        tensors,
    };
    // the layout must match what this build of the network consumes
    let expected = DenoiserParams::init(params.hyper, 0)?;
    let same_layout = expected.tensors.len() == params.tensors.len()
        && expected.tensors.iter().zip(&params.tensors).all(|(a, b)| {
            a.name == b.name && a.value.rows == b.value.rows && a.value.cols == b.value.cols
        });
    if !same_layout {
        return Err(bad("tensor layout does not match the network"));
    }
    Ok(params)
}

pub fn save_checkpoint(p: &DenoiserParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(p)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<DenoiserParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
