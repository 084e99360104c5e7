//! Field snapshots: a `<name>.meta` key-value file next to a `<name>.bin`
//! of `n * n` little-endian `f64` samples in storage order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{EnsError, Result};
use crate::real::Real;
use crate::spectral::{make_grid, ScalarField};

pub const BYTE_ORDER: &str = "little-endian";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Omega,
    Divergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub name: String,
    pub n: usize,
    pub box_len: f64,
    pub t: f64,
    pub kind: FieldKind,
    pub byte_order: String,
}

impl SnapshotMeta {
    pub fn new<T: Real>(name: &str, kind: FieldKind, t: T, field: &ScalarField<T>) -> Self {
        Self {
            name: name.to_string(),
            n: field.grid().n(),
            box_len: field.grid().box_len().as_f64(),
            t: t.as_f64(),
            kind,
            byte_order: BYTE_ORDER.to_string(),
        }
    }
}

pub fn encode<T: Real>(field: &ScalarField<T>) -> Vec<u8> {
    field.values().iter().flat_map(|v| v.as_f64().to_le_bytes()).collect()
}

pub fn decode<T: Real>(bytes: &[u8], meta: &SnapshotMeta) -> Result<ScalarField<T>> {
    if bytes.len() != meta.n * meta.n * 8 {
        return Err(EnsError::InvalidArgument(format!(
            "expected {} bytes for n = {}, got {}",
            meta.n * meta.n * 8,
            meta.n,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect();
    let grid = make_grid(meta.n, T::lit(meta.box_len))?;
    ScalarField::from_values(&grid, values)
}

/// Writes `dir/<name>.meta` and `dir/<name>.bin`; returns both paths.
pub fn write_snapshot<T: Real>(
    dir: &Path,
    name: &str,
    kind: FieldKind,
    t: T,
    field: &ScalarField<T>,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| EnsError::io(dir, e))?;
    let meta = SnapshotMeta::new(name, kind, t, field);
    let meta_path = dir.join(format!("{name}.meta"));
    let bin_path = dir.join(format!("{name}.bin"));
    let text = toml::to_string(&meta).map_err(|e| EnsError::Format {
        path: meta_path.clone(),
        reason: e.to_string(),
    })?;
    fs::write(&meta_path, text).map_err(|e| EnsError::io(&meta_path, e))?;
    fs::write(&bin_path, encode(field)).map_err(|e| EnsError::io(&bin_path, e))?;
    Ok((meta_path, bin_path))
}

/// Reads a snapshot given the path of its `.meta` file.
pub fn read_snapshot<T: Real>(meta_path: &Path) -> Result<(SnapshotMeta, ScalarField<T>)> {
    let text = fs::read_to_string(meta_path).map_err(|e| EnsError::io(meta_path, e))?;
    let meta: SnapshotMeta = toml::from_str(&text).map_err(|e| EnsError::Format {
        path: meta_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if meta.byte_order != BYTE_ORDER {
        return Err(EnsError::Format {
            path: meta_path.to_path_buf(),
            reason: format!("unsupported byte order '{}'", meta.byte_order),
        });
    }
    let bin_path = meta_path.with_extension("bin");
    let bytes = fs::read(&bin_path).map_err(|e| EnsError::io(&bin_path, e))?;
    let field = decode(&bytes, &meta).map_err(|e| EnsError::Format {
        path: bin_path.clone(),
        reason: e.to_string(),
    })?;
    Ok((meta, field))
}
