//! Field dump format: a little-endian `f64` row-major payload `<stem>.f64`
//! plus a JSON sidecar `<stem>.json` holding `{nx, ny, Lx, Ly, quantity, time}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    pub quantity: String,
    pub time: f64,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.f64` and `<stem>.json`.
pub fn write_dump(stem: impl AsRef<Path>, field: &ScalarField, quantity: &str, time: f64) -> Result<()> {
    let stem = stem.as_ref();
    let spec = field.spec();
    let mut bytes = Vec::with_capacity(8 * spec.len());
    for v in field.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(with_ext(stem, "f64"), bytes)?;
    let meta = DumpMeta {
        nx: spec.nx(),
        ny: spec.ny(),
        lx: spec.lx(),
        ly: spec.ly(),
        quantity: quantity.to_owned(),
        time,
    };
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads a dump written by [`write_dump`].
pub fn read_dump(stem: impl AsRef<Path>) -> Result<(ScalarField, DumpMeta)> {
    let stem = stem.as_ref();
    let meta: DumpMeta = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
    let payload_path = with_ext(stem, "f64");
    let bytes = fs::read(&payload_path)?;
    let spec = GridSpec::new(meta.lx, meta.ly, meta.nx, meta.ny)?;
    if bytes.len() != 8 * spec.len() {
        return Err(Error::Dump {
            path: payload_path,
            reason: format!("expected {} bytes, found {}", 8 * spec.len(), bytes.len()),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((ScalarField::from_vec(spec, data)?, meta))
}
