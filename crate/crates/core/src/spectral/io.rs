//! Raw little-endian `(re, im)` f64 pairs plus a JSON sidecar describing the grid.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{GridFunction, Repr};
use super::grid::{Grid, GridSpec};
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub representation: Repr,
    pub dtype: String,
}

const DTYPE: &str = "complex-f64-le";

pub fn sidecar_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode(u: &GridFunction) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(u.values().len() * 16);
    for v in u.values() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

/// Writes the raw file and its `.json` sidecar; returns both paths.
pub fn save(u: &GridFunction, raw: &Path) -> Result<(PathBuf, PathBuf)> {
    let spec = u.grid().spec();
    let side = Sidecar {
        d: spec.d,
        n: spec.n,
        length: spec.length,
        radius: spec.radius,
        representation: u.repr(),
        dtype: DTYPE.into(),
    };
    fs::write(raw, encode(u))?;
    let sp = sidecar_path(raw);
    fs::write(&sp, serde_json::to_string_pretty(&side)?)?;
    Ok((raw.to_path_buf(), sp))
}

pub fn load(raw: &Path) -> Result<GridFunction> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(raw))?)?;
    if side.dtype != DTYPE {
        return Err(LabError::InvalidArgument(format!("unsupported dtype {}", side.dtype)));
    }
    let grid = Grid::from_spec(GridSpec { d: side.d, n: side.n, length: side.length, radius: side.radius })?;
    let bytes = fs::read(raw)?;
    if bytes.len() != grid.len() * 16 {
        return Err(LabError::InvalidArgument(format!(
            "{} holds {} bytes, expected {}",
            raw.display(),
            bytes.len(),
            grid.len() * 16
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    GridFunction::from_values(&grid, side.representation, values)
}
