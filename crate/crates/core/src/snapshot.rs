//! Snapshot files: `<stem>.json` carries the header, `<stem>.f64` the raw little-endian
//! samples with `x` as the slow index. A profile is stored as a single `x` row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, PhaseGrid, Profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub n_x: usize,
    pub n_p: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub time: f64,
    pub flow_id: String,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("f64"))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn write_raw(stem: &Path, header: &Header, values: &[f64]) -> Result<()> {
    let (json, raw) = paths(stem);
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_atomic(&raw, &bytes)?;
    let text = serde_json::to_string_pretty(header).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&json, text.as_bytes())
}

/// Header and payload, with the payload length checked against the header.
pub fn read_raw(stem: &Path) -> Result<(Header, Vec<f64>)> {
    let (json, raw) = paths(stem);
    let header: Header = serde_json::from_str(&fs::read_to_string(&json)?)
        .map_err(|e| Error::Format(format!("{}: {e}", json.display())))?;
    let bytes = fs::read(&raw)?;
    let expected = header.n_x * header.n_p * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{}: {} bytes, header needs {expected}",
            raw.display(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, values))
}

pub fn write_field(stem: &Path, field: &Field, time: f64, flow_id: &str) -> Result<()> {
    let g = field.grid;
    let header = Header {
        n_x: g.x.n,
        n_p: g.p.n,
        x_min: g.x.min,
        x_max: g.x.max,
        p_min: g.p.min,
        p_max: g.p.max,
        time,
        flow_id: flow_id.to_string(),
    };
    write_raw(stem, &header, &field.values)
}

pub fn read_field(stem: &Path) -> Result<(Header, Field)> {
    let (h, values) = read_raw(stem)?;
    let grid = PhaseGrid::new(h.x_min, h.x_max, h.n_x, h.p_min, h.p_max, h.n_p)
        .map_err(|e| Error::Format(format!("{}: {e}", stem.display())))?;
    let field = Field::new(grid, values)?;
    Ok((h, field))
}

/// A profile is a one-row snapshot with `x_min = x_max = 0`.
pub fn write_profile(stem: &Path, profile: &Profile, time: f64, flow_id: &str) -> Result<()> {
    let header = Header {
        n_x: 1,
        n_p: profile.axis.n,
        x_min: 0.0,
        x_max: 0.0,
        p_min: profile.axis.min,
        p_max: profile.axis.max,
        time,
        flow_id: flow_id.to_string(),
    };
    write_raw(stem, &header, &profile.values)
}

pub fn read_profile(stem: &Path) -> Result<(Header, Profile)> {
    let (h, values) = read_raw(stem)?;
    if h.n_x != 1 {
        return Err(Error::Format(format!("{}: n_x = {}, a profile has one row", stem.display(), h.n_x)));
    }
    let axis = Axis::new(h.p_min, h.p_max, h.n_p, "snapshot.p").map_err(|e| Error::Format(e.to_string()))?;
    Ok((h, Profile::new(axis, values)))
}
