//! Field snapshots: a JSON header next to a flat little-endian binary file
//! of physical-space samples stored as `(re, im)` pairs, row-major in `x1`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridSpec, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
    pub time: f64,
    pub name: String,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn write_snapshot(stem: &Path, name: &str, time: f64, f: &SpectralField) -> Result<()> {
    let (hp, bp) = paths(stem);
    let header = SnapshotHeader {
        n: f.grid().n(),
        box_length: f.grid().box_length(),
        time,
        name: name.to_string(),
    };
    fs::write(hp, serde_json::to_string_pretty(&header)?)?;
    let values = f.to_complex_values();
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for z in values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(bp, bytes)?;
    Ok(())
}

pub fn read_snapshot(stem: &Path) -> Result<(SnapshotHeader, SpectralField)> {
    let (hp, bp) = paths(stem);
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(hp)?)?;
    let grid = GridSpec::new(header.n, header.box_length)?;
    let bytes = fs::read(bp)?;
    if bytes.len() != grid.len() * 16 {
        return Err(Error::DimensionMismatch { expected: grid.len() * 16, got: bytes.len() });
    }
    let word = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let values: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new(word(2 * i), word(2 * i + 1))).collect();
    Ok((header, SpectralField::from_complex_values(grid, &values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("capwave-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = GridSpec::new(16, 5.0).unwrap();
        let f = SpectralField::from_fn(g, |x, y| (x * 1.3).sin() * (y * 0.7).cos());
        let stem = dir.join("h");
        write_snapshot(&stem, "h", 0.25, &f).unwrap();
        let (h, back) = read_snapshot(&stem).unwrap();
        assert_eq!(h.n, 16);
        assert_eq!(h.time, 0.25);
        assert!(back.max_rel_diff(&f) < 1e-13);
        assert!(back.is_real());
        fs::remove_dir_all(dir).ok();
    }
}
