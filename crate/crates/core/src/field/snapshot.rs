//! `INLS-FIELD v1` snapshots: one ASCII header line, then little-endian
//! `f64` pairs `(re, im)` in row-major order.
//!
//! Radial fields carry an extra `ambient=<N>` entry after `offset`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{make_grid, FieldState, GridSpec};
use crate::error::{InlsError, Result};

pub const SNAPSHOT_MAGIC: &str = "INLS-FIELD v1";

fn header(u: &FieldState) -> String {
    let g = u.grid();
    let mut line = format!(
        "{SNAPSHOT_MAGIC}; N={}; n={}; L={}; t={}; offset={}",
        g.dims(),
        g.points_per_axis(),
        g.half_width(),
        u.time(),
        u8::from(g.spec().offset)
    );
    if g.is_radial() {
        line.push_str(&format!("; ambient={}", g.ambient_dimension()));
    }
    line
}

pub fn write_snapshot(path: impl AsRef<Path>, u: &FieldState) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header(u))?;
    for z in u.samples() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<FieldState> {
    let mut input = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let line = line.trim_end_matches('\n');
    let mut parts = line.split("; ");
    if parts.next() != Some(SNAPSHOT_MAGIC) {
        return Err(InlsError::Format(format!("bad snapshot header {line:?}")));
    }
    let mut dims = None;
    let mut points = None;
    let mut half_width = None;
    let mut time = None;
    let mut offset = None;
    let mut ambient = None;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| InlsError::Format(format!("bad header entry {part:?}")))?;
        let bad = |_| InlsError::Format(format!("bad value in {part:?}"));
        match key {
            "N" => dims = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "n" => points = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "L" => half_width = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "t" => time = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "offset" => {
                offset = Some(match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(String::new())),
                })
            }
            "ambient" => ambient = Some(value.parse::<u32>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(InlsError::Format(format!("unknown header key {key:?}"))),
        }
    }
    let missing = |k: &str| InlsError::Format(format!("header lacks {k}"));
    let dims = dims.ok_or_else(|| missing("N"))?;
    let points = points.ok_or_else(|| missing("n"))?;
    let half_width = half_width.ok_or_else(|| missing("L"))?;
    let time = time.ok_or_else(|| missing("t"))?;
    let offset = offset.ok_or_else(|| missing("offset"))?;
    let spec = match ambient {
        Some(n) => GridSpec::radial(n, points, half_width),
        None => GridSpec::cartesian(dims, points, half_width).with_offset(offset),
    };
    let grid = make_grid(spec)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(InlsError::Format(format!(
            "payload holds {} bytes, expected {}",
            bytes.len(),
            16 * grid.len()
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    FieldState::new(grid, samples, time)
}
