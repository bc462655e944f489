//! `TDS1`: a 20-byte little-endian header followed by fixed-size records.
//!
//! ```text
//! header  magic "TDS1" | version u16 | width u16 | height u16 | k u8 |
//!         label_count u8 | sample_count u32 | flight_count u32
//! record  flight_id u32 | label u8 | height f32 | tof f32 | cmd_count f32 |
//!         prev_cmds u8 × k | pixels u8 × width·height
//! ```

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::Serialize;

use super::{Dataset, Sample, LABEL_COUNT};
use crate::drone::FlightCommand;

pub const MAGIC: &[u8; 4] = b"TDS1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("unsupported TDS1 version {found} (expected {VERSION})")]
    VersionMismatch { found: u16 },
    #[error("truncated body: expected {expected} bytes after the header, found {found}")]
    TruncatedBody { expected: usize, found: usize },
    #[error("corrupt record {index}: {reason}")]
    CorruptRecord { index: usize, reason: String },
    #[error("dataset does not fit the format: {0}")]
    Unrepresentable(String),
}

fn record_len(ds_width: u32, ds_height: u32, k: usize) -> usize {
    4 + 1 + 12 + k + ds_width as usize * ds_height as usize
}

pub fn encode(ds: &Dataset) -> Result<Vec<u8>, DatasetError> {
    let narrow = |v: u32, what| u16::try_from(v).map_err(|_| DatasetError::Unrepresentable(format!("{what} {v} exceeds u16")));
    let width = narrow(ds.width, "width")?;
    let height = narrow(ds.height, "height")?;
    let k = u8::try_from(ds.prev_k).map_err(|_| DatasetError::Unrepresentable(format!("k {} exceeds u8", ds.prev_k)))?;
    let count = u32::try_from(ds.samples.len()).map_err(|_| DatasetError::Unrepresentable("too many samples".into()))?;
    let rec = record_len(ds.width, ds.height, ds.prev_k);
    let mut out = Vec::with_capacity(HEADER_LEN + rec * ds.samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.push(k);
    out.push(LABEL_COUNT as u8);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&ds.flight_count.to_le_bytes());
    for (i, s) in ds.samples.iter().enumerate() {
        if s.prev_cmds.len() != ds.prev_k || s.pixels.len() != rec - 17 - ds.prev_k {
            return Err(DatasetError::Unrepresentable(format!("sample {i} does not match the dataset shape")));
        }
        out.extend_from_slice(&s.flight_id.to_le_bytes());
        out.push(s.label.code());
        for v in [s.height_m, s.tof_m, s.cmd_count] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&s.prev_cmds);
        out.extend_from_slice(&s.pixels);
    }
    Ok(out)
}

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn u32_at(b: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

fn f32_at(b: &[u8], i: usize) -> f32 {
    f32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

pub fn decode(bytes: &[u8]) -> Result<Dataset, DatasetError> {
    if bytes.len() < HEADER_LEN {
        return Err(DatasetError::CorruptHeader(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(DatasetError::CorruptHeader("bad magic".into()));
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(DatasetError::VersionMismatch { found: version });
    }
    let (width, height) = (u16_at(bytes, 6) as u32, u16_at(bytes, 8) as u32);
    let k = bytes[10] as usize;
    if bytes[11] as usize != LABEL_COUNT {
        return Err(DatasetError::CorruptHeader(format!("label count {} (expected {LABEL_COUNT})", bytes[11])));
    }
    let count = u32_at(bytes, 12) as usize;
    let flight_count = u32_at(bytes, 16);
    if count > 0 && (width == 0 || height == 0) {
        return Err(DatasetError::CorruptHeader("zero-sized image".into()));
    }
    if flight_count as usize > count {
        return Err(DatasetError::CorruptHeader(format!("{flight_count} flights for {count} samples")));
    }
    let rec = record_len(width, height, k);
    let body = &bytes[HEADER_LEN..];
    let expected = rec.checked_mul(count).ok_or_else(|| DatasetError::CorruptHeader("sample count overflows".into()))?;
    if body.len() < expected {
        return Err(DatasetError::TruncatedBody {
            expected,
            found: body.len(),
        });
    }
    if body.len() > expected {
        return Err(DatasetError::CorruptHeader(format!(
            "header describes {expected} body bytes but {} follow",
            body.len()
        )));
    }
    let mut samples = Vec::with_capacity(count);
    let mut flights = HashSet::new();
    for (index, r) in body.chunks_exact(rec.max(1)).take(count).enumerate() {
        let label = FlightCommand::from_code(r[4]).ok_or_else(|| DatasetError::CorruptRecord {
            index,
            reason: format!("label code {}", r[4]),
        })?;
        let flight_id = u32_at(r, 0);
        flights.insert(flight_id);
        samples.push(Sample {
            flight_id,
            label,
            height_m: f32_at(r, 5),
            tof_m: f32_at(r, 9),
            cmd_count: f32_at(r, 13),
            prev_cmds: r[17..17 + k].to_vec(),
            pixels: r[17 + k..].to_vec(),
        });
    }
    if flights.len() != flight_count as usize {
        return Err(DatasetError::CorruptHeader(format!(
            "header says {flight_count} flights, records hold {}",
            flights.len()
        )));
    }
    Ok(Dataset {
        width,
        height,
        prev_k: k,
        flight_count,
        samples,
    })
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    fs::write(path, encode(ds)?)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    decode(&fs::read(path)?)
}

#[derive(Serialize)]
struct JsonSample<'a> {
    flight_id: u32,
    label: u8,
    command: &'a str,
    height_m: f32,
    tof_m: f32,
    cmd_count: f32,
    prev_cmds: &'a [u8],
    width: u32,
    height: u32,
    pixels: String,
}

/// One JSON object per line per sample; pixels are base64 of the raw
/// row-major bytes.
pub fn write_jsonl(ds: &Dataset, out: impl Write) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(out);
    for s in &ds.samples {
        let line = JsonSample {
            flight_id: s.flight_id,
            label: s.label.code(),
            command: s.label.token(),
            height_m: s.height_m,
            tof_m: s.tof_m,
            cmd_count: s.cmd_count,
            prev_cmds: &s.prev_cmds,
            width: ds.width,
            height: ds.height,
            pixels: BASE64.encode(&s.pixels),
        };
        serde_json::to_writer(&mut out, &line).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
