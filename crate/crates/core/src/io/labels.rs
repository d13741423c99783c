use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::{Error, Result};

pub const LABEL_MAGIC: &[u8; 4] = b"GSL1";

/// `GSL1`, `u32` count, then one little-endian `u32` label per point.
pub fn encode_labels(labels: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * labels.len());
    out.extend_from_slice(LABEL_MAGIC);
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_labels(bytes: &[u8], path: &Path) -> Result<Vec<u32>> {
    if bytes.len() < 8 {
        return Err(Error::format(path, Some(bytes.len() as u64), "truncated label header"));
    }
    if &bytes[..4] != LABEL_MAGIC {
        return Err(Error::format(path, Some(0), "bad magic, expected GSL1"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != 4 * count {
        let offset = 8 + body.len().min(4 * count) as u64;
        return Err(Error::format(
            path,
            Some(offset),
            format!("header declares {count} labels but the body holds {} bytes", body.len()),
        ));
    }
    Ok(body
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_labels(path: &Path, labels: &[u32]) -> Result<()> {
    write_bytes(path, &encode_labels(labels))
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    decode_labels(&read_bytes(path)?, path)
}
