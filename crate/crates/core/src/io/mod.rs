//! File formats: PLY point clouds, `GSL1` label sidecars, camera JSON,
//! depth maps, feature arrays and JSON-lines logs.

mod arrays;
mod camera;
mod labels;
mod ply;

pub use arrays::{read_depth, read_features, write_depth, write_features, DepthFormat, GridHeader};
pub use camera::{read_cameras, write_cameras, CameraRecord};
pub use labels::{decode_labels, encode_labels, read_labels, write_labels, LABEL_MAGIC};
pub use ply::{parse_ply, read_ply, write_ply, PlyFormat};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &[u8], line: usize, column: usize) -> u64 {
    let mut current = 1;
    let mut start = 0;
    for (i, &b) in text.iter().enumerate() {
        if current == line {
            break;
        }
        if b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)) as u64
}

pub(crate) fn parse_json<T: DeserializeOwned>(bytes: &[u8], path: &Path) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        let offset = (e.line() > 0).then(|| byte_offset(bytes, e.line(), e.column()));
        Error::format(path, offset, e.to_string())
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_bytes(path)?, path)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::format(path, None, e.to_string()))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// One compact JSON document per line.
pub fn write_json_lines<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    for v in values {
        serde_json::to_writer(&mut bytes, v).map_err(|e| Error::format(path, None, e.to_string()))?;
        bytes.push(b'\n');
    }
    write_bytes(path, &bytes)
}

pub fn read_json_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let bytes = read_bytes(path)?;
    let mut out = Vec::new();
    let mut start = 0;
    for line in bytes.split(|&b| b == b'\n') {
        if !line.iter().all(u8::is_ascii_whitespace) {
            out.push(
                serde_json::from_slice(line)
                    .map_err(|e| Error::format(path, Some((start + e.column().saturating_sub(1)) as u64), e.to_string()))?,
            );
        }
        start += line.len() + 1;
    }
    Ok(out)
}
