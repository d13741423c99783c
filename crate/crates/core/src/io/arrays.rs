//! Bulk arrays: raw little-endian `f32` with a JSON sidecar holding the grid
//! shape, plus 16-bit millimetre PNG for depth.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::{read_bytes, read_json, write_bytes, write_json};
use crate::contrast::FeatureMap;
use crate::projection::DepthMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthFormat {
    /// `f32` metres plus a `{width, height}` sidecar.
    #[default]
    Raw,
    /// Single-channel 16-bit PNG in millimetres.
    Png16,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Raw => "f32",
            DepthFormat::Png16 => "png",
        }
    }
}

/// Sidecar describing a row-major grid; `channels` is absent for depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHeader {
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
}

/// `scene/depth/0003.f32` → `scene/depth/0003.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn encode_f32(values: impl Iterator<Item = f32>) -> Vec<u8> {
    values.flat_map(f32::to_le_bytes).collect()
}

fn decode_f32(bytes: &[u8], expected: usize, path: &Path) -> Result<Vec<f32>> {
    if bytes.len() != expected * 4 {
        let offset = bytes.len().min(expected * 4) as u64;
        return Err(Error::format(
            path,
            Some(offset),
            format!("expected {} bytes, found {}", expected * 4, bytes.len()),
        ));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_depth(path: &Path, depth: &DepthMap, format: DepthFormat) -> Result<()> {
    match format {
        DepthFormat::Raw => {
            write_bytes(path, &encode_f32(depth.data.iter().copied()))?;
            write_json(
                &sidecar_path(path),
                &GridHeader {
                    width: depth.width,
                    height: depth.height,
                    channels: None,
                },
            )
        }
        DepthFormat::Png16 => {
            let mm: Vec<u16> = depth
                .data
                .iter()
                .map(|&d| (d as f64 * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
                .collect();
            let img: ImageBuffer<Luma<u16>, _> = ImageBuffer::from_raw(depth.width, depth.height, mm)
                .ok_or_else(|| Error::invalid("depth buffer does not match its size"))?;
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            img.save_with_format(path, image::ImageFormat::Png).map_err(|source| Error::Image {
                path: path.into(),
                source,
            })
        }
    }
}

/// Reads a depth map, choosing the format from the extension (`.png` or raw).
pub fn read_depth(path: &Path) -> Result<DepthMap> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.into(),
                source,
            })?
            .into_luma16();
        let (width, height) = img.dimensions();
        let data = img.into_raw().into_iter().map(|mm| mm as f32 / 1000.0).collect();
        return Ok(DepthMap { width, height, data });
    }
    let header: GridHeader = read_json(&sidecar_path(path))?;
    let data = decode_f32(&read_bytes(path)?, header.width as usize * header.height as usize, path)?;
    if data.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::format(path, None, "depth values must be finite and non-negative"));
    }
    Ok(DepthMap {
        width: header.width,
        height: header.height,
        data,
    })
}

/// Raw features in `(row, column, channel)` order.
pub fn write_features(path: &Path, features: &FeatureMap) -> Result<()> {
    write_bytes(path, &encode_f32(features.data.iter().map(|&v| v as f32)))?;
    write_json(
        &sidecar_path(path),
        &GridHeader {
            width: features.width,
            height: features.height,
            channels: Some(features.channels),
        },
    )
}

/// Reads raw features; the result is not marked normalized.
pub fn read_features(path: &Path) -> Result<FeatureMap> {
    let side = sidecar_path(path);
    let header: GridHeader = read_json(&side)?;
    let channels = header
        .channels
        .ok_or_else(|| Error::format(&side, None, "feature sidecar lacks `channels`"))?;
    let n = header.width as usize * header.height as usize * channels;
    let data = decode_f32(&read_bytes(path)?, n, path)?;
    FeatureMap::new(header.height, header.width, channels, data.into_iter().map(f64::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth() -> DepthMap {
        DepthMap {
            width: 3,
            height: 2,
            data: vec![0.0, 1.25, 2.5, 0.001, 10.0, 0.0],
        }
    }

    #[test]
    fn raw_depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d/0001.f32");
        write_depth(&p, &depth(), DepthFormat::Raw).unwrap();
        assert_eq!(read_depth(&p).unwrap(), depth());
    }

    #[test]
    fn png_depth_round_trip_in_millimetres() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("0001.png");
        write_depth(&p, &depth(), DepthFormat::Png16).unwrap();
        let back = read_depth(&p).unwrap();
        for (a, b) in back.data.iter().zip(&depth().data) {
            assert!((a - b).abs() <= 0.0005 + 1e-6);
        }
    }

    #[test]
    fn truncated_depth_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("0001.f32");
        write_depth(&p, &depth(), DepthFormat::Raw).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..10]).unwrap();
        let err = read_depth(&p).unwrap_err();
        assert_eq!((err.path(), err.offset()), (Some(p.as_path()), Some(10)));
    }

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("view_0002.f32");
        let f = FeatureMap::new(2, 2, 3, (0..12).map(|i| i as f64 * 0.5 - 2.0).collect()).unwrap();
        write_features(&p, &f).unwrap();
        assert_eq!(read_features(&p).unwrap(), f);
    }
}
