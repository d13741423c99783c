use serde::{Deserialize, Serialize};

use super::nce::Combo;
use crate::projection::Pixel;
use crate::{Error, Result};

/// Norm floor used when normalising.
pub const NORM_EPSILON: f64 = 1e-12;

/// `height × width` grid of `channels`-vectors, row-major, channels
/// innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: u32,
    pub width: u32,
    pub channels: usize,
    pub data: Vec<f64>,
    /// Set by [`normalize`]; losses refuse maps without it.
    pub normalized: bool,
}

impl FeatureMap {
    pub fn new(height: u32, width: u32, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("feature maps need at least one channel"));
        }
        if data.len() != height as usize * width as usize * channels {
            return Err(Error::invalid(format!(
                "feature buffer has {} values, expected {height}×{width}×{channels}",
                data.len()
            )));
        }
        Ok(FeatureMap {
            height,
            width,
            channels,
            data,
            normalized: false,
        })
    }

    pub fn zeros(height: u32, width: u32, channels: usize) -> Self {
        FeatureMap {
            height,
            width,
            channels,
            data: vec![0.0; height as usize * width as usize * channels],
            normalized: false,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u < self.width && p.v < self.height
    }

    /// Row index of a pixel.
    pub fn row(&self, p: Pixel) -> usize {
        p.index(self.width)
    }

    pub fn pixel(&self, p: Pixel) -> &[f64] {
        let r = self.row(p) * self.channels;
        &self.data[r..r + self.channels]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.channels)
    }
}

/// Divides every pixel vector by `max(‖v‖, NORM_EPSILON)`.
pub fn normalize(raw: &FeatureMap) -> FeatureMap {
    let mut out = raw.clone();
    for row in out.data.chunks_exact_mut(raw.channels) {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(NORM_EPSILON);
        row.iter_mut().for_each(|x| *x /= norm);
    }
    out.normalized = true;
    out
}

/// Table of per-point feature vectors, one row per 3D point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatures {
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PointFeatures {
    pub fn new(channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || !data.len().is_multiple_of(channels) {
            return Err(Error::invalid("point feature table has a ragged shape"));
        }
        Ok(PointFeatures { channels, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }
}

/// How a set of pixel features collapses to one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregator {
    /// Arithmetic mean of the pixel features, not re-normalised.
    #[default]
    Mean,
    /// The feature of one pixel picked by hashing `(seed, set, view)`.
    ArbitraryPoint { seed: u64 },
}

/// Identity of a set projection, used to seed [`Aggregator::ArbitraryPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetKey {
    pub set: u32,
    pub view: u32,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Aggregator {
    /// Index into a list of `len` pixels picked for `key`.
    pub fn select(seed: u64, key: SetKey, len: usize) -> usize {
        let h = splitmix64(seed ^ splitmix64(((key.set as u64) << 32) | key.view as u64));
        (h % len as u64) as usize
    }

    /// Weighted rows of buffer `buf` that make up the aggregate.
    pub(crate) fn combo(&self, map: &FeatureMap, buf: usize, pixels: &[Pixel], key: SetKey) -> Result<Combo> {
        if pixels.is_empty() {
            return Err(Error::Empty("cannot aggregate an empty pixel list"));
        }
        if let Some(p) = pixels.iter().find(|p| !map.contains(**p)) {
            return Err(Error::invalid(format!("pixel ({}, {}) out of bounds", p.u, p.v)));
        }
        Ok(match *self {
            Aggregator::Mean => {
                let w = 1.0 / pixels.len() as f64;
                Combo::new(pixels.iter().map(|p| (buf, map.row(*p), w)).collect())
            }
            Aggregator::ArbitraryPoint { seed } => {
                let p = pixels[Self::select(seed, key, pixels.len())];
                Combo::single(buf, map.row(p))
            }
        })
    }
}

/// Aggregated feature of `pixels` in `map`.
pub fn aggregate(map: &FeatureMap, pixels: &[Pixel], agg: Aggregator, key: SetKey) -> Result<Vec<f64>> {
    let combo = agg.combo(map, 0, pixels, key)?;
    Ok(combo.eval(&[&map.data], map.channels))
}
