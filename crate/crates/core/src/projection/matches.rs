use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Pixel, ViewProjection};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelPair {
    pub m: Pixel,
    pub n: Pixel,
}

/// Set `set` is visible in both `view_m` and `view_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetTuple {
    pub set: u32,
    pub view_m: u32,
    pub view_n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchIndex {
    pub view_m: u32,
    pub view_n: u32,
    pub pixel_pairs: Vec<PixelPair>,
    pub set_tuples: Vec<SetTuple>,
}

/// A pixel and the 3D point it observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelPointMatch {
    pub pixel: Pixel,
    pub point: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// A set needs this many projected pixels in each view to form a tuple.
    pub min_pixels: usize,
    /// Upper bound on pixel pairs per view pair.
    pub pixel_cap: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            min_pixels: 5,
            pixel_cap: 4096,
        }
    }
}

fn point_pixels(proj: &ViewProjection) -> BTreeMap<u32, Pixel> {
    proj.sets
        .values()
        .flatten()
        .flat_map(|e| e.points.iter().map(move |&p| (p, e.pixel)))
        .collect()
}

/// Keeps `cap` of `items` chosen uniformly with `seed`, preserving order.
fn subsample<T: Copy>(items: Vec<T>, cap: usize, seed: u64) -> Vec<T> {
    if items.len() <= cap {
        return items;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = index::sample(&mut rng, items.len(), cap).into_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| items[i]).collect()
}

/// Pixel pairs from 3D points valid in both views, plus set tuples for sets
/// with at least `min_pixels` pixels in both views.
///
/// A point observed in both views yields one pair; identical pixel pairs are
/// kept once. Pairs beyond `pixel_cap` are subsampled with `seed`.
pub fn build_match_index(
    proj_m: &ViewProjection,
    proj_n: &ViewProjection,
    params: &MatchParams,
    seed: u64,
) -> Result<MatchIndex> {
    if params.min_pixels == 0 {
        return Err(Error::invalid("min_pixels must be at least 1"));
    }
    let set_tuples = proj_m
        .sets
        .iter()
        .filter(|(set, entries)| entries.len() >= params.min_pixels && proj_n.pixel_count(**set) >= params.min_pixels)
        .map(|(&set, _)| SetTuple {
            set,
            view_m: proj_m.view_id,
            view_n: proj_n.view_id,
        })
        .collect();

    let in_n = point_pixels(proj_n);
    let mut pixel_pairs: Vec<PixelPair> = point_pixels(proj_m)
        .into_iter()
        .filter_map(|(point, m)| in_n.get(&point).map(|&n| PixelPair { m, n }))
        .collect();
    // Dedup in point order without reordering.
    let mut seen = std::collections::BTreeSet::new();
    pixel_pairs.retain(|p| seen.insert(*p));

    Ok(MatchIndex {
        view_m: proj_m.view_id,
        view_n: proj_n.view_id,
        pixel_pairs: subsample(pixel_pairs, params.pixel_cap, seed),
        set_tuples,
    })
}

/// Pixel-to-point matches of one view: every projected point with its pixel,
/// in point order, capped at `cap` with `seed`.
pub fn pixel_point_matches(proj: &ViewProjection, cap: usize, seed: u64) -> Vec<PixelPointMatch> {
    let all = point_pixels(proj)
        .into_iter()
        .map(|(point, pixel)| PixelPointMatch { pixel, point })
        .collect();
    subsample(all, cap, seed)
}
