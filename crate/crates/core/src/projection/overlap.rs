use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{depth_validate, project_point, CameraView, DEFAULT_DEPTH_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewPair {
    pub m: u32,
    pub n: u32,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningParams {
    /// Keep every `frame_stride`-th view of the sequence.
    pub frame_stride: usize,
    /// Pairs need strictly more overlap than this.
    pub overlap_min: f64,
    pub depth_threshold: f64,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            frame_stride: 25,
            overlap_min: 0.3,
            depth_threshold: DEFAULT_DEPTH_THRESHOLD,
        }
    }
}

/// Fraction of `from`'s valid-depth pixels whose back-projected surface
/// point projects into `to` and passes its depth check.
fn directed_overlap(from: &CameraView, to: &CameraView, threshold: f64) -> f64 {
    let k = &from.intrinsics;
    let mut valid = 0usize;
    let mut seen = 0usize;
    for v in 0..k.height {
        for u in 0..k.width {
            let d = from.depth.get(u, v);
            if d <= 0.0 {
                continue;
            }
            valid += 1;
            let world = from.to_world(&from.backproject(u, v, d as f64));
            if let Some(p) = project_point(&world, to) {
                if depth_validate(p.u, p.v, p.z, to, threshold) {
                    seen += 1;
                }
            }
        }
    }
    if valid == 0 {
        0.0
    } else {
        seen as f64 / valid as f64
    }
}

/// Symmetric pixel overlap: the smaller of the two directed overlaps.
pub fn compute_overlap(m: &CameraView, n: &CameraView, depth_threshold: f64) -> f64 {
    directed_overlap(m, n, depth_threshold).min(directed_overlap(n, m, depth_threshold))
}

/// Subsamples every `frame_stride`-th view and returns all pairs among the
/// kept views whose overlap exceeds `overlap_min`, ordered by position in
/// the sequence.
pub fn mine_pairs(views: &[CameraView], params: &MiningParams) -> Vec<ViewPair> {
    let stride = params.frame_stride.max(1);
    let kept: Vec<&CameraView> = views.iter().step_by(stride).collect();
    let candidates: Vec<(usize, usize)> = (0..kept.len())
        .flat_map(|a| (a + 1..kept.len()).map(move |b| (a, b)))
        .collect();
    candidates
        .par_iter()
        .map(|&(a, b)| ViewPair {
            m: kept[a].view_id,
            n: kept[b].view_id,
            overlap: compute_overlap(kept[a], kept[b], params.depth_threshold),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|p| p.overlap > params.overlap_min)
        .collect()
}
