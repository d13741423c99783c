//! Shared random-instance builders and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use geoset::contrast::{normalize, FeatureMap};
use geoset::projection::{Pixel, PixelEntry, PixelPair, SetTuple, ViewProjection};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_map(rng: &mut ChaCha8Rng, h: u32, w: u32, c: usize) -> FeatureMap {
    let data = (0..h as usize * w as usize * c).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&FeatureMap::new(h, w, c, data).unwrap())
}

pub fn all_pixels(h: u32, w: u32) -> Vec<Pixel> {
    (0..h).flat_map(|v| (0..w).map(move |u| Pixel::new(u, v))).collect()
}

/// `n` pairs with distinct pixels on each side.
pub fn random_pairs(rng: &mut ChaCha8Rng, h: u32, w: u32, n: usize) -> Vec<PixelPair> {
    let mut a = all_pixels(h, w);
    let mut b = all_pixels(h, w);
    a.shuffle(rng);
    b.shuffle(rng);
    a.into_iter().zip(b).take(n).map(|(m, n)| PixelPair { m, n }).collect()
}

/// Projection of `labels` (one optional set per pixel, row-major).
pub fn projection_from_labels(view_id: u32, h: u32, w: u32, labels: &[Option<u32>]) -> ViewProjection {
    let mut sets: BTreeMap<u32, Vec<PixelEntry>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(s) = l {
            sets.entry(*s).or_default().push(PixelEntry {
                pixel: Pixel::new(i as u32 % w, i as u32 / w),
                points: vec![i as u32],
            });
        }
    }
    ViewProjection {
        view_id,
        width: w,
        height: h,
        sets,
    }
}

/// Random set instance over `views` views of `h`×`w`: every pixel gets one
/// of `s` sets or none; tuples cover every set shared by consecutive views.
pub fn random_set_instance(
    rng: &mut ChaCha8Rng,
    views: u32,
    h: u32,
    w: u32,
    c: usize,
    s: u32,
) -> (BTreeMap<u32, FeatureMap>, BTreeMap<u32, ViewProjection>, Vec<SetTuple>) {
    let features: BTreeMap<u32, FeatureMap> = (0..views).map(|v| (v, random_map(rng, h, w, c))).collect();
    let projections: BTreeMap<u32, ViewProjection> = (0..views)
        .map(|v| {
            let labels: Vec<Option<u32>> = (0..h * w)
                .map(|_| {
                    let x = rng.random_range(0..=s);
                    (x < s).then_some(x)
                })
                .collect();
            (v, projection_from_labels(v, h, w, &labels))
        })
        .collect();
    let mut tuples = Vec::new();
    for v in 0..views.saturating_sub(1) {
        for set in 0..s {
            if projections[&v].sets.contains_key(&set) && projections[&(v + 1)].sets.contains_key(&set) {
                tuples.push(SetTuple {
                    set,
                    view_m: v,
                    view_n: v + 1,
                });
            }
        }
    }
    (features, projections, tuples)
}

/// Central differences of `loss` over every coordinate of every buffer.
pub fn finite_difference(bufs: &mut [Vec<f64>], h: f64, loss: impl Fn(&[Vec<f64>]) -> f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = bufs.iter().map(|b| vec![0.0; b.len()]).collect();
    for b in 0..bufs.len() {
        for i in 0..bufs[b].len() {
            let x = bufs[b][i];
            bufs[b][i] = x + h;
            let plus = loss(bufs);
            bufs[b][i] = x - h;
            let minus = loss(bufs);
            bufs[b][i] = x;
            out[b][i] = (plus - minus) / (2.0 * h);
        }
    }
    out
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)` over all buffers; 0 when both vanish.
pub fn relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut diff, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    let scale = na.max(nb).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

/// Softmax-InfoNCE computed directly from its definition: rows `a`, row
/// positives `p`, row negatives `q` (the positive of row t stays in the
/// denominator, the other terms come from `q`).
pub fn infonce_oracle(a: &[Vec<f64>], p: &[Vec<f64>], q: &[Vec<f64>], tau: f64) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
    let n = a.len();
    let mut total = 0.0;
    for t in 0..n {
        let pos = (dot(&a[t], &p[t]) / tau).exp();
        let mut denom = pos;
        for k in 0..n {
            if k != t {
                denom += (dot(&a[t], &q[k]) / tau).exp();
            }
        }
        total += -(pos / denom).ln();
    }
    total / n as f64
}

pub mod scenes;
pub mod suites;

/// The three-plane room corner seen by the default camera sweep, segmented
/// with default parameters.
pub fn toy_training_set(seed: u64) -> geoset::trainer::TrainingSet {
    use geoset::dataset::{prepare_training_set, Trajectory};
    use geoset::geometry::{build_knn_graph, SyntheticScene, SyntheticSceneSpec};
    use geoset::projection::{MatchParams, MiningParams};
    use geoset::segmentation::{segment, SegmentationParams};

    let scene = SyntheticScene::new(SyntheticSceneSpec::corner(2.0, 400.0, seed)).unwrap();
    let (mut cloud, _) = scene.sample();
    cloud.set_edges(build_knn_graph(&cloud, 8).unwrap());
    let partition = segment(&cloud, &SegmentationParams::default()).unwrap();
    assert_eq!(partition.set_count, 3);
    let views = Trajectory::default().render(&scene).unwrap();
    prepare_training_set(&cloud, &partition, &views, &MiningParams::default(), &MatchParams::default(), seed)
        .unwrap()
        .training
}
