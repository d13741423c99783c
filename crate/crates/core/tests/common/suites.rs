//! Randomised checks shared by the property tests and the acceptance run.
//! Each returns the worst observed error.

use std::collections::BTreeMap;

use geoset::contrast::{
    pixel_infonce, pixel_point_infonce, set_infonce, Aggregator, FeatureMap, PointFeatures, Temperature,
};
use geoset::projection::{PixelPointMatch, SetTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_difference, random_map, random_pairs, random_set_instance, relative_error, all_pixels};

pub const FD_STEP: f64 = 1e-4;

fn tau(rng: &mut ChaCha8Rng) -> Temperature {
    Temperature::new(rng.random_range(0.07..1.0)).unwrap()
}

fn remap(template: &FeatureMap, data: &[f64]) -> FeatureMap {
    FeatureMap {
        data: data.to_vec(),
        ..template.clone()
    }
}

/// Worst relative gradient error of `pixel_infonce` over `instances` random
/// instances with at most 64 feature vectors and 16 channels.
pub fn pixel_gradients(seed: u64, instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let c = rng.random_range(2..=16);
        let (h, w) = (rng.random_range(1..=4), rng.random_range(2..=8));
        let n = rng.random_range(1..=(h * w) as usize);
        let (f_m, f_n) = (random_map(&mut rng, h, w, c), random_map(&mut rng, h, w, c));
        let pairs = random_pairs(&mut rng, h, w, n);
        let t = tau(&mut rng);
        let out = pixel_infonce(&f_m, &f_n, &pairs, t).unwrap();
        let mut bufs = vec![f_m.data.clone(), f_n.data.clone()];
        let num = finite_difference(&mut bufs, FD_STEP, |b| {
            pixel_infonce(&remap(&f_m, &b[0]), &remap(&f_n, &b[1]), &pairs, t).unwrap().loss
        });
        worst = worst.max(relative_error(&out.gradients, &num));
    }
    worst
}

/// As [`pixel_gradients`] for `set_infonce` with the given aggregators.
pub fn set_gradients(seed: u64, instances: usize, anchor: Aggregator, positive: Aggregator) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let c = rng.random_range(2..=16);
        let views = rng.random_range(2..=3);
        let (h, w) = (rng.random_range(2..=4), rng.random_range(2..=5));
        let s = rng.random_range(1..=5);
        let (features, projections, tuples) = random_set_instance(&mut rng, views, h, w, c, s);
        if tuples.is_empty() {
            continue;
        }
        done += 1;
        let t = tau(&mut rng);
        let out = set_infonce(&features, &projections, &tuples, t, anchor, positive).unwrap();
        let ids: Vec<u32> = features.keys().copied().collect();
        let analytic: Vec<Vec<f64>> = ids.iter().map(|id| out.gradients[id].clone()).collect();
        let mut bufs: Vec<Vec<f64>> = features.values().map(|f| f.data.clone()).collect();
        let num = finite_difference(&mut bufs, FD_STEP, |b| {
            let maps: BTreeMap<u32, FeatureMap> =
                ids.iter().zip(b).map(|(id, d)| (*id, remap(&features[id], d))).collect();
            set_infonce(&maps, &projections, &tuples, t, anchor, positive).unwrap().loss
        });
        worst = worst.max(relative_error(&analytic, &num));
    }
    worst
}

/// As [`pixel_gradients`] for `pixel_point_infonce`, differentiating both
/// the pixel map and the point table.
pub fn pixel_point_gradients(seed: u64, instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let c = rng.random_range(2..=16);
        let (h, w) = (rng.random_range(1..=4), rng.random_range(2..=8));
        let f = random_map(&mut rng, h, w, c);
        let points_n = rng.random_range(1..=32);
        let points = PointFeatures::new(c, random_map(&mut rng, 1, points_n, c).data).unwrap();
        let pixels = all_pixels(h, w);
        let n = rng.random_range(1..=pixels.len());
        let matches: Vec<PixelPointMatch> = (0..n)
            .map(|i| PixelPointMatch {
                pixel: pixels[i],
                point: rng.random_range(0..points_n),
            })
            .collect();
        let t = tau(&mut rng);
        let out = pixel_point_infonce(&f, &points, &matches, t).unwrap();
        let mut bufs = vec![f.data.clone(), points.data.clone()];
        let num = finite_difference(&mut bufs, FD_STEP, |b| {
            let p = PointFeatures::new(c, b[1].clone()).unwrap();
            pixel_point_infonce(&remap(&f, &b[0]), &p, &matches, t).unwrap().loss
        });
        worst = worst.max(relative_error(&out.gradients, &num));
    }
    worst
}

/// Worst `|set_infonce − pixel_infonce|` (loss and gradients) when every set
/// is a single pixel in each view.
pub fn singleton_gap(seed: u64, instances: usize) -> f64 {
    use geoset::projection::{PixelEntry, ViewProjection};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let c = rng.random_range(2..=16);
        let (h, w) = (rng.random_range(1..=6), rng.random_range(2..=8));
        let n = rng.random_range(1..=(h * w) as usize);
        let (f_m, f_n) = (random_map(&mut rng, h, w, c), random_map(&mut rng, h, w, c));
        let pairs = random_pairs(&mut rng, h, w, n);
        let t = tau(&mut rng);
        let proj = |view_id: u32, pick: &dyn Fn(usize) -> geoset::projection::Pixel| ViewProjection {
            view_id,
            width: w,
            height: h,
            sets: (0..pairs.len())
                .map(|k| {
                    (
                        k as u32,
                        vec![PixelEntry {
                            pixel: pick(k),
                            points: vec![k as u32],
                        }],
                    )
                })
                .collect(),
        };
        let projections: BTreeMap<u32, ViewProjection> =
            [(0, proj(0, &|k| pairs[k].m)), (1, proj(1, &|k| pairs[k].n))].into();
        let tuples: Vec<SetTuple> = (0..pairs.len() as u32)
            .map(|set| SetTuple {
                set,
                view_m: 0,
                view_n: 1,
            })
            .collect();
        let features: BTreeMap<u32, FeatureMap> = [(0, f_m.clone()), (1, f_n.clone())].into();
        let set = set_infonce(&features, &projections, &tuples, t, Aggregator::Mean, Aggregator::Mean).unwrap();
        let pix = pixel_infonce(&f_m, &f_n, &pairs, t).unwrap();
        worst = worst.max((set.loss - pix.loss).abs());
        for (a, b) in [(&set.gradients[&0], &pix.gradients[0]), (&set.gradients[&1], &pix.gradients[1])] {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    worst
}
