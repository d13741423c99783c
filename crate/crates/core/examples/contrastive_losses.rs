//! Pixel, set and pixel-to-point InfoNCE with their analytic gradients,
//! checked against finite differences on a small random instance.
//!
//! ```text
//! cargo run --release --example contrastive_losses
//! ```

use std::collections::BTreeMap;

use geoset::contrast::{
    normalize, pixel_infonce, pixel_point_infonce, set_infonce, Aggregator, FeatureMap, PointFeatures, Temperature,
};
use geoset::projection::{PixelEntry, PixelPair, PixelPointMatch, Pixel, SetTuple, ViewProjection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, h: u32, w: u32, c: usize) -> FeatureMap {
    let data = (0..h as usize * w as usize * c).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&FeatureMap::new(h, w, c, data).unwrap())
}

/// Central difference of `loss` along coordinate `i` of `map`. The perturbed
/// map is used as is, so this matches gradients taken with respect to the
/// normalised features.
fn fd(map: &FeatureMap, i: usize, h: f64, loss: impl Fn(&FeatureMap) -> f64) -> f64 {
    let mut plus = map.clone();
    plus.data[i] += h;
    let mut minus = map.clone();
    minus.data[i] -= h;
    (loss(&plus) - loss(&minus)) / (2.0 * h)
}

fn main() -> geoset::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (h, w, c) = (4, 4, 8);
    let tau = Temperature::new(0.1)?;
    let f_m = random_map(&mut rng, h, w, c);
    let f_n = random_map(&mut rng, h, w, c);

    let pairs: Vec<PixelPair> = (0..6)
        .map(|i| PixelPair {
            m: Pixel::new(i % 4, i / 4),
            n: Pixel::new((i + 1) % 4, i / 4 + 1),
        })
        .collect();
    let out = pixel_infonce(&f_m, &f_n, &pairs, tau)?;
    let probe = 5;
    let numeric = fd(&f_m, probe, 1e-5, |m| pixel_infonce(m, &f_n, &pairs, tau).unwrap().loss);
    println!(
        "pixel InfoNCE over {} pairs: loss {:.5} (uniform features would give ln {} = {:.5})",
        pairs.len(),
        out.loss,
        pairs.len(),
        (pairs.len() as f64).ln()
    );
    println!("  d loss / d f_m[{probe}]: analytic {:+.6}, finite difference {numeric:+.6}", out.gradients[0][probe]);

    // Three sets, each covering one row of both 4×4 views.
    let projection = |view_id| ViewProjection {
        view_id,
        width: w,
        height: h,
        sets: (0..3)
            .map(|s| {
                let entries = (0..w)
                    .map(|u| PixelEntry {
                        pixel: Pixel::new(u, s),
                        points: vec![s * w + u],
                    })
                    .collect();
                (s, entries)
            })
            .collect(),
    };
    let projections: BTreeMap<u32, ViewProjection> = [(0, projection(0)), (1, projection(1))].into();
    let tuples: Vec<SetTuple> = (0..3).map(|set| SetTuple { set, view_m: 0, view_n: 1 }).collect();
    let features: BTreeMap<u32, FeatureMap> = [(0, f_m.clone()), (1, f_n.clone())].into();
    for (name, anchor) in [("mean / mean", Aggregator::Mean), ("arbitrary point / mean", Aggregator::ArbitraryPoint { seed: 9 })] {
        let out = set_infonce(&features, &projections, &tuples, tau, anchor, Aggregator::Mean)?;
        let numeric = fd(&f_n, probe, 1e-5, |n| {
            let f: BTreeMap<u32, FeatureMap> = [(0, f_m.clone()), (1, n.clone())].into();
            set_infonce(&f, &projections, &tuples, tau, anchor, Aggregator::Mean).unwrap().loss
        });
        println!(
            "set InfoNCE ({name}): loss {:.5}; d loss / d f_n[{probe}] analytic {:+.6}, finite difference {numeric:+.6}",
            out.loss, out.gradients[&1][probe]
        );
    }

    let points = {
        let raw = random_map(&mut rng, 1, 10, c);
        PointFeatures::new(c, raw.data)?
    };
    let matches: Vec<PixelPointMatch> = (0..10)
        .map(|i| PixelPointMatch {
            pixel: Pixel::new(i % 4, i / 4),
            point: i,
        })
        .collect();
    let out = pixel_point_infonce(&f_m, &points, &matches, tau)?;
    println!("pixel-to-point InfoNCE over {} matches: loss {:.5}", matches.len(), out.loss);
    Ok(())
}
