//! Over-segmentation into geometric consistency sets and the effect of the
//! merge threshold `k`.
//!
//! ```text
//! cargo run --release --example segmentation
//! ```

use geoset::geometry::{build_knn_graph, Primitive, SyntheticScene, SyntheticSceneSpec};
use geoset::segmentation::{segment, SegmentationParams};

fn purity(labels: &[u32], truth: &[u32]) -> f64 {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for (&l, &t) in labels.iter().zip(truth) {
        *counts.entry(l).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = counts.values().map(|c| c.values().max().copied().unwrap_or(0)).sum();
    majority as f64 / labels.len() as f64
}

fn main() -> geoset::Result<()> {
    let mut spec = SyntheticSceneSpec::corner(2.0, 300.0, 5);
    spec.primitives.push(Primitive::Box {
        center: [0.6, 0.6, 0.2],
        half_extents: [0.2, 0.2, 0.2],
        rotation: [0.0, 0.0, 0.4],
        density: 600.0,
    });
    spec.noise_sigma = 0.003;
    let scene = SyntheticScene::new(spec)?;
    let (mut cloud, truth) = scene.sample();
    cloud.set_edges(build_knn_graph(&cloud, 8)?);
    println!("{} points, {} ground-truth faces", cloud.len(), scene.faces.len());

    for k in [0.01, 0.05, 1.0, 10.0, 100.0, 1000.0] {
        let params = SegmentationParams {
            k_threshold: k,
            ..SegmentationParams::default()
        };
        let part = segment(&cloud, &params)?;
        let sizes = part.set_sizes();
        println!(
            "k = {k:<5} {:4} sets (sizes {}..{}), purity {:.3}",
            part.set_count,
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            purity(&part.labels, &truth)
        );
    }

    let relaxed = segment(
        &cloud,
        &SegmentationParams {
            convexity_relaxation: true,
            ..SegmentationParams::default()
        },
    )?;
    println!("with convexity relaxation at k = 0.05: {} sets", relaxed.set_count);
    Ok(())
}
