//! Rendering posed depth views, projecting geometric consistency sets into
//! them, mining overlapping pairs and building match indices.
//!
//! ```text
//! cargo run --release --example projection_and_mining
//! ```

use geoset::dataset::Trajectory;
use geoset::geometry::{build_knn_graph, SyntheticScene, SyntheticSceneSpec};
use geoset::projection::{
    build_match_index, compute_overlap, mine_pairs, project_geo_sets, project_point, MatchParams, MiningParams,
    DEFAULT_DEPTH_THRESHOLD,
};
use geoset::segmentation::{segment, SegmentationParams};

fn main() -> geoset::Result<()> {
    let scene = SyntheticScene::new(SyntheticSceneSpec::corner(2.0, 400.0, 3))?;
    let (mut cloud, _) = scene.sample();
    cloud.set_edges(build_knn_graph(&cloud, 8)?);
    let partition = segment(&cloud, &SegmentationParams::default())?;

    let trajectory = Trajectory {
        frames: 100,
        width: 64,
        height: 48,
        ..Trajectory::default()
    };
    let views = trajectory.render(&scene)?;
    let first = &views[0];
    println!(
        "{} views of {}×{}; view 0 has {} valid depth pixels",
        views.len(),
        first.intrinsics.width,
        first.intrinsics.height,
        first.depth.valid_count()
    );

    let visible = cloud.positions.iter().filter(|p| project_point(p, first).is_some()).count();
    let proj = project_geo_sets(&cloud, &partition, first, DEFAULT_DEPTH_THRESHOLD)?;
    let covered: usize = proj.sets.values().map(Vec::len).sum();
    println!("{visible} points fall inside view 0; {} sets cover {covered} pixels", proj.sets.len());

    for j in [1, 10, 50, 99] {
        println!("overlap(0, {j:2}) = {:.3}", compute_overlap(first, &views[j], DEFAULT_DEPTH_THRESHOLD));
    }

    for stride in [25, 10] {
        let params = MiningParams {
            frame_stride: stride,
            ..MiningParams::default()
        };
        let pairs = mine_pairs(&views, &params);
        println!("stride {stride}: {} pairs above {:.0} % overlap", pairs.len(), 100.0 * params.overlap_min);
        if let Some(p) = pairs.first() {
            let pm = project_geo_sets(&cloud, &partition, &views[p.m as usize], DEFAULT_DEPTH_THRESHOLD)?;
            let pn = project_geo_sets(&cloud, &partition, &views[p.n as usize], DEFAULT_DEPTH_THRESHOLD)?;
            let index = build_match_index(&pm, &pn, &MatchParams::default(), 0)?;
            println!(
                "  pair ({}, {}) overlap {:.3}: {} pixel pairs, {} shared sets",
                p.m,
                p.n,
                p.overlap,
                index.pixel_pairs.len(),
                index.set_tuples.len()
            );
        }
    }
    Ok(())
}
