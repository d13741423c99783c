//! Two-stage contrastive training on a synthetic room corner.
//!
//! Builds the geometric consistency sets of a three-plane scene, renders a
//! camera sweep, mines overlapping view pairs and trains per-pixel
//! embeddings: pixel InfoNCE first, then set InfoNCE.
//!
//! ```text
//! cargo run --release --example two_stage_training
//! ```

use geoset::dataset::{prepare_training_set, Trajectory};
use geoset::geometry::{build_knn_graph, SyntheticScene, SyntheticSceneSpec};
use geoset::metrics::CodingRateParams;
use geoset::projection::{MatchParams, MiningParams};
use geoset::segmentation::{segment, SegmentationParams};
use geoset::trainer::{evaluate, initial_table, run_two_stage, TrainConfig};

fn main() -> geoset::Result<()> {
    let scene = SyntheticScene::new(SyntheticSceneSpec::corner(2.0, 400.0, 7))?;
    let (mut cloud, _) = scene.sample();
    cloud.set_edges(build_knn_graph(&cloud, 8)?);
    let partition = segment(&cloud, &SegmentationParams::default())?;
    println!("{} points, {} geometric consistency sets", cloud.len(), partition.set_count);

    let views = Trajectory::default().render(&scene)?;
    let prepared = prepare_training_set(
        &cloud,
        &partition,
        &views,
        &MiningParams::default(),
        &MatchParams::default(),
        0,
    )?;
    println!("{} frames -> {} mined pairs", views.len(), prepared.pairs.len());

    let config = TrainConfig::default();
    let data = &prepared.training;
    let before = evaluate(&initial_table(data, &config)?, data, CodingRateParams::default())?;
    let start = std::time::Instant::now();
    let outcome = run_two_stage(data, &config)?;
    let after = evaluate(&outcome.table, data, CodingRateParams::default())?;

    for r in outcome.log.iter().filter(|r| r.intra_set_cosine.is_some()) {
        println!(
            "stage {} epoch {} {:?}: loss {:.4} lr {:.4} intra-set cosine {:.3}",
            r.stage,
            r.epoch,
            r.loss_kind,
            r.loss,
            r.lr,
            r.intra_set_cosine.unwrap()
        );
    }
    println!("trained in {:.2?}", start.elapsed());
    println!(
        "intra-set cosine {:.3} -> {:.3}, cross-set cosine {:.3} -> {:.3}, coding rate {:.3} -> {:.3}",
        before.intra_set_cosine,
        after.intra_set_cosine,
        before.cross_set_cosine,
        after.cross_set_cosine,
        before.coding_rate,
        after.coding_rate
    );
    Ok(())
}
