//! The full pipeline through the library's command layer: generate a scene,
//! segment it, mine pairs, project, train and score, all on disk.
//!
//! ```text
//! cargo run --release --example end_to_end -- [out_dir]
//! ```
//!
//! The same run is available from the binary as
//! `geoset pipeline --seed 0 --out out_dir`.

use std::path::PathBuf;

use geoset::cli::{pipeline, read_embeddings, read_projections, PipelineArgs};

fn main() -> geoset::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("geoset_end_to_end"));
    let summary = pipeline(&PipelineArgs {
        config: None,
        seed: Some(0),
        out: Some(out.clone()),
    })?;
    for (stage, s) in summary["stages"].as_object().unwrap() {
        println!("{stage}: {s}");
    }
    println!(
        "final intra-set cosine {:.3}, cross-set cosine {:.3}, coding rate {:.3}",
        summary["intra_set_cosine"].as_f64().unwrap_or(f64::NAN),
        summary["cross_set_cosine"].as_f64().unwrap_or(f64::NAN),
        summary["coding_rate"].as_f64().unwrap_or(f64::NAN),
    );

    let projections = read_projections(&out.join("projections.jsonl"))?;
    let table = read_embeddings(&out.join("train/embeddings"))?;
    println!(
        "{} projected views and {} embedding maps of {} channels under {}",
        projections.len(),
        table.views.len(),
        table.channels,
        out.display()
    );
    Ok(())
}
