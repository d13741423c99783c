//! Reading and writing the on-disk formats: PLY clouds, GSL1 label files,
//! camera JSON, depth maps and feature arrays.
//!
//! ```text
//! cargo run --release --example file_formats
//! ```

use geoset::dataset::Trajectory;
use geoset::geometry::{SyntheticScene, SyntheticSceneSpec};
use geoset::io::{
    read_cameras, read_depth, read_labels, read_ply, write_cameras, write_depth, write_labels, write_ply, DepthFormat,
    PlyFormat,
};

fn main() -> geoset::Result<()> {
    let dir = std::env::temp_dir().join("geoset_file_formats");
    let scene = SyntheticScene::new(SyntheticSceneSpec::parallel_planes(0.5, 200.0, 2))?;
    let (cloud, labels) = scene.sample();
    let views = Trajectory {
        frames: 3,
        target: [0.5, 0.5, 0.0],
        center: [0.5, 0.5, 2.5],
        radius: 0.3,
        ..Trajectory::default()
    }
    .render(&scene)?;

    for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
        let path = dir.join(format!("scene_{format:?}.ply").to_lowercase());
        write_ply(&path, &cloud, format)?;
        let back = read_ply(&path)?;
        let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        println!("{}: {size} bytes, round trip exact: {}", path.display(), back == cloud);
    }

    let gsl = dir.join("labels.gsl");
    write_labels(&gsl, &labels)?;
    println!("{}: {} labels read back", gsl.display(), read_labels(&gsl)?.len());

    let cams = dir.join("cameras.json");
    write_cameras(&cams, &views)?;
    println!("{}: {} cameras", cams.display(), read_cameras(&cams)?.len());

    let depth = &views[0].depth;
    for format in [DepthFormat::Raw, DepthFormat::Png16] {
        let path = dir.join(format!("depth_0000.{}", format.extension()));
        write_depth(&path, depth, format)?;
        let back = read_depth(&path)?;
        let max_err = back
            .data
            .iter()
            .zip(&depth.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        println!("{}: max depth error {max_err:.5} m", path.display());
    }
    Ok(())
}
