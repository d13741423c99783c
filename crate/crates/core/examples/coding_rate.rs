//! Coding rate of compact and spread-out feature sets, and PCA false colour
//! of a feature map written as a PPM image.
//!
//! ```text
//! cargo run --release --example coding_rate -- [out.ppm]
//! ```

use geoset::contrast::{normalize, FeatureMap};
use geoset::metrics::{coding_rate, pca_embed, per_image_coding_rate};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> geoset::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "pca.ppm".into());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (d, m, eps) = (16, 200, 0.5);

    let spread = DMatrix::from_fn(d, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let centre = DMatrix::from_fn(d, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let tight = DMatrix::from_fn(d, m, |r, _| centre[r] + 0.05 * rng.sample::<f64, _>(StandardNormal));
    println!("coding rate, isotropic Gaussian cloud: {:.3}", coding_rate(&spread, eps)?);
    println!("coding rate, tight cluster:            {:.3}", coding_rate(&tight, eps)?);
    println!("coding rate, zero matrix:              {:.3}", coding_rate(&DMatrix::zeros(d, m), eps)?);

    // A 32×32 image of four quadrants, each a noisy copy of its own
    // direction, so PCA colours the quadrants apart.
    let (h, w, c) = (32u32, 32u32, 16usize);
    let dirs: Vec<Vec<f64>> = (0..4).map(|_| (0..c).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let mut data = Vec::with_capacity((h * w) as usize * c);
    let mut labels = Vec::with_capacity((h * w) as usize);
    for v in 0..h {
        for u in 0..w {
            let q = (u >= w / 2) as usize + 2 * (v >= h / 2) as usize;
            labels.push(q as u32);
            data.extend(dirs[q].iter().map(|x| x + 0.3 * rng.random_range(-1.0..1.0)));
        }
    }
    let map = normalize(&FeatureMap::new(h, w, c, data)?);
    println!("per-image coding rate (quadrants as categories): {:.3}", per_image_coding_rate(&map, &labels, eps)?);

    let rgb = pca_embed(&map)?;
    std::fs::write(&out, rgb.to_ppm()).map_err(|e| geoset::Error::Io { path: out.clone().into(), source: e })?;
    println!("PCA false colour written to {out}");
    Ok(())
}
