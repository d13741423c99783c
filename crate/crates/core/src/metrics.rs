//! Representation-quality metrics: coding rate, intra/cross-set cosine and
//! a PCA false-colour embedding.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::contrast::FeatureMap;
use crate::projection::ViewProjection;
use crate::{Error, Result};

/// Label used for pixels without a category.
pub const UNLABELED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodingRateParams {
    /// Distortion `ε`.
    pub epsilon: f64,
}

impl Default for CodingRateParams {
    fn default() -> Self {
        CodingRateParams { epsilon: 0.5 }
    }
}

/// `½ log det(I + d/(m ε²) F Fᵀ)` for a `d × m` matrix with one feature per
/// column, in nats.
///
/// The determinant is taken on the smaller Gram side (`FFᵀ` or `FᵀF`), which
/// has the same value, through a Cholesky factorisation.
pub fn coding_rate(features: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    let (d, m) = features.shape();
    if d == 0 || m == 0 {
        return Err(Error::Empty("coding rate needs a non-empty feature matrix"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    let alpha = d as f64 / (m as f64 * epsilon * epsilon);
    let gram = if d <= m {
        features * features.transpose()
    } else {
        features.transpose() * features
    };
    let n = gram.nrows();
    let mat = DMatrix::identity(n, n) + gram * alpha;
    let chol = mat
        .cholesky()
        .ok_or_else(|| Error::NonFinite("coding-rate matrix is not positive definite".into()))?;
    let logdet: f64 = chol.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
    Ok(0.5 * logdet)
}

/// Divides every column by the mean column norm. The flag is `false` when
/// the mean norm is below `1e-12` and the input comes back unchanged.
pub fn scale_by_mean_length(features: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let m = features.ncols();
    if m == 0 {
        return (features.clone(), false);
    }
    let mean = features.column_iter().map(|c| c.norm()).sum::<f64>() / m as f64;
    if mean < 1e-12 {
        return (features.clone(), false);
    }
    (features / mean, true)
}

fn map_matrix(f: &FeatureMap) -> DMatrix<f64> {
    DMatrix::from_column_slice(f.channels, f.pixel_count(), &f.data)
}

/// Mean of the per-category coding rates of one image after scaling the
/// features by their mean length. Pixels labelled [`UNLABELED`] are skipped.
pub fn per_image_coding_rate(f: &FeatureMap, labels: &[u32], epsilon: f64) -> Result<f64> {
    if labels.len() != f.pixel_count() {
        return Err(Error::invalid(format!(
            "{} labels for {} pixels",
            labels.len(),
            f.pixel_count()
        )));
    }
    let (scaled, _) = scale_by_mean_length(&map_matrix(f));
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l != UNLABELED {
            groups.entry(l).or_default().push(i);
        }
    }
    if groups.is_empty() {
        return Err(Error::Empty("image has no labelled pixels"));
    }
    let mut total = 0.0;
    for cols in groups.values() {
        total += coding_rate(&scaled.select_columns(cols.iter()), epsilon)?;
    }
    Ok(total / groups.len() as f64)
}

fn unit_rows(f: &FeatureMap, proj: &ViewProjection) -> BTreeMap<u32, Vec<Vec<f64>>> {
    proj.sets
        .iter()
        .map(|(&set, entries)| {
            let rows = entries
                .iter()
                .filter(|e| f.contains(e.pixel))
                .map(|e| {
                    let v = f.pixel(e.pixel);
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 0.0 {
                        v.iter().map(|x| x / n).collect()
                    } else {
                        vec![0.0; v.len()]
                    }
                })
                .collect();
            (set, rows)
        })
        .collect()
}

fn sum_rows(rows: &[Vec<f64>], channels: usize) -> Vec<f64> {
    let mut s = vec![0.0; channels];
    for r in rows {
        s.iter_mut().zip(r).for_each(|(a, b)| *a += b);
    }
    s
}

/// Mean over sets with at least two pixels of the mean pairwise cosine
/// similarity between distinct pixels of the set.
pub fn intra_set_cosine(f: &FeatureMap, proj: &ViewProjection) -> Result<f64> {
    let mut per_set = Vec::new();
    for rows in unit_rows(f, proj).values() {
        let n = rows.len();
        if n < 2 {
            continue;
        }
        // Σ_{i≠j} f_i·f_j = ‖Σ f_i‖² − Σ ‖f_i‖²
        let s = sum_rows(rows, f.channels);
        let total: f64 = s.iter().map(|x| x * x).sum();
        let diag: f64 = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>()).sum();
        per_set.push(((total - diag) / (n * (n - 1)) as f64).clamp(-1.0, 1.0));
    }
    if per_set.is_empty() {
        return Err(Error::Empty("no set with at least two pixels"));
    }
    Ok(per_set.iter().sum::<f64>() / per_set.len() as f64)
}

/// Mean over pairs of distinct sets of the mean cosine similarity between
/// their pixels.
pub fn cross_set_cosine(f: &FeatureMap, proj: &ViewProjection) -> Result<f64> {
    let sums: Vec<(usize, Vec<f64>)> = unit_rows(f, proj)
        .values()
        .filter(|r| !r.is_empty())
        .map(|r| (r.len(), sum_rows(r, f.channels)))
        .collect();
    let mut vals = Vec::new();
    for a in 0..sums.len() {
        for b in a + 1..sums.len() {
            let d: f64 = sums[a].1.iter().zip(&sums[b].1).map(|(x, y)| x * y).sum();
            vals.push(d / (sums[a].0 * sums[b].0) as f64);
        }
    }
    if vals.is_empty() {
        return Err(Error::Empty("need at least two non-empty sets"));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// RGB image in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f64; 3]>,
}

impl RgbMap {
    /// 8-bit binary PPM.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for px in &self.data {
            out.extend(px.iter().map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8));
        }
        out
    }
}

/// Projects pixel features onto the top three principal components and
/// min-max normalises each channel to `[0, 1]`. Components with (near) zero
/// variance, and channels with zero range, are filled with `0.5`.
pub fn pca_embed(f: &FeatureMap) -> Result<RgbMap> {
    if f.channels < 3 {
        return Err(Error::invalid("PCA embedding needs at least 3 channels"));
    }
    let n = f.pixel_count();
    if n == 0 {
        return Err(Error::Empty("feature map has no pixels"));
    }
    let x = map_matrix(f);
    let mean = x.column_mean();
    let centered = DMatrix::from_fn(f.channels, n, |r, c| x[(r, c)] - mean[r]);
    let cov = &centered * centered.transpose() / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..f.channels).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);

    let mut channels = Vec::with_capacity(3);
    for &k in order.iter().take(3) {
        let lambda = eig.eigenvalues[k];
        if !(lambda > 1e-12 * top.max(1e-300)) || top <= 1e-24 {
            channels.push(vec![0.5; n]);
            continue;
        }
        let axis = eig.eigenvectors.column(k);
        let proj: Vec<f64> = centered.column_iter().map(|c| c.dot(&axis)).collect();
        let (lo, hi) = proj
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi - lo <= 1e-12 {
            channels.push(vec![0.5; n]);
        } else {
            channels.push(proj.iter().map(|v| (v - lo) / (hi - lo)).collect());
        }
    }
    Ok(RgbMap {
        width: f.width,
        height: f.height,
        data: (0..n).map(|i| [channels[0][i], channels[1][i], channels[2][i]]).collect(),
    })
}
