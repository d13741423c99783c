use rayon::prelude::*;

use super::PointCloud;
use crate::{Error, Result};

/// Indices of the `k` nearest neighbours of every point (self excluded),
/// nearest first. Distance ties go to the smaller index.
///
/// Brute force over all pairs; intended for desk-scale clouds.
pub fn nearest_neighbors(cloud: &PointCloud, k: usize) -> Result<Vec<Vec<u32>>> {
    let n = cloud.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(Error::invalid(format!("k = {k} must be below the point count {n}")));
    }
    let pos = &cloud.positions;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((pos[j] - pos[i]).norm_squared(), j as u32))
                .collect();
            let key = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, key);
            cand.truncate(k);
            cand.sort_unstable_by(key);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(rows)
}

/// Symmetric k-NN adjacency: an edge joins `i` and `j` when either is among
/// the other's `k` nearest neighbours. Output is `(min, max)` pairs sorted
/// lexicographically without duplicates.
pub fn build_knn_graph(cloud: &PointCloud, k: usize) -> Result<Vec<(u32, u32)>> {
    let nn = nearest_neighbors(cloud, k)?;
    let mut edges: Vec<(u32, u32)> = nn
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            let i = i as u32;
            row.iter().map(move |&j| (i.min(j), i.max(j)))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}
