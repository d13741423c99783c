use nalgebra::{Matrix3, SymmetricEigen};

use super::{nearest_neighbors, PointCloud, Vec3};
use crate::{Error, Result};

/// Relative eigenvalue floor below which a neighbourhood covariance is treated
/// as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalOptions {
    /// Normals are flipped to face this point.
    pub viewpoint: Vec3,
}

impl Default for NormalOptions {
    fn default() -> Self {
        NormalOptions {
            viewpoint: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub cloud: PointCloud,
    /// Points whose neighbourhood covariance had rank below 2; they carry a
    /// `+z` placeholder normal.
    pub degenerate: Vec<u32>,
}

/// PCA normals: for each point, the eigenvector of the smallest eigenvalue of
/// the covariance of the point and its `k` nearest neighbours, oriented
/// towards `options.viewpoint`.
pub fn estimate_normals(cloud: &PointCloud, k: usize, options: NormalOptions) -> Result<NormalEstimate> {
    if k < 3 {
        return Err(Error::invalid(format!("normal estimation needs k >= 3, got {k}")));
    }
    if cloud.len() < k + 1 {
        return Err(Error::invalid(format!(
            "normal estimation with k = {k} needs at least {} points, got {}",
            k + 1,
            cloud.len()
        )));
    }
    let nn = nearest_neighbors(cloud, k)?;
    let mut normals = Vec::with_capacity(cloud.len());
    let mut degenerate = Vec::new();
    for (i, row) in nn.iter().enumerate() {
        let p = cloud.positions[i];
        match neighbourhood_normal(cloud, i, row) {
            Some(mut n) => {
                if n.dot(&(options.viewpoint - p)) < 0.0 {
                    n = -n;
                }
                normals.push(n);
            }
            None => {
                degenerate.push(i as u32);
                normals.push(Vec3::z());
            }
        }
    }
    let mut out = cloud.clone();
    out.normals = normals;
    Ok(NormalEstimate { cloud: out, degenerate })
}

fn neighbourhood_normal(cloud: &PointCloud, i: usize, row: &[u32]) -> Option<Vec3> {
    let pts = std::iter::once(i).chain(row.iter().map(|&j| j as usize));
    let count = (row.len() + 1) as f64;
    let centroid = pts.clone().map(|j| cloud.positions[j]).sum::<Vec3>() / count;
    let mut cov = Matrix3::zeros();
    for j in pts {
        let d = cloud.positions[j] - centroid;
        cov += d * d.transpose();
    }
    cov /= count;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (mid, max) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if max <= f64::MIN_POSITIVE || mid <= RANK_TOLERANCE * max {
        return None;
    }
    Some(eig.eigenvectors.column(order[0]).normalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_plane(n: usize) -> PointCloud {
        let mut pts = Vec::new();
        for a in 0..n {
            for b in 0..n {
                pts.push(Vec3::new(a as f64 * 0.1 + 0.013 * b as f64, b as f64 * 0.1, 0.0));
            }
        }
        PointCloud::from_positions(pts)
    }

    #[test]
    fn plane_normals_are_z() {
        let c = grid_plane(6);
        let opts = NormalOptions {
            viewpoint: Vec3::new(0.0, 0.0, 5.0),
        };
        for k in [3, 5, 8] {
            let est = estimate_normals(&c, k, opts).unwrap();
            assert!(est.degenerate.is_empty());
            for n in &est.cloud.normals {
                assert!((n - Vec3::z()).norm() < 1e-9, "{n:?}");
            }
        }
    }

    #[test]
    fn coincident_points_are_flagged() {
        // Two coincident pairs on a line: every neighbourhood is rank <= 1.
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        let est = estimate_normals(&PointCloud::from_positions(pts), 3, NormalOptions::default()).unwrap();
        assert_eq!(est.degenerate, vec![0, 1, 2, 3]);
        assert!(est.cloud.normals.iter().all(|n| *n == Vec3::z()));
    }

    #[test]
    fn too_few_points_or_small_k_is_an_error() {
        let two = PointCloud::from_positions(vec![Vec3::zeros(), Vec3::zeros()]);
        assert!(estimate_normals(&two, 3, NormalOptions::default()).is_err());
        assert!(estimate_normals(&grid_plane(3), 2, NormalOptions::default()).is_err());
    }

    fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - y * y).sqrt();
                let t = golden * i as f64;
                Vec3::new(r * t.cos(), y, r * t.sin())
            })
            .collect()
    }

    #[test]
    fn sphere_normals_point_inward() {
        let pts = fibonacci_sphere(400);
        let est = estimate_normals(&PointCloud::from_positions(pts.clone()), 8, NormalOptions::default()).unwrap();
        for (p, n) in pts.iter().zip(&est.cloud.normals) {
            assert!(n.dot(&(-p)) >= 0.0);
            // Analytic normal of the unit sphere is ±p.
            assert!(n.dot(&(-p)) > 0.99, "{n:?} vs {p:?}");
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec3> = fibonacci_sphere(200)
            .into_iter()
            .map(|p| p * (1.0 + 0.05 * rng.random::<f64>()))
            .collect();
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let rotated: Vec<Vec3> = pts.iter().map(|p| rot * p).collect();
        let a = estimate_normals(&PointCloud::from_positions(pts), 8, NormalOptions::default()).unwrap();
        let b = estimate_normals(&PointCloud::from_positions(rotated), 8, NormalOptions::default()).unwrap();
        for (na, nb) in a.cloud.normals.iter().zip(&b.cloud.normals) {
            let ra = rot * na;
            let angle = ra.dot(nb).abs().min(1.0).acos();
            assert!(angle < 1e-4, "angle {angle}");
        }
    }
}
