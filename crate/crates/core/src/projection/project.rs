use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{depth_validate, project_point, CameraView, Pixel};
use crate::geometry::PointCloud;
use crate::segmentation::GeoSetPartition;
use crate::{Error, Result};

/// One pixel of a set's projection with the points that land on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelEntry {
    pub pixel: Pixel,
    /// Sorted indices of the depth-valid points of this set projecting here.
    pub points: Vec<u32>,
}

/// Projection of every geometric consistency set into one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewProjection {
    pub view_id: u32,
    pub width: u32,
    pub height: u32,
    /// Set id to its pixels, sorted by pixel. A pixel belongs to at most one
    /// set.
    pub sets: BTreeMap<u32, Vec<PixelEntry>>,
}

impl ViewProjection {
    pub fn pixel_count(&self, set: u32) -> usize {
        self.sets.get(&set).map_or(0, Vec::len)
    }

    pub fn pixels(&self, set: u32) -> impl Iterator<Item = Pixel> + '_ {
        self.sets.get(&set).into_iter().flatten().map(|e| e.pixel)
    }

    /// Per-pixel set label map with `u32::MAX` where no set projects.
    pub fn label_map(&self) -> Vec<u32> {
        let mut map = vec![u32::MAX; self.width as usize * self.height as usize];
        for (&set, entries) in &self.sets {
            for e in entries {
                map[e.pixel.index(self.width)] = set;
            }
        }
        map
    }
}

/// Projects every point into `view`, drops projections failing the depth
/// check, and resolves pixels claimed by several sets in favour of the set of
/// the nearest point.
pub fn project_geo_sets(
    cloud: &PointCloud,
    partition: &GeoSetPartition,
    view: &CameraView,
    depth_threshold: f64,
) -> Result<ViewProjection> {
    if partition.len() != cloud.len() {
        return Err(Error::invalid(format!(
            "partition has {} labels for {} points",
            partition.len(),
            cloud.len()
        )));
    }
    let k = &view.intrinsics;
    let npix = k.width as usize * k.height as usize;
    // (point, pixel offset, z)
    let mut hits = Vec::new();
    // Nearest (z, set) per pixel.
    let mut nearest: Vec<Option<(f64, u32)>> = vec![None; npix];
    for (i, p) in cloud.positions.iter().enumerate() {
        let Some(pr) = project_point(p, view) else { continue };
        if !depth_validate(pr.u, pr.v, pr.z, view, depth_threshold) {
            continue;
        }
        let idx = Pixel::new(pr.u, pr.v).index(k.width);
        let set = partition.labels[i];
        match nearest[idx] {
            Some((z, _)) if z <= pr.z => {}
            _ => nearest[idx] = Some((pr.z, set)),
        }
        hits.push((i as u32, idx));
    }

    let mut per_pixel: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (point, idx) in hits {
        let winner = nearest[idx].map(|(_, s)| s);
        if winner == Some(partition.labels[point as usize]) {
            per_pixel.entry(idx).or_default().push(point);
        }
    }

    let mut sets: BTreeMap<u32, Vec<PixelEntry>> = BTreeMap::new();
    for (idx, points) in per_pixel {
        let set = partition.labels[points[0] as usize];
        let pixel = Pixel::new((idx % k.width as usize) as u32, (idx / k.width as usize) as u32);
        sets.entry(set).or_default().push(PixelEntry { pixel, points });
    }
    for entries in sets.values_mut() {
        entries.sort_by_key(|e| e.pixel);
    }
    Ok(ViewProjection {
        view_id: view.view_id,
        width: k.width,
        height: k.height,
        sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::projection::{DepthMap, Intrinsics, DEFAULT_DEPTH_THRESHOLD};
    use nalgebra::Matrix4;

    fn small_view(depth: f32) -> CameraView {
        let mut d = DepthMap::zeros(8, 8);
        d.data.fill(depth);
        CameraView {
            view_id: 3,
            intrinsics: Intrinsics {
                fx: 4.0,
                fy: 4.0,
                cx: 3.5,
                cy: 3.5,
                width: 8,
                height: 8,
            },
            world_to_camera: Matrix4::identity(),
            depth: d,
        }
    }

    #[test]
    fn nearer_set_wins_shared_pixel() {
        let mut view = small_view(1.0);
        // Depth is 1 m, but a point at 1.03 also passes the check.
        view.depth.data.fill(1.0);
        let cloud = PointCloud::from_positions(vec![Vec3::new(0.0, 0.0, 1.03), Vec3::new(0.0, 0.0, 1.0)]);
        let part = GeoSetPartition::from_labels(&[0, 1]);
        let proj = project_geo_sets(&cloud, &part, &view, DEFAULT_DEPTH_THRESHOLD).unwrap();
        assert_eq!(proj.sets.len(), 1);
        assert_eq!(proj.sets[&1].len(), 1);
        assert_eq!(proj.sets[&1][0].points, vec![1]);
    }

    #[test]
    fn same_set_points_share_a_pixel_entry() {
        let view = small_view(1.0);
        let cloud = PointCloud::from_positions(vec![
            Vec3::new(0.01, 0.0, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.3, 0.0, 1.0),
        ]);
        let part = GeoSetPartition::from_labels(&[0, 0, 0]);
        let proj = project_geo_sets(&cloud, &part, &view, DEFAULT_DEPTH_THRESHOLD).unwrap();
        let entries = &proj.sets[&0];
        assert_eq!(entries.len(), 2);
        assert_eq!(entries.iter().map(|e| e.points.clone()).collect::<Vec<_>>(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn nothing_in_frustum_gives_empty_map() {
        let view = small_view(1.0);
        let cloud = PointCloud::from_positions(vec![Vec3::new(0.0, 0.0, -1.0), Vec3::new(50.0, 0.0, 1.0)]);
        let part = GeoSetPartition::from_labels(&[0, 1]);
        let proj = project_geo_sets(&cloud, &part, &view, DEFAULT_DEPTH_THRESHOLD).unwrap();
        assert!(proj.sets.is_empty());
    }

    #[test]
    fn mismatched_partition_errors() {
        let view = small_view(1.0);
        let cloud = PointCloud::from_positions(vec![Vec3::new(0.0, 0.0, 1.0)]);
        let part = GeoSetPartition::from_labels(&[0, 0]);
        assert!(project_geo_sets(&cloud, &part, &view, DEFAULT_DEPTH_THRESHOLD).is_err());
    }
}
