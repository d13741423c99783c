//! Assembling training sets: camera trajectories over synthetic scenes and
//! the chain from views and partitions to match indices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{SyntheticScene, Vec3};
use crate::geometry::PointCloud;
use crate::projection::{
    build_match_index, look_at, mine_pairs, project_geo_sets, CameraView, Intrinsics, MatchIndex, MatchParams,
    MiningParams, ViewPair, ViewProjection,
};
use crate::segmentation::GeoSetPartition;
use crate::trainer::TrainingSet;
use crate::{Error, Result};

/// Cameras on a circular arc, all looking at one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Trajectory {
    pub frames: usize,
    pub target: [f64; 3],
    /// Arc centre; cameras sit at `center + radius·(cos θ, sin θ, 0)`.
    pub center: [f64; 3],
    pub radius: f64,
    /// Azimuth range in radians, swept linearly over the frames.
    pub azimuth: [f64; 2],
    pub width: u32,
    pub height: u32,
    pub hfov: f64,
}

impl Default for Trajectory {
    /// Sweep inside the room corner produced by
    /// [`SyntheticSceneSpec::corner`](crate::geometry::SyntheticSceneSpec::corner)
    /// with size 2.
    fn default() -> Self {
        Trajectory {
            frames: 200,
            target: [0.3, 0.3, 0.3],
            center: [0.3, 0.3, 1.3],
            radius: 1.6,
            azimuth: [0.35, 1.22],
            width: 48,
            height: 48,
            hfov: 1.4,
        }
    }
}

impl Trajectory {
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics::from_fov(self.width, self.height, self.hfov)
    }

    /// Renders every frame of the trajectory; view ids are frame indices.
    pub fn render(&self, scene: &SyntheticScene) -> Result<Vec<CameraView>> {
        let k = self.intrinsics();
        let c = Vec3::from(self.center);
        let target = Vec3::from(self.target);
        (0..self.frames)
            .map(|i| {
                let s = if self.frames > 1 {
                    i as f64 / (self.frames - 1) as f64
                } else {
                    0.0
                };
                let theta = self.azimuth[0] + s * (self.azimuth[1] - self.azimuth[0]);
                let eye = c + Vec3::new(theta.cos(), theta.sin(), 0.0) * self.radius;
                let pose = look_at(eye, target, Vec3::z())?;
                Ok(CameraView::render(i as u32, k, pose, scene))
            })
            .collect()
    }
}

/// Intermediate products of turning views and a partition into a
/// [`TrainingSet`].
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub pairs: Vec<ViewPair>,
    pub training: TrainingSet,
}

/// Mines view pairs and builds the training set over them.
pub fn prepare_training_set(
    cloud: &PointCloud,
    partition: &GeoSetPartition,
    views: &[CameraView],
    mining: &MiningParams,
    matching: &MatchParams,
    seed: u64,
) -> Result<PreparedData> {
    let pairs = mine_pairs(views, mining);
    let training = build_training_set(cloud, partition, views, &pairs, mining.depth_threshold, matching, seed)?;
    Ok(PreparedData { pairs, training })
}

/// Projects the partition into every view that takes part in a pair and
/// builds one match index per pair.
pub fn build_training_set(
    cloud: &PointCloud,
    partition: &GeoSetPartition,
    views: &[CameraView],
    pairs: &[ViewPair],
    depth_threshold: f64,
    matching: &MatchParams,
    seed: u64,
) -> Result<TrainingSet> {
    let by_id: BTreeMap<u32, &CameraView> = views.iter().map(|v| (v.view_id, v)).collect();
    let mut projections: BTreeMap<u32, ViewProjection> = BTreeMap::new();
    for p in pairs {
        for id in [p.m, p.n] {
            if let std::collections::btree_map::Entry::Vacant(slot) = projections.entry(id) {
                let view = by_id.get(&id).ok_or(Error::MissingView(id))?;
                slot.insert(project_geo_sets(cloud, partition, view, depth_threshold)?);
            }
        }
    }
    let matches: Vec<MatchIndex> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| build_match_index(&projections[&p.m], &projections[&p.n], matching, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    Ok(TrainingSet {
        projections,
        pairs: matches,
        point_features: None,
    })
}
