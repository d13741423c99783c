//! JSON configuration files for `gen-scene` and `pipeline`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::Trajectory;
use crate::geometry::{Primitive, SyntheticSceneSpec};
use crate::io::{parse_json, read_bytes, DepthFormat};
use crate::metrics::CodingRateParams;
use crate::projection::{MatchParams, MiningParams};
use crate::segmentation::SegmentationParams;
use crate::trainer::TrainConfig;
use crate::{Error, Result};

/// Reads a config file that must carry a top-level `seed`.
pub fn read_seeded_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    let value: serde_json::Value = parse_json(&bytes, path)?;
    if value.get("seed").is_none_or(|s| !s.is_u64()) {
        return Err(Error::format(path, Some(0), "config must set an unsigned integer `seed`"));
    }
    parse_json(&bytes, path)
}

fn default_primitives() -> Vec<Primitive> {
    SyntheticSceneSpec::corner(2.0, 400.0, 0).primitives
}

/// Scene and camera sweep for `gen-scene`. The default is a 2 m room corner
/// seen by 200 frames at 48×48.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    #[serde(default = "default_primitives")]
    pub primitives: Vec<Primitive>,
    pub noise_sigma: f64,
    pub trajectory: Trajectory,
    pub depth_format: DepthFormat,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            primitives: default_primitives(),
            noise_sigma: 0.0,
            trajectory: Trajectory::default(),
            depth_format: DepthFormat::Raw,
        }
    }
}

impl SceneConfig {
    pub fn spec(&self, seed: u64) -> SyntheticSceneSpec {
        SyntheticSceneSpec {
            primitives: self.primitives.clone(),
            noise_sigma: self.noise_sigma,
            seed,
        }
    }
}

/// `gen-scene --config` file: a [`SceneConfig`] plus its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededSceneConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub scene: SceneConfig,
}

/// Neighbourhood sizes used when a cloud lacks normals or edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    pub normal_k: usize,
    pub graph_k: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams { normal_k: 16, graph_k: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    #[default]
    Png,
    Ppm,
}

/// Everything `pipeline` needs. Input paths are optional: without `scene`,
/// a synthetic scene is generated from `synthetic` into `<out>/scene`.
/// `seed` drives scene sampling, match subsampling and training; the seed
/// inside `train` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub cameras: Option<PathBuf>,
    #[serde(default)]
    pub depth_dir: Option<PathBuf>,
    /// Per-point category labels for the coding rate; defaults to the sets.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: SceneConfig,
    #[serde(default)]
    pub graph: GraphParams,
    #[serde(default)]
    pub segmentation: SegmentationParams,
    #[serde(default)]
    pub mining: MiningParams,
    #[serde(default)]
    pub matching: MatchParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub metrics: CodingRateParams,
    #[serde(default)]
    pub pca_format: ImageFormat,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        PipelineConfig {
            seed,
            scene: None,
            cameras: None,
            depth_dir: None,
            labels: None,
            out: None,
            synthetic: SceneConfig::default(),
            graph: GraphParams::default(),
            segmentation: SegmentationParams::default(),
            mining: MiningParams::default(),
            matching: MatchParams::default(),
            train: TrainConfig::default(),
            metrics: CodingRateParams::default(),
            pca_format: ImageFormat::Png,
        }
    }
}
