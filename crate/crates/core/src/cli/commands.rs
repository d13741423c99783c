//! The stage commands. Each reads its inputs from disk, writes its outputs
//! and returns a JSON summary; `outputs` lists the files written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{read_seeded_config, GraphParams, ImageFormat, PipelineConfig, SceneConfig, SeededSceneConfig};
use crate::contrast::normalize;
use crate::dataset::build_training_set;
use crate::geometry::{build_knn_graph, estimate_normals, NormalOptions, PointCloud, SyntheticScene};
use crate::io::{
    read_cameras, read_depth, read_features, read_json, read_json_lines, read_labels, read_ply, write_cameras,
    write_depth, write_features, write_json, write_json_lines, write_labels, write_ply, write_bytes, DepthFormat,
    PlyFormat,
};
use crate::metrics::{cross_set_cosine, intra_set_cosine, pca_embed, per_image_coding_rate, CodingRateParams, RgbMap};
use crate::projection::{
    mine_pairs as mine_view_pairs, project_geo_sets, CameraView, MatchParams, MiningParams, ViewPair, ViewProjection,
    DEFAULT_DEPTH_THRESHOLD,
};
use crate::segmentation::{segment as segment_cloud, GeoSetPartition, SegmentationParams};
use crate::trainer::{evaluate, initial_table, train_from, EmbeddingTable, TrainConfig};
use crate::{Error, Result};

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// `<dir>/0007.<ext>`.
pub fn view_file(dir: &Path, view_id: u32, ext: &str) -> PathBuf {
    dir.join(format!("{view_id:04}.{ext}"))
}

/// Loads cameras and the depth map of each one from `depth_dir`, trying
/// `NNNN.f32` and then `NNNN.png`.
pub fn load_views(cameras: &Path, depth_dir: &Path) -> Result<Vec<CameraView>> {
    read_cameras(cameras)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let id = rec.view_id.unwrap_or(i as u32);
            let raw = view_file(depth_dir, id, DepthFormat::Raw.extension());
            let path = if raw.exists() {
                raw
            } else {
                view_file(depth_dir, id, DepthFormat::Png16.extension())
            };
            rec.into_view(i, read_depth(&path)?)
        })
        .collect()
}

/// Default depth directory: `depth/` next to the camera file.
fn depth_dir_for(cameras: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cameras.parent().unwrap_or(Path::new(".")).join("depth"))
}

fn load_partition(path: &Path, points: usize) -> Result<GeoSetPartition> {
    let labels = read_labels(path)?;
    if labels.len() != points {
        return Err(Error::format(
            path,
            None,
            format!("{} labels for a cloud of {points} points", labels.len()),
        ));
    }
    let partition = GeoSetPartition::from_labels(&labels);
    if partition.labels != labels {
        return Err(Error::format(path, None, "set labels must be dense in first-point order"));
    }
    Ok(partition)
}

#[derive(Debug, Clone, clap::Args)]
pub struct GenSceneArgs {
    /// Scene description (JSON with a mandatory `seed`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Square image side in pixels.
    #[arg(long)]
    pub size: Option<u32>,
    #[arg(long, value_enum)]
    pub depth_format: Option<DepthFormatArg>,
    #[arg(skip)]
    pub scene: Option<SceneConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DepthFormatArg {
    Raw,
    Png16,
}

impl From<DepthFormatArg> for DepthFormat {
    fn from(f: DepthFormatArg) -> Self {
        match f {
            DepthFormatArg::Raw => DepthFormat::Raw,
            DepthFormatArg::Png16 => DepthFormat::Png16,
        }
    }
}

/// Samples a synthetic scene and renders its camera sweep into
/// `scene.ply`, `labels.gsl`, `cameras.json` and `depth/`.
pub fn gen_scene(args: &GenSceneArgs) -> Result<Value> {
    let (seed, mut config) = match (&args.config, &args.scene) {
        (Some(path), _) => {
            let c: SeededSceneConfig = read_seeded_config(path)?;
            (c.seed, c.scene)
        }
        (None, Some(scene)) => (0, scene.clone()),
        (None, None) => (0, SceneConfig::default()),
    };
    let seed = args.seed.unwrap_or(seed);
    if let Some(frames) = args.frames {
        config.trajectory.frames = frames;
    }
    if let Some(size) = args.size {
        config.trajectory.width = size;
        config.trajectory.height = size;
    }
    if let Some(f) = args.depth_format {
        config.depth_format = f.into();
    }

    let scene = SyntheticScene::new(config.spec(seed))?;
    let (cloud, labels) = scene.sample();
    let views = config.trajectory.render(&scene)?;

    let ply = args.out.join("scene.ply");
    let gsl = args.out.join("labels.gsl");
    let cams = args.out.join("cameras.json");
    let depth_dir = args.out.join("depth");
    write_ply(&ply, &cloud, PlyFormat::BinaryLittleEndian)?;
    write_labels(&gsl, &labels)?;
    write_cameras(&cams, &views)?;
    for v in &views {
        write_depth(&view_file(&depth_dir, v.view_id, config.depth_format.extension()), &v.depth, config.depth_format)?;
    }
    Ok(json!({
        "command": "gen-scene",
        "seed": seed,
        "points": cloud.len(),
        "faces": scene.faces.len(),
        "views": views.len(),
        "outputs": {
            "scene": path_str(&ply),
            "labels": path_str(&gsl),
            "cameras": path_str(&cams),
            "depth_dir": path_str(&depth_dir),
        },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct SegmentArgs {
    /// Point cloud (PLY). Normals are estimated and a kNN graph built when
    /// the file has none.
    #[arg(long)]
    pub input: PathBuf,
    /// Segmentation parameters (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub min_size: Option<usize>,
    #[arg(long)]
    pub convexity_relaxation: bool,
    #[arg(long, default_value_t = GraphParams::default().normal_k)]
    pub normal_k: usize,
    #[arg(long, default_value_t = GraphParams::default().graph_k)]
    pub graph_k: usize,
    /// Output label file (GSL1).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(skip)]
    pub params: Option<SegmentationParams>,
}

/// Fills in missing normals and edges.
pub fn prepare_cloud(mut cloud: PointCloud, graph: GraphParams) -> Result<(PointCloud, bool, bool)> {
    let estimate = !cloud.has_normals();
    if estimate {
        cloud = estimate_normals(&cloud, graph.normal_k, NormalOptions::default())?.cloud;
    }
    let knn = cloud.edges.is_empty();
    if knn {
        let edges = build_knn_graph(&cloud, graph.graph_k)?;
        cloud.set_edges(edges);
    }
    Ok((cloud, estimate, knn))
}

pub fn segment(args: &SegmentArgs) -> Result<Value> {
    let mut params = match (&args.config, args.params) {
        (Some(path), _) => read_json(path)?,
        (None, Some(p)) => p,
        (None, None) => SegmentationParams::default(),
    };
    if let Some(k) = args.k {
        params.k_threshold = k;
    }
    if let Some(m) = args.min_size {
        params.min_size = m;
    }
    params.convexity_relaxation |= args.convexity_relaxation;
    let graph = GraphParams {
        normal_k: args.normal_k,
        graph_k: args.graph_k,
    };
    let (cloud, estimated, knn) = prepare_cloud(read_ply(&args.input)?, graph)?;
    let partition = segment_cloud(&cloud, &params)?;
    write_labels(&args.out, &partition.labels)?;
    let sizes = partition.set_sizes();
    Ok(json!({
        "command": "segment",
        "set_count": partition.set_count,
        "points": cloud.len(),
        "edges": cloud.edges.len(),
        "estimated_normals": estimated,
        "knn_edges": knn,
        "min_set_size": sizes.iter().min(),
        "max_set_size": sizes.iter().max(),
        "params": params,
        "outputs": { "sets": path_str(&args.out) },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct MinePairsArgs {
    #[arg(long)]
    pub cameras: PathBuf,
    /// Defaults to `depth/` next to the camera file.
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    #[arg(long, default_value_t = MiningParams::default().frame_stride)]
    pub stride: usize,
    #[arg(long, default_value_t = MiningParams::default().overlap_min)]
    pub overlap_min: f64,
    #[arg(long, default_value_t = DEFAULT_DEPTH_THRESHOLD)]
    pub depth_threshold: f64,
    /// Output pair list (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

impl MinePairsArgs {
    fn params(&self) -> MiningParams {
        MiningParams {
            frame_stride: self.stride,
            overlap_min: self.overlap_min,
            depth_threshold: self.depth_threshold,
        }
    }
}

pub fn mine_pairs(args: &MinePairsArgs) -> Result<Value> {
    let params = args.params();
    if params.frame_stride == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    let views = load_views(&args.cameras, &depth_dir_for(&args.cameras, args.depth_dir.as_deref()))?;
    let pairs = mine_view_pairs(&views, &params);
    write_json(&args.out, &pairs)?;
    Ok(json!({
        "command": "mine-pairs",
        "views": views.len(),
        "sampled_views": views.len().div_ceil(params.frame_stride),
        "pair_count": pairs.len(),
        "outputs": { "pairs": path_str(&args.out) },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Set labels (GSL1) for the scene points.
    #[arg(long)]
    pub sets: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    /// Only project the views that appear in this pair list.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_THRESHOLD)]
    pub depth_threshold: f64,
    /// Output file, one projection per line (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

fn pair_views(pairs: &[ViewPair]) -> std::collections::BTreeSet<u32> {
    pairs.iter().flat_map(|p| [p.m, p.n]).collect()
}

pub fn project(args: &ProjectArgs) -> Result<Value> {
    let cloud = read_ply(&args.scene)?;
    let partition = load_partition(&args.sets, cloud.len())?;
    let mut views = load_views(&args.cameras, &depth_dir_for(&args.cameras, args.depth_dir.as_deref()))?;
    if let Some(path) = &args.pairs {
        let keep = pair_views(&read_json::<Vec<ViewPair>>(path)?);
        views.retain(|v| keep.contains(&v.view_id));
    }
    let projections: Vec<ViewProjection> = views
        .iter()
        .map(|v| project_geo_sets(&cloud, &partition, v, args.depth_threshold))
        .collect::<Result<_>>()?;
    write_json_lines(&args.out, &projections)?;
    let per_view: BTreeMap<String, Value> = projections
        .iter()
        .map(|p| {
            let pixels: usize = p.sets.values().map(Vec::len).sum();
            (p.view_id.to_string(), json!({ "sets": p.sets.len(), "pixels": pixels }))
        })
        .collect();
    Ok(json!({
        "command": "project",
        "views": projections.len(),
        "per_view": per_view,
        "outputs": { "projections": path_str(&args.out) },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    /// Training configuration (JSON with a mandatory `seed`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub sets: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    /// Mined pairs (JSON); mined with default parameters when absent.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_THRESHOLD)]
    pub depth_threshold: f64,
    #[arg(long, default_value_t = MatchParams::default().min_pixels)]
    pub min_pixels: usize,
    #[arg(long, default_value_t = MatchParams::default().pixel_cap)]
    pub pixel_cap: usize,
    /// Output directory for `log.jsonl` and `embeddings/`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(skip)]
    pub train: Option<TrainConfig>,
}

pub fn train(args: &TrainArgs) -> Result<Value> {
    let mut config: TrainConfig = match (&args.config, &args.train) {
        (Some(path), _) => read_seeded_config(path)?,
        (None, Some(c)) => c.clone(),
        (None, None) => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let cloud = read_ply(&args.scene)?;
    let partition = load_partition(&args.sets, cloud.len())?;
    let views = load_views(&args.cameras, &depth_dir_for(&args.cameras, args.depth_dir.as_deref()))?;
    let pairs = match &args.pairs {
        Some(path) => read_json(path)?,
        None => mine_view_pairs(
            &views,
            &MiningParams {
                depth_threshold: args.depth_threshold,
                ..MiningParams::default()
            },
        ),
    };
    let matching = MatchParams {
        min_pixels: args.min_pixels,
        pixel_cap: args.pixel_cap,
    };
    let data = build_training_set(&cloud, &partition, &views, &pairs, args.depth_threshold, &matching, config.seed)?;
    let table = initial_table(&data, &config)?;
    let before = evaluate(&table, &data, CodingRateParams::default())?;
    let outcome = train_from(&data, &config, table)?;
    let after = evaluate(&outcome.table, &data, CodingRateParams::default())?;

    let log = args.out.join("log.jsonl");
    let emb = args.out.join("embeddings");
    write_json_lines(&log, &outcome.log)?;
    for (id, map) in &outcome.table.views {
        write_features(&view_file(&emb, *id, "f32"), map)?;
    }
    Ok(json!({
        "command": "train",
        "seed": config.seed,
        "views": data.projections.len(),
        "pairs": data.pairs.len(),
        "steps": outcome.log.len(),
        "initial": before,
        "final": after,
        "outputs": { "log": path_str(&log), "embeddings": path_str(&emb) },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct MetricsArgs {
    /// Directory of `NNNN.f32` embeddings with JSON sidecars.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub sets: PathBuf,
    /// Per-point categories for the coding rate; defaults to the sets.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub cameras: PathBuf,
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    #[arg(long, default_value_t = CodingRateParams::default().epsilon)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_DEPTH_THRESHOLD)]
    pub depth_threshold: f64,
    #[arg(long, value_enum, default_value_t = ImageFormat::Png)]
    pub pca_format: ImageFormat,
    /// Output directory for `metrics.jsonl` and `pca/`.
    #[arg(long)]
    pub out: PathBuf,
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub image_id: u32,
    pub coding_rate: f64,
    /// Absent when no set covers two pixels.
    pub intra_set_cosine: Option<f64>,
    pub cross_set_cosine: Option<f64>,
    pub epsilon: f64,
}

fn embedding_ids(dir: &Path) -> Result<Vec<u32>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "f32") {
            if let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()) {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

fn write_rgb(path: &Path, rgb: &RgbMap, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Ppm => write_bytes(path, &rgb.to_ppm()),
        ImageFormat::Png => {
            let bytes: Vec<u8> = rgb
                .data
                .iter()
                .flat_map(|px| px.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
                .collect();
            let img = image::RgbImage::from_raw(rgb.width, rgb.height, bytes)
                .ok_or_else(|| Error::invalid("RGB buffer does not match its size"))?;
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            img.save_with_format(path, image::ImageFormat::Png).map_err(|source| Error::Image {
                path: path.into(),
                source,
            })
        }
    }
}

pub fn metrics(args: &MetricsArgs) -> Result<Value> {
    let cloud = read_ply(&args.scene)?;
    let partition = load_partition(&args.sets, cloud.len())?;
    let categories = match &args.labels {
        Some(path) => {
            let labels = read_labels(path)?;
            if labels.len() != cloud.len() {
                return Err(Error::format(path, None, "label count differs from the cloud"));
            }
            GeoSetPartition::from_labels(&labels)
        }
        None => partition.clone(),
    };
    let views = load_views(&args.cameras, &depth_dir_for(&args.cameras, args.depth_dir.as_deref()))?;
    let by_id: BTreeMap<u32, &CameraView> = views.iter().map(|v| (v.view_id, v)).collect();
    let ids = embedding_ids(&args.embeddings)?;
    if ids.is_empty() {
        return Err(Error::Empty("no embeddings found"));
    }
    let ext = match args.pca_format {
        ImageFormat::Png => "png",
        ImageFormat::Ppm => "ppm",
    };
    let pca_dir = args.out.join("pca");
    let mut records = Vec::with_capacity(ids.len());
    for id in ids {
        let view = by_id.get(&id).ok_or(Error::MissingView(id))?;
        let f = normalize(&read_features(&view_file(&args.embeddings, id, "f32"))?);
        let sets = project_geo_sets(&cloud, &partition, view, args.depth_threshold)?;
        let cats = project_geo_sets(&cloud, &categories, view, args.depth_threshold)?;
        records.push(MetricRecord {
            image_id: id,
            coding_rate: per_image_coding_rate(&f, &cats.label_map(), args.epsilon)?,
            intra_set_cosine: intra_set_cosine(&f, &sets).ok(),
            cross_set_cosine: cross_set_cosine(&f, &sets).ok(),
            epsilon: args.epsilon,
        });
        if f.channels >= 3 {
            write_rgb(&view_file(&pca_dir, id, ext), &pca_embed(&f)?, args.pca_format)?;
        }
    }
    let path = args.out.join("metrics.jsonl");
    write_json_lines(&path, &records)?;
    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    Ok(json!({
        "command": "metrics",
        "images": records.len(),
        "epsilon": args.epsilon,
        "coding_rate": mean(records.iter().map(|r| r.coding_rate).collect()),
        "intra_set_cosine": mean(records.iter().filter_map(|r| r.intra_set_cosine).collect()),
        "cross_set_cosine": mean(records.iter().filter_map(|r| r.cross_set_cosine).collect()),
        "outputs": { "metrics": path_str(&path), "pca": path_str(&pca_dir) },
    }))
}

#[derive(Debug, Clone, clap::Args)]
pub struct PipelineArgs {
    /// Pipeline configuration (JSON with a mandatory `seed`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn strip_outputs(mut v: Value) -> Value {
    if let Some(map) = v.as_object_mut() {
        map.remove("outputs");
    }
    v
}

/// Runs every stage in order, each reading the files the previous one
/// wrote. `<out>/summary.json` collects the stage summaries without paths
/// so that it only depends on the inputs and the seed.
pub fn pipeline(args: &PipelineArgs) -> Result<Value> {
    let mut config = match &args.config {
        Some(path) => read_seeded_config(path)?,
        None => PipelineConfig::with_seed(0),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| Error::invalid("pipeline needs an output directory (--out or `out`)"))?;
    let mut stages = serde_json::Map::new();

    let (scene, cameras, depth_dir) = match &config.scene {
        Some(scene) => {
            let cameras = config
                .cameras
                .clone()
                .ok_or_else(|| Error::invalid("`cameras` is required with `scene`"))?;
            let depth = depth_dir_for(&cameras, config.depth_dir.as_deref());
            (scene.clone(), cameras, depth)
        }
        None => {
            let dir = out.join("scene");
            let summary = gen_scene(&GenSceneArgs {
                config: None,
                seed: Some(config.seed),
                out: dir.clone(),
                frames: None,
                size: None,
                depth_format: None,
                scene: Some(config.synthetic.clone()),
            })?;
            stages.insert("gen-scene".into(), strip_outputs(summary));
            (dir.join("scene.ply"), dir.join("cameras.json"), dir.join("depth"))
        }
    };
    let labels = config.labels.clone().or_else(|| config.scene.is_none().then(|| out.join("scene/labels.gsl")));

    let sets = out.join("sets.gsl");
    let summary = segment(&SegmentArgs {
        input: scene.clone(),
        config: None,
        k: None,
        min_size: None,
        convexity_relaxation: false,
        normal_k: config.graph.normal_k,
        graph_k: config.graph.graph_k,
        out: sets.clone(),
        params: Some(config.segmentation),
    })?;
    stages.insert("segment".into(), strip_outputs(summary));

    let pairs = out.join("pairs.json");
    let summary = mine_pairs(&MinePairsArgs {
        cameras: cameras.clone(),
        depth_dir: Some(depth_dir.clone()),
        stride: config.mining.frame_stride,
        overlap_min: config.mining.overlap_min,
        depth_threshold: config.mining.depth_threshold,
        out: pairs.clone(),
    })?;
    stages.insert("mine-pairs".into(), strip_outputs(summary));

    let summary = project(&ProjectArgs {
        scene: scene.clone(),
        sets: sets.clone(),
        cameras: cameras.clone(),
        depth_dir: Some(depth_dir.clone()),
        pairs: Some(pairs.clone()),
        depth_threshold: config.mining.depth_threshold,
        out: out.join("projections.jsonl"),
    })?;
    stages.insert("project".into(), strip_outputs(summary));

    let train_dir = out.join("train");
    let summary = train(&TrainArgs {
        config: None,
        seed: Some(config.seed),
        scene: scene.clone(),
        sets: sets.clone(),
        cameras: cameras.clone(),
        depth_dir: Some(depth_dir.clone()),
        pairs: Some(pairs),
        depth_threshold: config.mining.depth_threshold,
        min_pixels: config.matching.min_pixels,
        pixel_cap: config.matching.pixel_cap,
        out: train_dir.clone(),
        train: Some(config.train.clone()),
    })?;
    stages.insert("train".into(), strip_outputs(summary));

    let summary = metrics(&MetricsArgs {
        embeddings: train_dir.join("embeddings"),
        scene,
        sets,
        labels,
        cameras,
        depth_dir: Some(depth_dir),
        epsilon: config.metrics.epsilon,
        depth_threshold: config.mining.depth_threshold,
        pca_format: config.pca_format,
        out: out.join("metrics"),
    })?;
    let final_metrics = strip_outputs(summary);
    stages.insert("metrics".into(), final_metrics.clone());

    let record = json!({
        "command": "pipeline",
        "seed": config.seed,
        "intra_set_cosine": final_metrics["intra_set_cosine"],
        "cross_set_cosine": final_metrics["cross_set_cosine"],
        "coding_rate": final_metrics["coding_rate"],
        "stages": stages,
    });
    write_json(&out.join("summary.json"), &record)?;
    let mut stdout = record;
    stdout["outputs"] = json!({ "dir": path_str(&out), "summary": path_str(&out.join("summary.json")) });
    Ok(stdout)
}

/// Reads back a projection file written by [`project`].
pub fn read_projections(path: &Path) -> Result<Vec<ViewProjection>> {
    read_json_lines(path)
}

/// Reads back the embeddings written by [`train`].
pub fn read_embeddings(dir: &Path) -> Result<EmbeddingTable> {
    let mut views = BTreeMap::new();
    let mut channels = 0;
    for id in embedding_ids(dir)? {
        let map = read_features(&view_file(dir, id, "f32"))?;
        channels = map.channels;
        views.insert(id, map);
    }
    if views.is_empty() {
        return Err(Error::Empty("no embeddings found"));
    }
    Ok(EmbeddingTable { channels, views })
}
