//! Two-stage contrastive training over per-pixel embedding tables.
//!
//! Stage 1 optimises pixel InfoNCE (plus pixel-to-point InfoNCE when point
//! features are supplied); stage 2 optimises set InfoNCE alone. Each stage
//! runs plain SGD under its own PolyLR schedule.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contrast::{
    normalize, pixel_infonce, pixel_infonce_multi, pixel_point_infonce, set_infonce, Aggregator, FeatureMap,
    PointFeatures, Temperature, NORM_EPSILON,
};
use crate::metrics::{cross_set_cosine, intra_set_cosine, per_image_coding_rate, CodingRateParams};
use crate::projection::{pixel_point_matches, MatchIndex, ViewProjection};
use crate::{Error, Result};

/// Where InfoNCE negatives come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeScope {
    /// One denominator per view pair.
    #[default]
    PerPair,
    /// One denominator shared by every pair in the batch.
    Batch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub base_lr: f64,
    /// View pairs per step.
    pub batch_size: usize,
    pub epochs_stage1: usize,
    pub epochs_stage2: usize,
    pub poly_power: f64,
    pub tau: Temperature,
    pub seed: u64,
    pub anchor_aggregator: Aggregator,
    pub positive_aggregator: Aggregator,
    pub channels: usize,
    /// Standard deviation of the Gaussian table initialisation.
    pub init_scale: f64,
    /// SGD momentum; `None` is plain SGD.
    pub momentum: Option<f64>,
    /// Pixel pairs (and pixel-point matches) sampled per view pair per step.
    pub max_pixel_pairs: usize,
    pub negatives: NegativeScope,
    /// Rescale every raw pixel vector to the initial expected norm
    /// `init_scale·√channels` when a stage starts. Normalised features, and
    /// so every loss, are unchanged by this.
    pub rescale_at_stage_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 0.1,
            batch_size: 4,
            epochs_stage1: 5,
            epochs_stage2: 2,
            poly_power: 0.9,
            tau: Temperature::default(),
            seed: 0,
            anchor_aggregator: Aggregator::Mean,
            positive_aggregator: Aggregator::Mean,
            channels: 16,
            init_scale: 1e-4,
            momentum: None,
            max_pixel_pairs: 256,
            negatives: NegativeScope::PerPair,
            rescale_at_stage_start: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) {
            return Err(Error::invalid("base_lr must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.channels == 0 {
            return Err(Error::invalid("channels must be at least 1"));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::invalid("init_scale must be positive"));
        }
        if self.max_pixel_pairs == 0 {
            return Err(Error::invalid("max_pixel_pairs must be at least 1"));
        }
        if let Some(m) = self.momentum {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::invalid("momentum must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// Learnable raw (pre-normalisation) features, one map per view.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub channels: usize,
    pub views: BTreeMap<u32, FeatureMap>,
}

impl EmbeddingTable {
    /// Gaussian initialisation, drawn view by view in id order.
    pub fn random(dims: &BTreeMap<u32, (u32, u32)>, channels: usize, scale: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, scale).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let views = dims
            .iter()
            .map(|(&id, &(height, width))| {
                let n = height as usize * width as usize * channels;
                let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
                (id, FeatureMap::new(height, width, channels, data).expect("shape is consistent"))
            })
            .collect();
        Ok(EmbeddingTable { channels, views })
    }

    /// Sets every non-zero pixel vector to length `norm`.
    pub fn rescale(&mut self, norm: f64) {
        let c = self.channels;
        for map in self.views.values_mut() {
            for row in map.data.chunks_exact_mut(c) {
                let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > NORM_EPSILON {
                    row.iter_mut().for_each(|x| *x *= norm / n);
                }
            }
        }
    }

    pub fn normalized(&self) -> BTreeMap<u32, FeatureMap> {
        self.views.iter().map(|(&id, f)| (id, normalize(f))).collect()
    }
}

/// `base · (1 − iter/max_iter)^power`; `iter` is clamped to `max_iter` and
/// `max_iter` to at least 1.
pub fn poly_lr(base: f64, iter: usize, max_iter: usize, power: f64) -> f64 {
    let max_iter = max_iter.max(1);
    let frac = iter.min(max_iter) as f64 / max_iter as f64;
    base * (1.0 - frac).powf(power)
}

/// Pulls a gradient with respect to `normalize(raw)` back to `raw`:
/// `(g − n (n·g)) / ‖v‖` per pixel.
pub fn chain_normalize(raw: &FeatureMap, grad: &[f64]) -> Vec<f64> {
    let c = raw.channels;
    let mut out = vec![0.0; grad.len()];
    for ((v, g), o) in raw.data.chunks_exact(c).zip(grad.chunks_exact(c)).zip(out.chunks_exact_mut(c)) {
        if g.iter().all(|x| *x == 0.0) {
            continue;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < NORM_EPSILON {
            // normalize() divides by the floor, so the map is linear here.
            o.iter_mut().zip(g).for_each(|(o, g)| *o = g / NORM_EPSILON);
            continue;
        }
        let ng: f64 = v.iter().zip(g).map(|(x, y)| x * y).sum::<f64>() / norm;
        for ((o, x), y) in o.iter_mut().zip(v).zip(g) {
            *o = (y - x / norm * ng) / norm;
        }
    }
    out
}

/// Optimiser state.
#[derive(Debug, Clone, Default)]
pub struct Sgd {
    pub momentum: Option<f64>,
    velocity: BTreeMap<u32, Vec<f64>>,
}

impl Sgd {
    pub fn new(momentum: Option<f64>) -> Self {
        Sgd {
            momentum,
            velocity: BTreeMap::new(),
        }
    }
}

/// One SGD update. `grads` are with respect to the normalised features of
/// each view and are chained through the normalisation here.
pub fn sgd_step(table: &mut EmbeddingTable, grads: &BTreeMap<u32, Vec<f64>>, lr: f64, sgd: &mut Sgd) -> Result<()> {
    for (id, g) in grads {
        let raw = table.views.get(id).ok_or(Error::MissingView(*id))?;
        if g.len() != raw.data.len() {
            return Err(Error::invalid(format!("gradient for view {id} has the wrong shape")));
        }
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient of view {id} at pixel {} channel {}",
                i / raw.channels,
                i % raw.channels
            )));
        }
    }
    for (id, g) in grads {
        let raw = table.views.get_mut(id).expect("checked above");
        let mut step = chain_normalize(raw, g);
        if let Some(mu) = sgd.momentum {
            let vel = sgd.velocity.entry(*id).or_insert_with(|| vec![0.0; step.len()]);
            for (v, s) in vel.iter_mut().zip(step.iter_mut()) {
                *v = mu * *v + *s;
                *s = *v;
            }
        }
        if let Some(i) = step.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("chained gradient of view {id} at index {i}")));
        }
        raw.data.iter_mut().zip(&step).for_each(|(p, s)| *p -= lr * s);
    }
    Ok(())
}

/// Everything the trainer consumes.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    /// Projection of the geometric consistency sets into every view.
    pub projections: BTreeMap<u32, ViewProjection>,
    /// Match index of every mined view pair.
    pub pairs: Vec<MatchIndex>,
    /// Optional per-point features for the pixel-to-point loss.
    pub point_features: Option<PointFeatures>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Pixel,
    PixelPoint,
    Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub stage: u8,
    pub epoch: usize,
    /// Step index within the stage.
    pub step: usize,
    pub loss_kind: LossKind,
    pub loss: f64,
    pub lr: f64,
    /// Mean intra-set cosine over all views, on the last step of each epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intra_set_cosine: Option<f64>,
}

/// Snapshot of representation quality over a training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub intra_set_cosine: f64,
    pub cross_set_cosine: f64,
    /// Mean per-image coding rate with the sets as categories.
    pub coding_rate: f64,
    pub epsilon: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Result<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        Err(Error::Empty("no view produced a value"))
    } else {
        Ok(sum / n as f64)
    }
}

/// Mean over views of the intra-set and cross-set cosine and of the
/// per-image coding rate.
pub fn evaluate(table: &EmbeddingTable, data: &TrainingSet, coding: CodingRateParams) -> Result<Evaluation> {
    let maps = table.normalized();
    let pairs = || {
        data.projections
            .iter()
            .filter_map(|(id, p)| maps.get(id).map(|f| (f, p)))
    };
    Ok(Evaluation {
        intra_set_cosine: mean(pairs().filter_map(|(f, p)| intra_set_cosine(f, p).ok()))?,
        cross_set_cosine: mean(pairs().filter_map(|(f, p)| cross_set_cosine(f, p).ok()))?,
        coding_rate: mean(pairs().filter_map(|(f, p)| per_image_coding_rate(f, &p.label_map(), coding.epsilon).ok()))?,
        epsilon: coding.epsilon,
    })
}

fn mean_intra(table: &EmbeddingTable, data: &TrainingSet) -> Option<f64> {
    let maps = table.normalized();
    mean(
        data.projections
            .iter()
            .filter_map(|(id, p)| maps.get(id).and_then(|f| intra_set_cosine(f, p).ok())),
    )
    .ok()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    pub log: Vec<LogRecord>,
}

/// Stage-local seed stream.
fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed ^ 0x5851_f42d_4c95_7f2d, |acc, &p| {
        let mut x = acc ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
        x ^ (x >> 33)
    })
}

struct StepLosses {
    grads: BTreeMap<u32, Vec<f64>>,
    losses: BTreeMap<LossKind, (f64, usize)>,
}

impl StepLosses {
    fn new() -> Self {
        StepLosses {
            grads: BTreeMap::new(),
            losses: BTreeMap::new(),
        }
    }

    fn add(&mut self, kind: LossKind, loss: f64, grads: impl IntoIterator<Item = (u32, Vec<f64>)>) {
        let e = self.losses.entry(kind).or_insert((0.0, 0));
        e.0 += loss;
        e.1 += 1;
        for (id, g) in grads {
            match self.grads.get_mut(&id) {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => {
                    self.grads.insert(id, g);
                }
            }
        }
    }

    /// Turns the per-kind loss sums into means.
    fn finish(mut self) -> Self {
        for (loss, n) in self.losses.values_mut() {
            *loss /= *n as f64;
        }
        self
    }
}

struct Trainer<'a> {
    data: &'a TrainingSet,
    config: &'a TrainConfig,
    table: EmbeddingTable,
    log: Vec<LogRecord>,
}

impl Trainer<'_> {
    fn stage_step(&self, stage: u8, batch: &[&MatchIndex], step_seed: u64) -> Result<StepLosses> {
        let mut views: Vec<u32> = batch.iter().flat_map(|m| [m.view_m, m.view_n]).collect();
        views.sort_unstable();
        views.dedup();
        let maps: BTreeMap<u32, FeatureMap> = views
            .iter()
            .map(|id| {
                self.table
                    .views
                    .get(id)
                    .map(|f| (*id, normalize(f)))
                    .ok_or(Error::MissingView(*id))
            })
            .collect::<Result<_>>()?;
        let cfg = self.config;
        let mut out = StepLosses::new();
        let mut terms: Vec<(LossKind, f64, Vec<(u32, Vec<f64>)>)> = Vec::new();

        if stage == 1 {
            let sampled: Vec<MatchIndex> = batch
                .iter()
                .enumerate()
                .map(|(i, m)| sample_pairs(m, cfg.max_pixel_pairs, derive_seed(step_seed, &[i as u64])))
                .collect();
            match cfg.negatives {
                NegativeScope::PerPair => {
                    for m in sampled.iter().filter(|m| !m.pixel_pairs.is_empty()) {
                        let o = pixel_infonce(&maps[&m.view_m], &maps[&m.view_n], &m.pixel_pairs, cfg.tau)?;
                        let mut g = o.gradients.into_iter();
                        let gm = g.next().unwrap();
                        let gn = g.next().unwrap();
                        terms.push((LossKind::Pixel, o.loss, vec![(m.view_m, gm), (m.view_n, gn)]));
                    }
                }
                NegativeScope::Batch => {
                    let refs: Vec<&MatchIndex> = sampled.iter().filter(|m| !m.pixel_pairs.is_empty()).collect();
                    if !refs.is_empty() {
                        let o = pixel_infonce_multi(&maps, &refs, cfg.tau)?;
                        terms.push((LossKind::Pixel, o.loss, o.gradients.into_iter().collect()));
                    }
                }
            }
            if let Some(points) = &self.data.point_features {
                for (i, id) in views.iter().enumerate() {
                    let Some(proj) = self.data.projections.get(id) else { continue };
                    let matches = pixel_point_matches(proj, cfg.max_pixel_pairs, derive_seed(step_seed, &[1 << 32, i as u64]));
                    if matches.is_empty() {
                        continue;
                    }
                    let o = pixel_point_infonce(&maps[id], points, &matches, cfg.tau)?;
                    let g = o.gradients.into_iter().next().unwrap();
                    terms.push((LossKind::PixelPoint, o.loss, vec![(*id, g)]));
                }
            }
        } else {
            let groups: Vec<Vec<crate::projection::SetTuple>> = match cfg.negatives {
                NegativeScope::PerPair => batch.iter().map(|m| m.set_tuples.clone()).collect(),
                NegativeScope::Batch => vec![batch.iter().flat_map(|m| m.set_tuples.iter().copied()).collect()],
            };
            for tuples in groups.into_iter().filter(|t| !t.is_empty()) {
                let o = set_infonce(
                    &maps,
                    &self.data.projections,
                    &tuples,
                    cfg.tau,
                    cfg.anchor_aggregator,
                    cfg.positive_aggregator,
                )?;
                terms.push((LossKind::Set, o.loss, o.gradients.into_iter().collect()));
            }
        }

        // Each term enters with weight 1/(terms of its kind).
        let mut counts: BTreeMap<LossKind, usize> = BTreeMap::new();
        for (k, _, _) in &terms {
            *counts.entry(*k).or_default() += 1;
        }
        for (kind, loss, grads) in terms {
            let w = 1.0 / counts[&kind] as f64;
            out.add(
                kind,
                loss,
                grads.into_iter().map(|(id, mut g)| {
                    g.iter_mut().for_each(|x| *x *= w);
                    (id, g)
                }),
            );
        }
        Ok(out.finish())
    }

    fn run_stage(&mut self, stage: u8, epochs: usize) -> Result<()> {
        let cfg = self.config;
        let steps_per_epoch = self.data.pairs.len().div_ceil(cfg.batch_size);
        let max_iter = epochs * steps_per_epoch;
        let mut sgd = Sgd::new(cfg.momentum);
        let mut iter = 0;
        if cfg.rescale_at_stage_start && epochs > 0 {
            self.table.rescale(cfg.init_scale * (cfg.channels as f64).sqrt());
        }
        for epoch in 0..epochs {
            let mut order: Vec<usize> = (0..self.data.pairs.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[stage as u64, epoch as u64]));
            order.shuffle(&mut rng);
            let epoch_start = self.log.len();
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&MatchIndex> = chunk.iter().map(|&i| &self.data.pairs[i]).collect();
                let lr = poly_lr(cfg.base_lr, iter, max_iter, cfg.poly_power);
                let step_seed = derive_seed(cfg.seed, &[stage as u64, epoch as u64, iter as u64, 7]);
                let step = self.stage_step(stage, &batch, step_seed)?;
                sgd_step(&mut self.table, &step.grads, lr, &mut sgd)?;
                for (kind, (loss, _)) in step.losses {
                    self.log.push(LogRecord {
                        stage,
                        epoch,
                        step: iter,
                        loss_kind: kind,
                        loss,
                        lr,
                        intra_set_cosine: None,
                    });
                }
                iter += 1;
            }
            if self.log.len() > epoch_start {
                let cos = mean_intra(&self.table, self.data);
                let last_step = self.log.last().map(|r| r.step);
                for r in self.log[epoch_start..].iter_mut().filter(|r| Some(r.step) == last_step) {
                    r.intra_set_cosine = cos;
                }
            }
        }
        Ok(())
    }
}

fn sample_pairs(m: &MatchIndex, cap: usize, seed: u64) -> MatchIndex {
    if m.pixel_pairs.len() <= cap {
        return m.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, m.pixel_pairs.len(), cap).into_vec();
    keep.sort_unstable();
    MatchIndex {
        pixel_pairs: keep.into_iter().map(|i| m.pixel_pairs[i]).collect(),
        ..m.clone()
    }
}

/// Initial table for a training set, as [`run_two_stage`] would create it.
pub fn initial_table(data: &TrainingSet, config: &TrainConfig) -> Result<EmbeddingTable> {
    let dims = data
        .projections
        .iter()
        .map(|(&id, p)| (id, (p.height, p.width)))
        .collect();
    EmbeddingTable::random(&dims, config.channels, config.init_scale, derive_seed(config.seed, &[0xE4B]))
}

/// Runs stage 1 then stage 2 from a freshly initialised table.
pub fn run_two_stage(data: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let table = initial_table(data, config)?;
    train_from(data, config, table)
}

/// Like [`run_two_stage`] but starting from a given table.
pub fn train_from(data: &TrainingSet, config: &TrainConfig, table: EmbeddingTable) -> Result<TrainOutcome> {
    config.validate()?;
    if data.pairs.is_empty() {
        return Err(Error::Empty("training set has no view pairs"));
    }
    for m in &data.pairs {
        for id in [m.view_m, m.view_n] {
            if !data.projections.contains_key(&id) || !table.views.contains_key(&id) {
                return Err(Error::MissingView(id));
            }
        }
    }
    if let Some(p) = &data.point_features {
        if p.channels != config.channels {
            return Err(Error::invalid("point feature channels differ from the table"));
        }
    }
    let mut trainer = Trainer {
        data,
        config,
        table,
        log: Vec::new(),
    };
    trainer.run_stage(1, config.epochs_stage1)?;
    trainer.run_stage(2, config.epochs_stage2)?;
    Ok(TrainOutcome {
        table: trainer.table,
        log: trainer.log,
    })
}
