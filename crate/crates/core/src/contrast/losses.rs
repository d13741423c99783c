use std::collections::BTreeMap;

use super::features::{Aggregator, FeatureMap, PointFeatures, SetKey};
use super::nce::{infonce, Combo};
use super::Temperature;
use crate::projection::{MatchIndex, Pixel, PixelPair, PixelPointMatch, SetTuple, ViewProjection};
use crate::{Error, Result};

/// Unit-norm tolerance for point features. Loose enough that finite
/// differences can probe the table.
const UNIT_TOLERANCE: f64 = 1e-3;

/// Loss with one gradient buffer per input, in argument order.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub gradients: Vec<Vec<f64>>,
}

/// Loss with gradients keyed by view id.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewLossOutput {
    pub loss: f64,
    pub gradients: BTreeMap<u32, Vec<f64>>,
}

fn check_map(map: &FeatureMap, what: &str) -> Result<()> {
    if !map.normalized {
        return Err(Error::invalid(format!("{what} feature map is not normalized")));
    }
    if map.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} feature map")));
    }
    Ok(())
}

fn check_pixel(map: &FeatureMap, p: Pixel) -> Result<usize> {
    if map.contains(p) {
        Ok(map.row(p))
    } else {
        Err(Error::invalid(format!("pixel ({}, {}) outside {}×{} map", p.u, p.v, map.width, map.height)))
    }
}

/// Pixel InfoNCE between views `m` and `n`: each matched pixel of `m` is
/// contrasted against the `n`-side pixels of every pair.
pub fn pixel_infonce(f_m: &FeatureMap, f_n: &FeatureMap, pairs: &[PixelPair], tau: Temperature) -> Result<LossOutput> {
    if pairs.is_empty() {
        return Err(Error::NoMatches("pixel pair list is empty"));
    }
    check_map(f_m, "anchor")?;
    check_map(f_n, "positive")?;
    if f_m.channels != f_n.channels {
        return Err(Error::invalid("channel counts differ"));
    }
    let mut anchors = Vec::with_capacity(pairs.len());
    let mut positives = Vec::with_capacity(pairs.len());
    for p in pairs {
        anchors.push(Combo::single(0, check_pixel(f_m, p.m)?));
        positives.push(Combo::single(1, check_pixel(f_n, p.n)?));
    }
    let (loss, gradients) = infonce(&[&f_m.data, &f_n.data], f_m.channels, &anchors, &positives, None, tau.get());
    Ok(LossOutput { loss, gradients })
}

/// Pixel InfoNCE with one shared denominator across the pixel pairs of
/// several view pairs.
pub fn pixel_infonce_multi(
    features: &BTreeMap<u32, FeatureMap>,
    matches: &[&MatchIndex],
    tau: Temperature,
) -> Result<ViewLossOutput> {
    let (ids, bufs, channels) = view_buffers(features)?;
    let slot = |view: u32| ids.iter().position(|&v| v == view).ok_or(Error::MissingView(view));
    let mut anchors = Vec::new();
    let mut positives = Vec::new();
    for mi in matches {
        let (sm, sn) = (slot(mi.view_m)?, slot(mi.view_n)?);
        let (fm, fn_) = (&features[&mi.view_m], &features[&mi.view_n]);
        for p in &mi.pixel_pairs {
            anchors.push(Combo::single(sm, check_pixel(fm, p.m)?));
            positives.push(Combo::single(sn, check_pixel(fn_, p.n)?));
        }
    }
    if anchors.is_empty() {
        return Err(Error::NoMatches("pixel pair list is empty"));
    }
    let (loss, grads) = infonce(&bufs, channels, &anchors, &positives, None, tau.get());
    Ok(ViewLossOutput {
        loss,
        gradients: ids.into_iter().zip(grads).collect(),
    })
}

fn view_buffers(features: &BTreeMap<u32, FeatureMap>) -> Result<(Vec<u32>, Vec<&[f64]>, usize)> {
    let channels = features
        .values()
        .next()
        .map(|f| f.channels)
        .ok_or(Error::Empty("no feature maps"))?;
    for (id, f) in features {
        check_map(f, &format!("view {id}"))?;
        if f.channels != channels {
            return Err(Error::invalid(format!("view {id} has {} channels, expected {channels}", f.channels)));
        }
    }
    Ok((
        features.keys().copied().collect(),
        features.values().map(|f| f.data.as_slice()).collect(),
        channels,
    ))
}

/// Set InfoNCE over geometric consistency sets.
///
/// For every tuple `(i, m, n)` the anchor is `agg_anchor` over the pixels of
/// set `i` in view `m` and the positive is `agg_positive` over its pixels in
/// view `n`. Every other tuple `(k, l, n')` contributes a negative built from
/// set `k` in view `n'`. Negatives use `agg_positive` when both aggregators
/// agree and `agg_anchor` otherwise, so the asymmetric configuration
/// (arbitrary point / mean) scores anchors and negatives on single points and
/// only the positive on the mean.
pub fn set_infonce(
    features: &BTreeMap<u32, FeatureMap>,
    projections: &BTreeMap<u32, ViewProjection>,
    tuples: &[SetTuple],
    tau: Temperature,
    agg_anchor: Aggregator,
    agg_positive: Aggregator,
) -> Result<ViewLossOutput> {
    if tuples.is_empty() {
        return Err(Error::NoMatches("set tuple list is empty"));
    }
    let (ids, bufs, channels) = view_buffers(features)?;
    let slot = |view: u32| ids.iter().position(|&v| v == view).ok_or(Error::MissingView(view));
    let pixels = |t: &SetTuple, view: u32| -> Result<Vec<Pixel>> {
        let proj = projections.get(&view).ok_or(Error::MissingView(view))?;
        let px: Vec<Pixel> = proj.pixels(t.set).collect();
        if px.is_empty() {
            return Err(Error::MissingSet {
                set: t.set,
                view_m: t.view_m,
                view_n: t.view_n,
                missing_view: view,
            });
        }
        Ok(px)
    };

    let symmetric = agg_anchor == agg_positive;
    let mut anchors = Vec::with_capacity(tuples.len());
    let mut positives = Vec::with_capacity(tuples.len());
    let mut negatives = Vec::new();
    for t in tuples {
        let (sm, sn) = (slot(t.view_m)?, slot(t.view_n)?);
        let (pm, pn) = (pixels(t, t.view_m)?, pixels(t, t.view_n)?);
        let key_m = SetKey {
            set: t.set,
            view: t.view_m,
        };
        let key_n = SetKey {
            set: t.set,
            view: t.view_n,
        };
        anchors.push(agg_anchor.combo(&features[&t.view_m], sm, &pm, key_m)?);
        positives.push(agg_positive.combo(&features[&t.view_n], sn, &pn, key_n)?);
        if !symmetric {
            negatives.push(agg_anchor.combo(&features[&t.view_n], sn, &pn, key_n)?);
        }
    }
    let neg = (!symmetric).then_some(negatives.as_slice());
    let (loss, grads) = infonce(&bufs, channels, &anchors, &positives, neg, tau.get());
    Ok(ViewLossOutput {
        loss,
        gradients: ids.into_iter().zip(grads).collect(),
    })
}

/// Pixel-to-point InfoNCE: each matched pixel is contrasted against the
/// point features of all matches. Gradients are `[pixel map, point table]`.
pub fn pixel_point_infonce(
    f_2d: &FeatureMap,
    points: &PointFeatures,
    matches: &[PixelPointMatch],
    tau: Temperature,
) -> Result<LossOutput> {
    if matches.is_empty() {
        return Err(Error::NoMatches("pixel-point match list is empty"));
    }
    check_map(f_2d, "pixel")?;
    if points.channels != f_2d.channels {
        return Err(Error::invalid("pixel and point channel counts differ"));
    }
    let mut anchors = Vec::with_capacity(matches.len());
    let mut positives = Vec::with_capacity(matches.len());
    for m in matches {
        let idx = m.point as usize;
        if idx >= points.len() {
            return Err(Error::invalid(format!("point {idx} outside feature table")));
        }
        let norm = points.row(idx).iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!("point feature {idx} is not unit length")));
        }
        anchors.push(Combo::single(0, check_pixel(f_2d, m.pixel)?));
        positives.push(Combo::single(1, idx));
    }
    let (loss, gradients) = infonce(&[&f_2d.data, &points.data], f_2d.channels, &anchors, &positives, None, tau.get());
    Ok(LossOutput { loss, gradients })
}
