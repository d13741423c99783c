mod common;

use common::toy_training_set;
use geoset::metrics::CodingRateParams;
use geoset::trainer::{evaluate, initial_table, poly_lr, run_two_stage, train_from, LossKind, TrainConfig};

#[test]
fn toy_scene_separates_the_sets() {
    let data = toy_training_set(7);
    let config = TrainConfig::default();
    let before = evaluate(&initial_table(&data, &config).unwrap(), &data, CodingRateParams::default()).unwrap();
    let out = run_two_stage(&data, &config).unwrap();
    let after = evaluate(&out.table, &data, CodingRateParams::default()).unwrap();
    assert!(before.intra_set_cosine < 0.3, "{before:?}");
    assert!(after.intra_set_cosine > 0.9, "{after:?}");
    assert!(after.cross_set_cosine < 0.5, "{after:?}");
    assert!(after.coding_rate < before.coding_rate);
}

#[test]
fn runs_are_bit_identical() {
    let data = toy_training_set(3);
    let config = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    let a = run_two_stage(&data, &config).unwrap();
    let b = run_two_stage(&data, &config).unwrap();
    assert_eq!(serde_json::to_string(&a.log).unwrap(), serde_json::to_string(&b.log).unwrap());
    assert_eq!(a.table, b.table);
    let c = run_two_stage(&data, &TrainConfig { seed: 12, ..config }).unwrap();
    assert_ne!(a.table, c.table);
}

#[test]
fn stages_log_only_their_own_losses() {
    let data = toy_training_set(1);
    let out = run_two_stage(&data, &TrainConfig::default()).unwrap();
    assert!(out.log.iter().any(|r| r.stage == 1) && out.log.iter().any(|r| r.stage == 2));
    for r in &out.log {
        match r.stage {
            1 => assert!(matches!(r.loss_kind, LossKind::Pixel | LossKind::PixelPoint)),
            2 => assert_eq!(r.loss_kind, LossKind::Set),
            s => panic!("unexpected stage {s}"),
        }
    }
    // Stage 1 steps come first and each epoch's last record carries the
    // probe.
    let first_set = out.log.iter().position(|r| r.stage == 2).unwrap();
    assert!(out.log[first_set..].iter().all(|r| r.stage == 2));
    let config = TrainConfig::default();
    let tagged = out.log.iter().filter(|r| r.intra_set_cosine.is_some()).count();
    assert_eq!(tagged, config.epochs_stage1 + config.epochs_stage2);
}

/// Removing the set tuples cannot change stage 1, and removing the pixel
/// pairs cannot change stage 2.
#[test]
fn stages_are_isolated() {
    let data = toy_training_set(2);
    let only1 = TrainConfig {
        epochs_stage2: 0,
        ..TrainConfig::default()
    };
    let mut no_sets = data.clone();
    no_sets.pairs.iter_mut().for_each(|m| m.set_tuples.clear());
    assert_eq!(run_two_stage(&data, &only1).unwrap().table, run_two_stage(&no_sets, &only1).unwrap().table);

    let only2 = TrainConfig {
        epochs_stage1: 0,
        ..TrainConfig::default()
    };
    let mut no_pixels = data.clone();
    no_pixels.pairs.iter_mut().for_each(|m| m.pixel_pairs.clear());
    let a = run_two_stage(&data, &only2).unwrap();
    assert_eq!(a.table, run_two_stage(&no_pixels, &only2).unwrap().table);
    assert!(a.log.iter().all(|r| r.loss_kind == LossKind::Set));
}

#[test]
fn learning_rate_restarts_each_stage() {
    let data = toy_training_set(4);
    let config = TrainConfig::default();
    let out = run_two_stage(&data, &config).unwrap();
    for stage in [1, 2] {
        let lrs: Vec<f64> = out.log.iter().filter(|r| r.stage == stage).map(|r| r.lr).collect();
        assert_eq!(lrs[0], config.base_lr);
        assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
    }
    assert_eq!(poly_lr(0.1, 0, 10, 0.9), 0.1);
    assert_eq!(poly_lr(0.1, 10, 10, 0.9), 0.0);
}

fn smoothed(losses: &[f64], window: usize) -> Vec<f64> {
    let alpha = 2.0 / (window as f64 + 1.0);
    let mut out = Vec::with_capacity(losses.len());
    let mut s = losses[0];
    for &l in losses {
        s = alpha * l + (1.0 - alpha) * s;
        out.push(s);
    }
    out
}

/// Exponentially smoothed stage-2 loss (span 20) never rises more than 5 %
/// above its running minimum.
#[test]
fn smoothed_set_loss_trends_down() {
    let data = toy_training_set(5);
    for epochs_stage2 in [2, 10] {
        let config = TrainConfig {
            epochs_stage2,
            ..TrainConfig::default()
        };
        let out = run_two_stage(&data, &config).unwrap();
        let losses: Vec<f64> = out.log.iter().filter(|r| r.stage == 2).map(|r| r.loss).collect();
        let s = smoothed(&losses, 20);
        let mut best = f64::INFINITY;
        for (i, v) in s.iter().enumerate() {
            assert!(*v <= best * 1.05, "step {i}: {v} above running minimum {best}");
            best = best.min(*v);
        }
        assert!(s.last().unwrap() < &s[0]);
    }
}

#[test]
fn training_continues_from_a_given_table() {
    let data = toy_training_set(6);
    let config = TrainConfig::default();
    let table = initial_table(&data, &config).unwrap();
    assert_eq!(train_from(&data, &config, table).unwrap().table, run_two_stage(&data, &config).unwrap().table);
}

#[test]
fn empty_dataset_is_an_error() {
    let mut data = toy_training_set(0);
    data.pairs.clear();
    assert_eq!(run_two_stage(&data, &TrainConfig::default()).unwrap_err().kind(), "empty");
}
