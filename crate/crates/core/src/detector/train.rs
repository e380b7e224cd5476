use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cell_offset, sigmoid, Architecture, DetectorModel, GroundTruth, ParamGrads, RawGrid};
use crate::boxes::BBox;
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone)]
pub struct DetectorSample {
    pub image: Image,
    pub gt: GroundTruth,
}

/// Minibatch SGD with momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Learning rate is multiplied by 0.1 at each of these epochs.
    pub decay_epochs: Vec<usize>,
    /// Weight of the objectness loss on cells without the target.
    pub noobj_weight: f64,
    /// Weight of the smooth-L1 box loss at the target cell.
    pub coord_weight: f64,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    /// Initial objectness bias of the output layer.
    pub objectness_prior: f64,
    /// Objectness target at responsible cells; below 1 keeps confidences
    /// away from saturation.
    pub positive_target: f64,
    /// Reject datasets without any positive sample.
    pub require_positives: bool,
    pub seed: u64,
}

impl Default for DetectorTrainConfig {
    fn default() -> Self {
        DetectorTrainConfig {
            epochs: 20,
            batch_size: 16,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            decay_epochs: vec![14, 18],
            noobj_weight: 1.0,
            coord_weight: 2.0,
            clip_norm: 10.0,
            objectness_prior: -3.0,
            positive_target: 0.9,
            require_positives: true,
            seed: 0,
        }
    }
}

/// Loss values recorded during training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean loss of each optimizer step.
    pub step_losses: Vec<f64>,
    /// Mean objectness loss at the target cell for each step (NaN when the
    /// batch had no positive).
    pub step_positive_obj: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

fn bce_with_logits(logit: f64, target: f64) -> (f64, f64) {
    // log(1 + e^x) - t x, computed stably; gradient sigmoid(x) - t.
    let loss = logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p();
    (loss, sigmoid(logit) - target)
}

fn smooth_l1(d: f64) -> (f64, f64) {
    if d.abs() < 1.0 {
        (0.5 * d * d, d)
    } else {
        (d.abs() - 0.5, d.signum())
    }
}

/// Cells responsible for a box: the one containing its center plus the
/// horizontal and vertical neighbours nearest to it. Each entry is
/// `(cell, x offset, y offset)` with offsets in cell units relative to that
/// cell's corner.
pub(crate) fn target_cells(b: &BBox, grid: usize, image_size: usize) -> Vec<(usize, f64, f64)> {
    let cell = image_size as f64 / grid as f64;
    let (gx, gy) = (b.cx / cell, b.cy / cell);
    let col = (gx.floor().max(0.0) as usize).min(grid - 1);
    let row = (gy.floor().max(0.0) as usize).min(grid - 1);
    let mut cells = vec![(row, col)];
    let side = |g: f64, i: usize| -> Option<usize> {
        if g - (i as f64) < 0.5 {
            i.checked_sub(1)
        } else {
            Some(i + 1).filter(|&j| j < grid)
        }
    };
    if let Some(c) = side(gx, col) {
        cells.push((row, c));
    }
    if let Some(r) = side(gy, row) {
        cells.push((r, col));
    }
    let lim = 1.5 - 1e-3;
    cells
        .into_iter()
        .map(|(r, c)| {
            let fx = (gx - c as f64).clamp(-0.5 + 1e-3, lim);
            let fy = (gy - r as f64).clamp(-0.5 + 1e-3, lim);
            (r * grid + c, fx, fy)
        })
        .collect()
}

/// Per-image detection loss and its gradient on the raw grid. Returns
/// `(loss, mean positive-cell objectness loss, gradient)`.
pub(crate) fn detection_loss(
    grid: &RawGrid,
    gt: &GroundTruth,
    arch: &Architecture,
    cfg: &DetectorTrainConfig,
) -> (f64, Option<f64>, RawGrid) {
    let mut grad = RawGrid::zeros(grid.size);
    let positives: Vec<(usize, f64, f64)> = gt
        .person_box()
        .map(|b| target_cells(&b, grid.size, arch.input_size))
        .unwrap_or_default();
    let mut loss = 0.0;
    let mut pos_obj = Vec::new();
    for cell in 0..grid.cells() {
        let is_pos = positives.iter().any(|p| p.0 == cell);
        let (l, g) = bce_with_logits(grid.objectness(cell), if is_pos { cfg.positive_target } else { 0.0 });
        let w = if is_pos { 1.0 } else { cfg.noobj_weight };
        loss += w * l;
        *grad.at_mut(0, cell) = w * g;
        if is_pos {
            pos_obj.push(l);
        }
    }
    if let Some(b) = gt.person_box() {
        let anchor = arch.anchor();
        for &(cell, fx, fy) in &positives {
            let targets = [fx, fy, (b.w / anchor).ln(), (b.h / anchor).ln()];
            for (k, &t) in targets.iter().enumerate() {
                let raw = grid.at(k + 1, cell);
                let (value, dvalue) = if k < 2 {
                    let s = sigmoid(raw);
                    (cell_offset(raw), 2.0 * s * (1.0 - s))
                } else {
                    (raw, 1.0)
                };
                let (l, g) = smooth_l1(value - t);
                loss += cfg.coord_weight * l;
                *grad.at_mut(k + 1, cell) = cfg.coord_weight * g * dvalue;
            }
        }
    }
    let pos_mean = (!pos_obj.is_empty()).then(|| pos_obj.iter().sum::<f64>() / pos_obj.len() as f64);
    (loss, pos_mean, grad)
}

/// Trains a detector from seed-initialized weights.
///
/// Objectness uses binary cross-entropy on every cell (target 1 at the cells
/// responsible for the ground truth); box parameters use smooth-L1 at those
/// cells. Training is single-threaded and bit-reproducible for a seed.
pub fn train_detector(
    dataset: &[DetectorSample],
    arch: Architecture,
    cfg: &DetectorTrainConfig,
) -> Result<(DetectorModel, TrainTrace)> {
    if dataset.is_empty() {
        return Err(Error::Dataset("empty detector training set".into()));
    }
    let positives = dataset
        .iter()
        .filter(|s| matches!(s.gt, GroundTruth::Person(_)))
        .count();
    if positives == 0 && cfg.require_positives {
        return Err(Error::Dataset("detector training set has no positives".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::config("detector.batch_size", "epochs and batch size must be > 0"));
    }
    if !(cfg.positive_target > 0.5 && cfg.positive_target <= 1.0) {
        return Err(Error::config("detector.positive_target", "must be in (0.5, 1]"));
    }

    let mut model = DetectorModel::seeded(arch.clone(), cfg.seed)?;
    model.set_objectness_bias(cfg.objectness_prior);
    let mut velocity: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_d37e_c702);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let decays = cfg.decay_epochs.iter().filter(|&&e| epoch >= e).count();
        let lr = cfg.learning_rate * 0.1f64.powi(decays as i32);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<ParamGrads> = None;
            let mut batch_loss = 0.0;
            let mut pos_losses = Vec::new();
            for &i in batch {
                let sample = &dataset[i];
                let (grid, tr) = model.forward_traced(&sample.image)?;
                let (loss, pos, seed) = detection_loss(&grid, &sample.gt, &arch, cfg);
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!("detector loss {loss} at epoch {epoch}")));
                }
                batch_loss += loss;
                pos_losses.extend(pos);
                let (_, g) = model.backward(&tr, &seed, true)?;
                let g = g.expect("parameter gradients requested");
                acc = Some(match acc {
                    None => g,
                    Some(mut a) => {
                        for (x, y) in a.weight.iter_mut().zip(&g.weight) {
                            *x += y;
                        }
                        for (x, y) in a.bias.iter_mut().zip(&g.bias) {
                            for (u, v) in x.iter_mut().zip(y) {
                                *u += v;
                            }
                        }
                        a
                    }
                });
            }
            let inv = 1.0 / batch.len() as f64;
            let grads = acc.expect("non-empty batch");
            let mut flat: Vec<Vec<f64>> = Vec::new();
            for (w, b) in grads.weight.into_iter().zip(grads.bias) {
                flat.push(Array2::into_raw_vec_and_offset(w).0);
                flat.push(b);
            }
            let mut norm_sq = 0.0;
            for g in &mut flat {
                for v in g.iter_mut() {
                    *v *= inv;
                    norm_sq += *v * *v;
                }
            }
            let clip = if cfg.clip_norm > 0.0 && norm_sq.sqrt() > cfg.clip_norm {
                cfg.clip_norm / norm_sq.sqrt()
            } else {
                1.0
            };
            for ((param, vel), g) in model.tensors_mut().into_iter().zip(&mut velocity).zip(&flat) {
                for ((p, v), &gi) in param.iter_mut().zip(vel.iter_mut()).zip(g) {
                    let step = gi * clip + cfg.weight_decay * *p;
                    *v = cfg.momentum * *v + step;
                    *p -= lr * *v;
                }
            }
            trace.step_losses.push(batch_loss * inv);
            trace.step_positive_obj.push(if pos_losses.is_empty() {
                f64::NAN
            } else {
                pos_losses.iter().sum::<f64>() / pos_losses.len() as f64
            });
            epoch_loss += batch_loss;
        }
        let mean = epoch_loss / dataset.len() as f64;
        log::info!("detector {} epoch {epoch}: loss {mean:.4}", arch.name);
        trace.epoch_losses.push(mean);
    }
    model.round_to_f32();
    Ok((model, trace))
}
