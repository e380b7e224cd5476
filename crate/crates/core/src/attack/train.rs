use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_dis, loss_total, loss_tv, sgd_step, step_decay, LossWeights};
use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::image::Image;
use crate::mesh::{LogoRegion, Mesh, TextureAtlas};
use crate::render::{
    augment, composite, pullback_gradient, rasterize, AugmentParams, CameraPose, RasterBuffer, SceneConfig,
};
use crate::seed::derived_rng;

/// How the camera distance is chosen for each training batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    Fixed(f64),
    /// Uniform in `[min, max]`, drawn once per batch.
    Uniform { min: f64, max: f64 },
}

impl Default for DistanceMode {
    fn default() -> Self {
        DistanceMode::Fixed(2.2)
    }
}

/// Optimizer schedule and sampling of the attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainPlan {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub batch_size: usize,
    pub azimuths: Vec<f64>,
    pub elevation: f64,
    pub distance: DistanceMode,
    pub seed: u64,
    /// Keep a copy of the atlas every this many epochs; 0 disables.
    pub snapshot_period: usize,
}

impl Default for TrainPlan {
    fn default() -> Self {
        TrainPlan {
            epochs: 100,
            learning_rate: 0.1,
            lr_decay: 0.1,
            lr_decay_every: 10,
            batch_size: 16,
            azimuths: vec![0.0],
            elevation: 6.0,
            distance: DistanceMode::default(),
            seed: 0,
            snapshot_period: 5,
        }
    }
}

impl TrainPlan {
    /// Multi-angle training views.
    pub fn multi_angle_azimuths() -> Vec<f64> {
        vec![-10.0, -5.0, 0.0, 5.0, 10.0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("plan.epochs", "must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("plan.learning_rate", "must be finite and > 0"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("plan.lr_decay", "must be in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("plan.batch_size", "must be > 0"));
        }
        if self.azimuths.is_empty() {
            return Err(Error::config("plan.azimuths", "must not be empty"));
        }
        for (i, &a) in self.azimuths.iter().enumerate() {
            CameraPose::new(2.2, self.elevation, a)
                .validate()
                .map_err(|_| Error::config(format!("plan.azimuths[{i}]"), "must be in [-180, 180]"))?;
        }
        match self.distance {
            DistanceMode::Fixed(d) if !(d > 0.0 && d.is_finite()) => {
                Err(Error::config("plan.distance.fixed", "must be > 0"))
            }
            DistanceMode::Uniform { min, max } if !(min > 0.0 && max >= min && max.is_finite()) => {
                Err(Error::config("plan.distance.uniform", "need 0 < min <= max"))
            }
            _ => Ok(()),
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        step_decay(self.learning_rate, self.lr_decay, self.lr_decay_every, epoch)
    }
}

/// Everything the attack renders and attacks.
#[derive(Debug, Clone, Copy)]
pub struct AttackScene<'a> {
    /// Same-topology body meshes; their own colors fill faces outside the
    /// region.
    pub meshes: &'a [Mesh],
    pub backgrounds: &'a [Image],
    pub region: &'a LogoRegion,
    pub detector: &'a DetectorModel,
    pub scene: &'a SceneConfig,
}

impl AttackScene<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if self.meshes.is_empty() {
            return Err(Error::Dataset("no meshes".into()));
        }
        if self.backgrounds.is_empty() {
            return Err(Error::Dataset("no backgrounds".into()));
        }
        for m in self.meshes {
            self.region.check_mesh(m)?;
        }
        let n = self.scene.image_size;
        if self.detector.input_size() != n {
            return Err(Error::Shape(format!(
                "detector expects {}x{0} images, scene renders {n}x{n}",
                self.detector.input_size()
            )));
        }
        if let Some(b) = self.backgrounds.iter().find(|b| b.size() != n) {
            return Err(Error::Shape(format!("background is {0}x{0}, scene renders {n}x{n}", b.size())));
        }
        Ok(())
    }
}

/// Per-epoch summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Mean disappearance loss over the epoch's items.
    pub mean_dis: f64,
    /// Mesh TV of the atlas at the end of the epoch.
    pub tv: f64,
    /// `λ_dis · mean_dis + λ_tv · tv`.
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct AttackRun {
    pub atlas: TextureAtlas,
    pub trace: Vec<EpochStats>,
    /// `(epochs completed, atlas)`, starting with the initialization.
    pub snapshots: Vec<(usize, TextureAtlas)>,
}

/// Loss and atlas gradient for one rendered, augmented image.
#[derive(Debug, Clone)]
pub struct ItemGradient {
    pub dis: f64,
    pub grad: Vec<Vec3>,
}

/// Disappearance loss of one composite under `params`, and its gradient
/// with respect to every face color. A target pushed fully out of frame
/// yields zero loss and gradient; a non-finite detector output yields a NaN
/// loss.
pub fn dis_gradient(
    detector: &DetectorModel,
    raster: &RasterBuffer,
    atlas: &TextureAtlas,
    background: &Image,
    params: &AugmentParams,
) -> Result<ItemGradient> {
    let product = composite(raster, atlas, background)?;
    let aug = augment(&product, params)?;
    let Some(gt) = aug.gt_box else {
        return Ok(ItemGradient {
            dis: 0.0,
            grad: vec![[0.0; 3]; atlas.len()],
        });
    };
    let (grid, trace) = detector.forward_traced(&aug.image)?;
    if grid.data.iter().any(|v| !v.is_finite()) {
        return Ok(ItemGradient {
            dis: f64::NAN,
            grad: vec![[0.0; 3]; atlas.len()],
        });
    }
    let detections = crate::detector::decode(&grid, detector.input_size(), detector.architecture().anchor());
    let dis = loss_dis(&detections, &gt.to_bbox());
    if dis.argmax.is_none() {
        return Ok(ItemGradient {
            dis: 0.0,
            grad: vec![[0.0; 3]; atlas.len()],
        });
    }
    let image_grad = detector.backward(&trace, &dis.grid_seed(grid.size), false)?.0;
    let grad = pullback_gradient(&product, params, &image_grad)?;
    Ok(ItemGradient { dis: dis.value, grad })
}

/// Combined loss of one image plus the logo TV term, with the gradient on
/// the region faces (zero elsewhere).
pub fn total_gradient(
    detector: &DetectorModel,
    raster: &RasterBuffer,
    atlas: &TextureAtlas,
    region: &LogoRegion,
    background: &Image,
    params: &AugmentParams,
    weights: &LossWeights,
) -> Result<(f64, Vec<Vec3>)> {
    let item = dis_gradient(detector, raster, atlas, background, params)?;
    let (tv, tv_grad) = loss_tv(atlas, region)?;
    let mask = region.mask();
    let grad = item
        .grad
        .iter()
        .zip(&tv_grad)
        .zip(&mask)
        .map(|((d, t), &m)| {
            if m {
                [0, 1, 2].map(|c| weights.lambda_dis * d[c] + weights.lambda_tv * t[c])
            } else {
                [0.0; 3]
            }
        })
        .collect();
    Ok((loss_total(item.dis, tv, weights), grad))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Item {
    mesh: usize,
    background: usize,
    azimuth: f64,
}

type RasterKey = (usize, u64, u64);

/// Optimizes the region colors against the detector.
///
/// Every epoch shuffles the (mesh, background, azimuth) product and walks it
/// in batches. Each batch draws one camera distance; each item draws its own
/// augmentation. Item results are reduced in batch order, so the outcome
/// does not depend on the thread count. `on_epoch` sees every epoch's stats
/// and atlas as they complete.
pub fn train_attack(
    setup: &AttackScene,
    plan: &TrainPlan,
    weights: &LossWeights,
    mut on_epoch: impl FnMut(&EpochStats, &TextureAtlas),
) -> Result<AttackRun> {
    setup.validate()?;
    plan.validate()?;
    weights.validate()?;
    let scene = setup.scene;
    let region = setup.region;

    let bases: Vec<TextureAtlas> = setup.meshes.iter().map(Mesh::base_atlas).collect();
    let mut atlas = TextureAtlas::random_in_region(&bases[0], region, &mut derived_rng(plan.seed, "atlas-init", &[]));

    let mut items = Vec::new();
    for mesh in 0..setup.meshes.len() {
        for background in 0..setup.backgrounds.len() {
            for &azimuth in &plan.azimuths {
                items.push(Item {
                    mesh,
                    background,
                    azimuth,
                });
            }
        }
    }

    let mut cache: HashMap<RasterKey, RasterBuffer> = HashMap::new();
    let cacheable = matches!(plan.distance, DistanceMode::Fixed(_));
    let mut trace = Vec::with_capacity(plan.epochs);
    let mut snapshots = vec![(0, atlas.clone())];
    let mut order: Vec<usize> = (0..items.len()).collect();

    for epoch in 0..plan.epochs {
        let lr = plan.lr_at(epoch);
        order.shuffle(&mut derived_rng(plan.seed, "order", &[epoch as u64]));
        let mut dis_sum = 0.0;

        for (b, batch) in order.chunks(plan.batch_size).enumerate() {
            let distance = match plan.distance {
                DistanceMode::Fixed(d) => d,
                DistanceMode::Uniform { min, max } => {
                    derived_rng(plan.seed, "distance", &[epoch as u64, b as u64]).random_range(min..=max)
                }
            };
            if !cacheable {
                cache.clear();
            }
            let keys: Vec<RasterKey> = batch
                .iter()
                .map(|&i| (items[i].mesh, items[i].azimuth.to_bits(), distance.to_bits()))
                .collect();
            let missing: Vec<RasterKey> = {
                let mut m: Vec<RasterKey> = keys.iter().copied().filter(|k| !cache.contains_key(k)).collect();
                m.sort_unstable();
                m.dedup();
                m
            };
            let fresh: Vec<(RasterKey, RasterBuffer)> = missing
                .into_par_iter()
                .map(|k| {
                    let pose = CameraPose::new(f64::from_bits(k.2), plan.elevation, f64::from_bits(k.1));
                    (k, rasterize(&setup.meshes[k.0], &pose, scene))
                })
                .collect();
            cache.extend(fresh);

            let atlases: Vec<TextureAtlas> = bases
                .iter()
                .map(|base| base.overlay(&atlas, region))
                .collect::<Result<_>>()?;
            let results: Vec<Result<ItemGradient>> = batch
                .par_iter()
                .zip(keys.par_iter())
                .enumerate()
                .map(|(slot, (&i, key))| {
                    let item = items[i];
                    let mut rng = derived_rng(plan.seed, "augment", &[epoch as u64, b as u64, slot as u64]);
                    let params = AugmentParams::sample(&mut rng, scene.image_size, scene.translation_range);
                    dis_gradient(
                        setup.detector,
                        &cache[key],
                        &atlases[item.mesh],
                        &setup.backgrounds[item.background],
                        &params,
                    )
                })
                .collect();

            let mut grad = vec![[0.0; 3]; atlas.len()];
            let mut batch_dis = 0.0;
            for r in results {
                let item = r?;
                batch_dis += item.dis;
                for (g, d) in grad.iter_mut().zip(&item.grad) {
                    for c in 0..3 {
                        g[c] += d[c];
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            let (_, tv_grad) = loss_tv(&atlas, region)?;
            for (g, t) in grad.iter_mut().zip(&tv_grad) {
                for c in 0..3 {
                    g[c] = weights.lambda_dis * g[c] * inv + weights.lambda_tv * t[c];
                }
            }
            if !batch_dis.is_finite() || grad.iter().flatten().any(|v| !v.is_finite()) {
                let described: Vec<Item> = batch.iter().map(|&i| items[i]).collect();
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient at epoch {epoch}, batch {b}, distance {distance}: {}",
                    serde_json::to_string(&described)?
                )));
            }
            sgd_step(&mut atlas, region, &grad, lr)?;
            dis_sum += batch_dis;
        }

        let (tv, _) = loss_tv(&atlas, region)?;
        let mean_dis = dis_sum / items.len() as f64;
        let stats = EpochStats {
            epoch,
            lr,
            mean_dis,
            tv,
            total: loss_total(mean_dis, tv, weights),
        };
        log::debug!("attack epoch {epoch}: dis {mean_dis:.4} tv {tv:.4} lr {lr}");
        on_epoch(&stats, &atlas);
        trace.push(stats);
        if plan.snapshot_period > 0 && (epoch + 1) % plan.snapshot_period == 0 {
            snapshots.push((epoch + 1, atlas.clone()));
        }
    }

    Ok(AttackRun {
        atlas,
        trace,
        snapshots,
    })
}
