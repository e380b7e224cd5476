//! Rendered detector-training data: people over backgrounds, plus empty
//! backgrounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{DetectorSample, GroundTruth};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::Mesh;
use crate::render::{augment, composite, rasterize, AugmentParams, CameraPose, RenderProduct, SceneConfig};
use crate::seed::derived_rng;
use crate::synth::{outfit_atlas, Outfit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub positives: usize,
    pub negatives: usize,
    /// Azimuths are drawn uniformly from `[-azimuth_range, azimuth_range]`.
    pub azimuth_range: f64,
    pub distance_min: f64,
    pub distance_max: f64,
    pub elevation: f64,
    /// Replace mesh colors with a random outfit per sample, so the detector
    /// keys on shape rather than one palette.
    pub random_outfits: bool,
    /// Positives whose visible box is smaller than this many pixels on a
    /// side are redrawn.
    pub min_box: i64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            positives: 2000,
            negatives: 1000,
            azimuth_range: 180.0,
            distance_min: 1.4,
            distance_max: 3.0,
            elevation: 6.0,
            random_outfits: true,
            min_box: 4,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.positives == 0 {
            return Err(Error::config("dataset.positives", "must be > 0"));
        }
        if !(self.distance_min > 0.0 && self.distance_max >= self.distance_min) {
            return Err(Error::config("dataset.distance_min", "need 0 < distance_min <= distance_max"));
        }
        if !(0.0..=180.0).contains(&self.azimuth_range) {
            return Err(Error::config("dataset.azimuth_range", "must be in [0, 180]"));
        }
        Ok(())
    }
}

fn render_positive(
    meshes: &[Mesh],
    backgrounds: &[Image],
    spec: &DatasetSpec,
    scene: &SceneConfig,
    index: usize,
) -> Result<DetectorSample> {
    let mut rng = derived_rng(spec.seed, "positive", &[index as u64]);
    loop {
        let mesh = &meshes[rng.random_range(0..meshes.len())];
        let bg = &backgrounds[rng.random_range(0..backgrounds.len())];
        let pose = CameraPose::new(
            rng.random_range(spec.distance_min..=spec.distance_max),
            spec.elevation,
            rng.random_range(-spec.azimuth_range..=spec.azimuth_range),
        );
        let atlas = if spec.random_outfits {
            outfit_atlas(mesh, &Outfit::random(&mut rng), 0.04, &mut rng)
        } else {
            mesh.base_atlas()
        };
        let product: RenderProduct = composite(&rasterize(mesh, &pose, scene), &atlas, bg)?;
        let params = AugmentParams::sample(&mut rng, scene.image_size, scene.translation_range);
        let aug = augment(&product, &params)?;
        if let Some(b) = aug.gt_box {
            if b.x1 - b.x0 >= spec.min_box && b.y1 - b.y0 >= spec.min_box {
                return Ok(DetectorSample {
                    image: aug.image,
                    gt: GroundTruth::Person(b.to_bbox()),
                });
            }
        }
    }
}

fn render_negative(backgrounds: &[Image], spec: &DatasetSpec, scene: &SceneConfig, index: usize) -> Result<DetectorSample> {
    let mut rng = derived_rng(spec.seed, "negative", &[index as u64]);
    let bg = &backgrounds[rng.random_range(0..backgrounds.len())];
    let n = scene.image_size;
    let product = RenderProduct {
        rgb: bg.clone(),
        background: bg.clone(),
        alpha: vec![false; n * n],
        face_id: vec![crate::render::BACKGROUND; n * n],
        shade: Vec::new(),
        gt_box: None,
    };
    let params = AugmentParams::sample(&mut rng, n, 0);
    Ok(DetectorSample {
        image: augment(&product, &params)?.image,
        gt: GroundTruth::NoPerson,
    })
}

/// Positives first, then negatives. Each sample has its own seeded stream,
/// so the output is independent of the thread count.
pub fn render_dataset(
    meshes: &[Mesh],
    backgrounds: &[Image],
    spec: &DatasetSpec,
    scene: &SceneConfig,
) -> Result<Vec<DetectorSample>> {
    spec.validate()?;
    scene.validate()?;
    if meshes.is_empty() {
        return Err(Error::Dataset("no meshes".into()));
    }
    if backgrounds.is_empty() {
        return Err(Error::Dataset("no backgrounds".into()));
    }
    if let Some(b) = backgrounds.iter().find(|b| b.size() != scene.image_size) {
        return Err(Error::Shape(format!(
            "background is {0}x{0}, scene renders {1}x{1}",
            b.size(),
            scene.image_size
        )));
    }
    (0..spec.positives + spec.negatives)
        .into_par_iter()
        .map(|i| {
            if i < spec.positives {
                render_positive(meshes, backgrounds, spec, scene, i)
            } else {
                render_negative(backgrounds, spec, scene, i - spec.positives)
            }
        })
        .collect()
}
