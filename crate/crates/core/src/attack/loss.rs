use serde::{Deserialize, Serialize};

use crate::boxes::BBox;
use crate::detector::{contains_target, Detection, RawGrid};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::image::Image;
use crate::mesh::{LogoRegion, TextureAtlas};

/// Weights of the disappearance and mesh TV terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_dis: f64,
    pub lambda_tv: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_dis: 1.0,
            lambda_tv: 2.5,
        }
    }
}

/// Image size the default weights are calibrated for.
pub const REFERENCE_IMAGE_SIZE: usize = 416;

impl LossWeights {
    /// Default weights with the disappearance term scaled by
    /// `(416 / image_size)^2`, the drop in rendered pixels per face, so the
    /// balance against the mesh TV term matches a 416x416 render.
    pub fn resolution_equivalent(image_size: usize) -> Self {
        let r = REFERENCE_IMAGE_SIZE as f64 / image_size as f64;
        LossWeights {
            lambda_dis: r * r,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_dis", self.lambda_dis), ("lambda_tv", self.lambda_tv)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Disappearance loss: the highest confidence among boxes containing the
/// target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisLoss {
    pub value: f64,
    /// Cell of the maximizing box; `None` when no box contains the target.
    pub argmax: Option<usize>,
}

impl DisLoss {
    /// Gradient of the loss with respect to the raw grid. Only the argmax
    /// cell's objectness logit receives gradient, `c(1-c)` for confidence
    /// `c = sigmoid(logit)`.
    pub fn grid_seed(&self, grid_size: usize) -> RawGrid {
        let mut seed = RawGrid::zeros(grid_size);
        if let Some(cell) = self.argmax {
            *seed.at_mut(0, cell) = self.value * (1.0 - self.value);
        }
        seed
    }
}

/// Max over containing boxes; ties go to the lowest cell index and an empty
/// set gives zero.
pub fn loss_dis(detections: &[Detection], gt: &BBox) -> DisLoss {
    let mut best = DisLoss {
        value: 0.0,
        argmax: None,
    };
    for d in detections {
        if !contains_target(&d.bbox, gt) {
            continue;
        }
        let better = match best.argmax {
            None => true,
            Some(cell) => d.confidence > best.value || (d.confidence == best.value && d.cell < cell),
        };
        if better {
            best = DisLoss {
                value: d.confidence,
                argmax: Some(d.cell),
            };
        }
    }
    best
}

/// Mesh total variation over the region's interior edges: rest length times
/// the L1 color difference across the edge. The gradient (one entry per
/// mesh face, zero outside the region) uses subgradient 0 at equal channels.
pub fn loss_tv(atlas: &TextureAtlas, region: &LogoRegion) -> Result<(f64, Vec<Vec3>)> {
    atlas.check_len(region.mesh_face_count())?;
    let colors = atlas.colors();
    let mut tv = 0.0;
    let mut grad = vec![[0.0; 3]; colors.len()];
    for e in region.interior_edges() {
        let (a, b) = (e.faces.0 as usize, e.faces.1 as usize);
        for c in 0..3 {
            let d = colors[a][c] - colors[b][c];
            tv += e.rest_length * d.abs();
            let s = if d > 0.0 {
                e.rest_length
            } else if d < 0.0 {
                -e.rest_length
            } else {
                0.0
            };
            grad[a][c] += s;
            grad[b][c] -= s;
        }
    }
    Ok((tv, grad))
}

/// Pixel-wise anisotropic TV of a row-major `width × height` array.
pub fn tv_2d(values: &[f64], width: usize, height: usize) -> f64 {
    assert_eq!(values.len(), width * height, "tv_2d: shape mismatch");
    let mut tv = 0.0;
    for y in 0..height {
        for x in 0..width {
            let v = values[y * width + x];
            if y + 1 < height {
                tv += (values[(y + 1) * width + x] - v).abs();
            }
            if x + 1 < width {
                tv += (values[y * width + x + 1] - v).abs();
            }
        }
    }
    tv
}

/// [`tv_2d`] summed over the three channels.
pub fn loss_tv_2d(image: &Image) -> f64 {
    let n = image.size();
    image
        .data()
        .chunks_exact(image.plane())
        .map(|plane| tv_2d(plane, n, n))
        .sum()
}

pub fn loss_total(dis: f64, tv: f64, w: &LossWeights) -> f64 {
    w.lambda_dis * dis + w.lambda_tv * tv
}

/// `lr0 · factor^⌊epoch / every⌋`.
pub fn step_decay(lr0: f64, factor: f64, every: usize, epoch: usize) -> f64 {
    lr0 * factor.powi((epoch / every.max(1)) as i32)
}

/// One clamped gradient step on the region faces; others are untouched.
pub fn sgd_step(atlas: &mut TextureAtlas, region: &LogoRegion, grad: &[Vec3], lr: f64) -> Result<()> {
    atlas.check_len(region.mesh_face_count())?;
    if grad.len() != atlas.len() {
        return Err(Error::Shape(format!(
            "gradient has {} faces, atlas has {}",
            grad.len(),
            atlas.len()
        )));
    }
    for &f in region.face_ids() {
        let f = f as usize;
        let c = atlas.get(f);
        atlas.set(f, [0, 1, 2].map(|k| c[k] - lr * grad[f][k]));
    }
    Ok(())
}
