//! Deterministic hard rasterization, compositing, augmentation and the exact
//! image-to-atlas gradient.
//!
//! Pixels are flat shaded per face, so every foreground pixel is
//! `atlas[face] * shade[face]`: the image is linear in the atlas and the
//! face-id buffer is all the backward pass needs.

mod augment;
mod camera;
mod composite;
mod raster;

pub use augment::{
    augment, pullback_gradient, unsaturated_mask, AugmentParams, Augmented, NOISE_AMPLITUDE,
};
pub use camera::{pixel_center_ndc, Camera, CameraPose, SceneConfig, NEAR};
pub use composite::{composite, RenderProduct};
pub use raster::{rasterize, RasterBuffer, BACKGROUND};

use crate::error::Result;
use crate::image::Image;
use crate::mesh::{Mesh, TextureAtlas};

/// Rasterize then composite in one call.
pub fn render(
    mesh: &Mesh,
    pose: &CameraPose,
    cfg: &SceneConfig,
    atlas: &TextureAtlas,
    background: &Image,
) -> Result<RenderProduct> {
    atlas.check_len(mesh.face_count())?;
    composite(&rasterize(mesh, pose, cfg), atlas, background)
}
