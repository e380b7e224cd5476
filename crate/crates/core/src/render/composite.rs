use super::raster::{RasterBuffer, BACKGROUND};
use crate::boxes::PixelBox;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::TextureAtlas;

/// A rendered mesh composited over a background, with everything needed to
/// pull image gradients back to atlas colors.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderProduct {
    pub rgb: Image,
    pub background: Image,
    /// Row-major foreground mask.
    pub alpha: Vec<bool>,
    pub face_id: Vec<u32>,
    pub shade: Vec<f64>,
    pub gt_box: Option<PixelBox>,
}

impl RenderProduct {
    pub fn size(&self) -> usize {
        self.rgb.size()
    }

    pub fn foreground_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a).count()
    }
}

/// Foreground pixels take `atlas[face] * shade[face]`; the rest copy the
/// background. Linear in the atlas colors.
pub fn composite(
    raster: &RasterBuffer,
    atlas: &TextureAtlas,
    background: &Image,
) -> Result<RenderProduct> {
    let n = raster.size;
    if background.size() != n {
        return Err(Error::Shape(format!(
            "background is {0}x{0}, render is {n}x{n}",
            background.size()
        )));
    }
    atlas.check_len(raster.shade.len())?;

    let mut rgb = background.clone();
    let plane = n * n;
    let mut alpha = vec![false; plane];
    for (p, &f) in raster.face_id.iter().enumerate() {
        if f == BACKGROUND {
            continue;
        }
        alpha[p] = true;
        let s = raster.shade[f as usize];
        let c = atlas.get(f as usize);
        let data = rgb.data_mut();
        for k in 0..3 {
            data[k * plane + p] = c[k] * s;
        }
    }
    let gt_box = PixelBox::of_mask(&alpha, n);
    Ok(RenderProduct {
        rgb,
        background: background.clone(),
        alpha,
        face_id: raster.face_id.clone(),
        shade: raster.shade.clone(),
        gt_box,
    })
}
