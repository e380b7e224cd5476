use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LogoRegion;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// One RGB color per mesh face, every channel in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureAtlas {
    colors: Vec<Vec3>,
}

impl TextureAtlas {
    pub fn uniform(faces: usize, color: Vec3) -> Self {
        Self::from_colors(vec![color; faces])
    }

    /// Takes ownership of `colors`, clamping channels into [0,1].
    pub fn from_colors(mut colors: Vec<Vec3>) -> Self {
        for c in &mut colors {
            *c = c.map(|v| v.clamp(0.0, 1.0));
        }
        TextureAtlas { colors }
    }

    /// `base` with the region faces replaced by uniform random colors.
    pub fn random_in_region(base: &TextureAtlas, region: &LogoRegion, rng: &mut impl Rng) -> Self {
        let mut out = base.clone();
        for &f in region.face_ids() {
            out.colors[f as usize] = [rng.random(), rng.random(), rng.random()];
        }
        out
    }

    pub fn colors(&self) -> &[Vec3] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, face: usize) -> Vec3 {
        self.colors[face]
    }

    /// Sets a face color, clamping into [0,1].
    pub fn set(&mut self, face: usize, color: Vec3) {
        self.colors[face] = color.map(|v| v.clamp(0.0, 1.0));
    }

    /// Raw mutable access for tests that need values outside [0,1]
    /// (linearity checks with clamping disabled).
    #[doc(hidden)]
    pub fn colors_mut_unclamped(&mut self) -> &mut [Vec3] {
        &mut self.colors
    }

    /// Copies the region faces of `logo` over `self`, leaving other faces.
    pub fn overlay(&self, logo: &TextureAtlas, region: &LogoRegion) -> Result<Self> {
        if self.len() != logo.len() || self.len() != region.mesh_face_count() {
            return Err(Error::Shape(format!(
                "atlas lengths {} / {} against region over {} faces",
                self.len(),
                logo.len(),
                region.mesh_face_count()
            )));
        }
        let mut out = self.clone();
        for &f in region.face_ids() {
            out.colors[f as usize] = logo.colors[f as usize];
        }
        Ok(out)
    }

    pub fn check_len(&self, faces: usize) -> Result<()> {
        if self.len() != faces {
            return Err(Error::Shape(format!(
                "atlas has {} colors for {faces} faces",
                self.len()
            )));
        }
        Ok(())
    }

    /// Region colors flattened row-major, `[r, g, b, r, g, b, ...]`.
    pub fn region_values(&self, region: &LogoRegion) -> Vec<f64> {
        region
            .face_ids()
            .iter()
            .flat_map(|&f| self.colors[f as usize])
            .collect()
    }

    pub fn in_unit_range(&self) -> bool {
        self.colors
            .iter()
            .flatten()
            .all(|v| (0.0..=1.0).contains(v))
    }
}
