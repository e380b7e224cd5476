use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Orbit camera around the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// World units from the origin.
    pub distance: f64,
    /// Degrees above the horizontal plane.
    pub elevation: f64,
    /// Degrees around the vertical axis; 0 looks at the mesh front (+z).
    pub azimuth: f64,
}

impl Default for CameraPose {
    fn default() -> Self {
        CameraPose {
            distance: 2.2,
            elevation: 6.0,
            azimuth: 0.0,
        }
    }
}

impl CameraPose {
    pub fn new(distance: f64, elevation: f64, azimuth: f64) -> Self {
        CameraPose {
            distance,
            elevation,
            azimuth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() || self.distance <= 0.0 {
            return Err(Error::config("pose.distance", "must be > 0"));
        }
        if !(-180.0..=180.0).contains(&self.azimuth) {
            return Err(Error::config("pose.azimuth", "must be in [-180, 180]"));
        }
        if !self.elevation.is_finite() || self.elevation.abs() >= 90.0 {
            return Err(Error::config("pose.elevation", "must be in (-90, 90)"));
        }
        Ok(())
    }

    pub fn eye(&self) -> Vec3 {
        let (el, az) = (self.elevation.to_radians(), self.azimuth.to_radians());
        [
            self.distance * el.cos() * az.sin(),
            self.distance * el.sin(),
            self.distance * el.cos() * az.cos(),
        ]
    }
}

/// Image-formation settings shared by every render in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub image_size: usize,
    /// Vertical field of view in degrees.
    pub fov_deg: f64,
    pub ambient: f64,
    pub diffuse: f64,
    /// Maximum absolute translation of the rendered mesh, in pixels.
    pub translation_range: i64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            image_size: 416,
            fov_deg: 60.0,
            ambient: 0.3,
            diffuse: 0.7,
            translation_range: 50,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 {
            return Err(Error::config("scene.image_size", "must be > 0"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::config("scene.fov_deg", "must be in (0, 180)"));
        }
        if !(self.ambient >= 0.0 && self.diffuse >= 0.0 && self.ambient + self.diffuse <= 1.0) {
            return Err(Error::config(
                "scene.ambient",
                "ambient and diffuse must be >= 0 with ambient + diffuse <= 1",
            ));
        }
        if self.translation_range < 0 {
            return Err(Error::config("scene.translation_range", "must be >= 0"));
        }
        Ok(())
    }
}

/// Look-at view of the origin with a pinhole projection to normalized device
/// coordinates (x right, y up, both in [-1,1] across the frame).
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    eye: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    focal: f64,
}

/// Points closer than this along the view axis are not rasterized.
pub const NEAR: f64 = 1e-3;

impl Camera {
    pub fn new(pose: &CameraPose, fov_deg: f64) -> Self {
        let eye = pose.eye();
        let forward = geom::normalize(geom::scale(eye, -1.0));
        let right = geom::normalize(geom::cross(forward, [0.0, 1.0, 0.0]));
        let up = geom::cross(right, forward);
        Camera {
            eye,
            right,
            up,
            forward,
            focal: 1.0 / (0.5 * fov_deg.to_radians()).tan(),
        }
    }

    pub fn eye(&self) -> Vec3 {
        self.eye
    }

    /// NDC position and view depth, `None` behind the near plane.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let rel = geom::sub(p, self.eye);
        let depth = geom::dot(rel, self.forward);
        if depth < NEAR {
            return None;
        }
        let x = self.focal * geom::dot(rel, self.right) / depth;
        let y = self.focal * geom::dot(rel, self.up) / depth;
        Some((x, y, depth))
    }
}

/// NDC coordinate of the center of pixel column `x` (or row, for y with the
/// sign flipped). The numerator is an exact integer so mirrored pixels get
/// exactly negated coordinates.
#[inline]
pub fn pixel_center_ndc(i: usize, size: usize) -> f64 {
    (2.0 * i as f64 + 1.0 - size as f64) / size as f64
}
