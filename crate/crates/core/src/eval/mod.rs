//! Attack success rates over camera sweeps, transfer to a second detector,
//! and CSV/SVG reports.

mod report;

pub use report::{emit_report, read_report_csv, render_svg, write_csv, ReportEntry};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detects, DetectorModel};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::{LogoRegion, Mesh, TextureAtlas};
use crate::render::{composite, rasterize, CameraPose, SceneConfig};

/// Camera grid and threshold of an evaluation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub azimuths: Vec<f64>,
    pub distances: Vec<f64>,
    pub elevation: f64,
    pub threshold: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::narrow()
    }
}

impl SweepSpec {
    /// All 21 integer azimuths in [-10, 10] at the training distance.
    pub fn narrow() -> Self {
        SweepSpec {
            name: "narrow".into(),
            azimuths: (-10..=10).map(f64::from).collect(),
            distances: vec![2.2],
            elevation: 6.0,
            threshold: 0.6,
        }
    }

    /// Azimuths -50..50 in steps of 10.
    pub fn wide() -> Self {
        SweepSpec {
            name: "wide".into(),
            azimuths: (-5..=5).map(|k| f64::from(10 * k)).collect(),
            ..Self::narrow()
        }
    }

    /// Distances 1.4..3.0 in steps of 0.2 at azimuth 0.
    pub fn distance() -> Self {
        SweepSpec {
            name: "distance".into(),
            azimuths: vec![0.0],
            distances: (0..=8).map(|k| (14 + 2 * k) as f64 / 10.0).collect(),
            ..Self::narrow()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "narrow" => Ok(Self::narrow()),
            "wide" => Ok(Self::wide()),
            "distance" => Ok(Self::distance()),
            other => Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (expected narrow, wide or distance)"),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuths.is_empty() {
            return Err(Error::config("sweep.azimuths", "must not be empty"));
        }
        if self.distances.is_empty() {
            return Err(Error::config("sweep.distances", "must not be empty"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("sweep.threshold", "must be in (0, 1)"));
        }
        for (i, &a) in self.azimuths.iter().enumerate() {
            for &d in &self.distances {
                CameraPose::new(d, self.elevation, a)
                    .validate()
                    .map_err(|e| Error::config(format!("sweep.azimuths[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Outcome counts at one camera pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub azimuth: f64,
    pub distance: f64,
    pub samples: u64,
    /// Renders the detector failed to detect.
    pub successes: u64,
}

impl SweepCell {
    pub fn from_outcomes(azimuth: f64, distance: f64, detected: &[bool]) -> Self {
        SweepCell {
            azimuth,
            distance,
            samples: detected.len() as u64,
            successes: detected.iter().filter(|&&d| !d).count() as u64,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.successes as f64 / self.samples as f64
        }
    }
}

/// Per-pose attack success, ordered by (azimuth, distance) as listed in the
/// sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub detector: String,
    pub sweep: String,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    /// Mean of the per-cell rates.
    pub fn mean_rate(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().map(SweepCell::rate).sum::<f64>() / self.cells.len() as f64
    }

    /// Mean rate over cells whose azimuth satisfies `keep`.
    pub fn mean_rate_where(&self, keep: impl Fn(&SweepCell) -> bool) -> f64 {
        let picked: Vec<f64> = self.cells.iter().filter(|c| keep(c)).map(SweepCell::rate).collect();
        if picked.is_empty() {
            0.0
        } else {
            picked.iter().sum::<f64>() / picked.len() as f64
        }
    }

    pub fn cell(&self, azimuth: f64, distance: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.azimuth == azimuth && c.distance == distance)
    }
}

/// The logo to evaluate: `None` leaves every mesh in its own colors.
#[derive(Debug, Clone, Copy)]
pub struct Patch<'a> {
    pub logo: Option<(&'a TextureAtlas, &'a LogoRegion)>,
}

impl<'a> Patch<'a> {
    pub fn none() -> Self {
        Patch { logo: None }
    }

    pub fn logo(atlas: &'a TextureAtlas, region: &'a LogoRegion) -> Self {
        Patch {
            logo: Some((atlas, region)),
        }
    }

    fn atlas_for(&self, mesh: &Mesh) -> Result<TextureAtlas> {
        let base = mesh.base_atlas();
        match self.logo {
            None => Ok(base),
            Some((atlas, region)) => {
                region.check_mesh(mesh)?;
                base.overlay(atlas, region)
            }
        }
    }
}

/// Fraction of un-augmented renders (every mesh over every background, at
/// each sweep pose) in which `detector` finds no qualifying box.
pub fn success_rate(
    meshes: &[Mesh],
    backgrounds: &[Image],
    patch: Patch,
    detector: &DetectorModel,
    scene: &SceneConfig,
    spec: &SweepSpec,
) -> Result<SweepResult> {
    spec.validate()?;
    if meshes.is_empty() || backgrounds.is_empty() {
        return Err(Error::Dataset("empty test set".into()));
    }
    let n = scene.image_size;
    if detector.input_size() != n {
        return Err(Error::Shape(format!(
            "detector expects {0}x{0} images, scene renders {n}x{n}",
            detector.input_size()
        )));
    }
    let atlases: Vec<TextureAtlas> = meshes.iter().map(|m| patch.atlas_for(m)).collect::<Result<_>>()?;
    let poses: Vec<(f64, f64)> = spec
        .azimuths
        .iter()
        .flat_map(|&a| spec.distances.iter().map(move |&d| (a, d)))
        .collect();
    let cells = poses
        .par_iter()
        .map(|&(azimuth, distance)| {
            let pose = CameraPose::new(distance, spec.elevation, azimuth);
            let mut outcomes = Vec::with_capacity(meshes.len() * backgrounds.len());
            for (mesh, atlas) in meshes.iter().zip(&atlases) {
                let raster = rasterize(mesh, &pose, scene);
                for bg in backgrounds {
                    let product = composite(&raster, atlas, bg)?;
                    let detected = match product.gt_box {
                        Some(b) => detects(&detector.forward(&product.rgb)?.detections, &b.to_bbox(), spec.threshold),
                        None => false,
                    };
                    outcomes.push(detected);
                }
            }
            Ok(SweepCell::from_outcomes(azimuth, distance, &outcomes))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        detector: detector.architecture().name.clone(),
        sweep: spec.name.clone(),
        cells,
    })
}

/// A patch trained against one detector, measured on another and on its
/// own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub target: SweepResult,
    pub source: SweepResult,
}

pub fn transfer_eval(
    meshes: &[Mesh],
    backgrounds: &[Image],
    patch: Patch,
    source: &DetectorModel,
    target: &DetectorModel,
    scene: &SceneConfig,
    spec: &SweepSpec,
) -> Result<TransferResult> {
    if source.architecture() == target.architecture() {
        log::warn!(
            "transfer evaluation between two `{}` detectors with identical architectures",
            source.architecture().name
        );
    }
    Ok(TransferResult {
        target: success_rate(meshes, backgrounds, patch, target, scene, spec)?,
        source: success_rate(meshes, backgrounds, patch, source, scene, spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Architecture;
    use crate::synth::{background, humanoid, BodyPose, BodyShape, Outfit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_match_their_grids() {
        assert_eq!(SweepSpec::narrow().azimuths.len(), 21);
        assert_eq!(SweepSpec::wide().azimuths, vec![-50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        let d = SweepSpec::distance().distances;
        assert_eq!(d.len(), 9);
        assert_eq!((d[0], d[8]), (1.4, 3.0));
        assert!(SweepSpec::preset("huge").is_err());
    }

    #[test]
    fn counting_is_exact() {
        let outcomes = [true, false, true, true, false, true, false, true, false, true];
        let c = SweepCell::from_outcomes(0.0, 2.2, &outcomes);
        assert_eq!((c.samples, c.successes), (10, 4));
        assert_eq!(c.rate(), 0.4);
    }

    #[test]
    fn silent_detector_always_loses() {
        let m = humanoid(&BodyPose::default(), &BodyShape::default(), &Outfit::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bgs: Vec<Image> = (0..2).map(|_| background(32, &mut rng)).collect();
        let mut det = DetectorModel::zeros(Architecture::whitebox(32)).unwrap();
        det.set_objectness_bias(-1e4);
        let scene = SceneConfig {
            image_size: 32,
            ..SceneConfig::default()
        };
        let spec = SweepSpec {
            azimuths: vec![-10.0, 0.0, 10.0],
            ..SweepSpec::narrow()
        };
        let r = success_rate(&[m], &bgs, Patch::none(), &det, &scene, &spec).unwrap();
        assert_eq!(r.cells.len(), 3);
        assert!(r.cells.iter().all(|c| c.rate() == 1.0 && c.samples == 2));
    }

    #[test]
    fn raising_the_threshold_never_lowers_success() {
        use crate::detector::{decode, detects, RawGrid};
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let thresholds = [0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95];
        let mut misses = [0usize; 7];
        for _ in 0..300 {
            let mut grid = RawGrid::zeros(4);
            for v in grid.data.iter_mut() {
                *v = rng.random_range(-3.0..3.0);
            }
            let dets = decode(&grid, 32, 8.0);
            let gt = dets[rng.random_range(0..dets.len())].bbox;
            for (k, &t) in thresholds.iter().enumerate() {
                misses[k] += usize::from(!detects(&dets, &gt, t));
            }
        }
        assert!(misses.windows(2).all(|w| w[0] <= w[1]), "{misses:?}");
        assert!(misses[0] < misses[6]);
    }
}
