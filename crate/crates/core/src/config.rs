//! Run configuration, dataset directory loading and run manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{LossWeights, TrainPlan};
use crate::dataset::DatasetSpec;
use crate::detector::DetectorTrainConfig;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::{load_obj, Mesh};
use crate::render::SceneConfig;

/// File-system locations. Inputs must exist; outputs default into `output`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of same-topology OBJ meshes used for attack and evaluation.
    pub meshes: Option<PathBuf>,
    /// Directory of OBJ meshes for detector training; defaults to `meshes`.
    pub detector_meshes: Option<PathBuf>,
    pub backgrounds_train: Option<PathBuf>,
    pub backgrounds_test: Option<PathBuf>,
    /// `.faces` list or JSON box region.
    pub region: Option<PathBuf>,
    /// Whitebox detector weights; defaults to `<output>/detector_a.weights`.
    pub detector_a: Option<PathBuf>,
    /// Blackbox detector weights; defaults to `<output>/detector_b.weights`.
    pub detector_b: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Evaluation settings shared by every sweep preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold: f64,
    pub elevation: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.6,
            elevation: 6.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub scene: SceneConfig,
    pub plan: TrainPlan,
    pub loss: LossWeights,
    pub detector: DetectorTrainConfig,
    pub dataset: DatasetSpec,
    pub eval: EvalConfig,
    /// Global seed; copied into every sub-configuration's seed.
    pub seed: u64,
}

/// Input paths a command cannot run without.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Meshes,
    BackgroundsTrain,
    BackgroundsTest,
    Region,
    DetectorA,
    DetectorB,
}

impl RunConfig {
    /// Parses JSON and fills defaults, without touching the file system.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(schema_error)?;
        cfg.apply_seed();
        Ok(cfg)
    }

    /// Copies the global seed into every component.
    pub fn apply_seed(&mut self) {
        self.plan.seed = self.seed;
        self.dataset.seed = self.seed;
        self.detector.seed = self.seed;
        self.scene.seed = self.seed;
    }

    /// Relative paths are taken relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.meshes,
            &mut p.detector_meshes,
            &mut p.backgrounds_train,
            &mut p.backgrounds_test,
            &mut p.region,
            &mut p.detector_a,
            &mut p.detector_b,
            &mut p.output,
        ] {
            if let Some(path) = slot.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    /// Value checks that do not depend on the file system.
    pub fn validate_values(&self) -> Result<()> {
        self.scene.validate()?;
        self.plan.validate()?;
        self.loss.validate()?;
        self.dataset.validate()?;
        if !(self.eval.threshold > 0.0 && self.eval.threshold < 1.0) {
            return Err(Error::config("eval.threshold", "must be in (0, 1)"));
        }
        Ok(())
    }

    /// Checks values, that every required input exists, and that train and
    /// test backgrounds share no file name.
    pub fn validate(&self, needs: &[Need]) -> Result<()> {
        self.validate_values()?;
        if self.paths.output.is_none() {
            return Err(Error::config("paths.output", "required"));
        }
        for need in needs {
            let (field, path) = self.need_path(*need);
            match path {
                None => return Err(Error::config(field, "required")),
                Some(p) if !p.exists() => {
                    return Err(Error::config(field, format!("{} does not exist", p.display())))
                }
                _ => {}
            }
        }
        if let (Some(train), Some(test)) = (&self.paths.backgrounds_train, &self.paths.backgrounds_test) {
            if train.is_dir() && test.is_dir() {
                let a: BTreeSet<_> = list_files(train, "png")?.iter().filter_map(|p| p.file_name().map(|s| s.to_owned())).collect();
                let b: BTreeSet<_> = list_files(test, "png")?.iter().filter_map(|p| p.file_name().map(|s| s.to_owned())).collect();
                if let Some(shared) = a.intersection(&b).next() {
                    return Err(Error::config(
                        "paths.backgrounds_test",
                        format!("{} is also a training background", shared.to_string_lossy()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn need_path(&self, need: Need) -> (&'static str, Option<PathBuf>) {
        let p = &self.paths;
        match need {
            Need::Meshes => ("paths.meshes", p.meshes.clone()),
            Need::BackgroundsTrain => ("paths.backgrounds_train", p.backgrounds_train.clone()),
            Need::BackgroundsTest => ("paths.backgrounds_test", p.backgrounds_test.clone()),
            Need::Region => ("paths.region", p.region.clone()),
            Need::DetectorA => ("paths.detector_a", Some(self.detector_a_path())),
            Need::DetectorB => ("paths.detector_b", Some(self.detector_b_path())),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn detector_a_path(&self) -> PathBuf {
        self.paths.detector_a.clone().unwrap_or_else(|| self.output_dir().join("detector_a.weights"))
    }

    pub fn detector_b_path(&self) -> PathBuf {
        self.paths.detector_b.clone().unwrap_or_else(|| self.output_dir().join("detector_b.weights"))
    }

    /// SHA-256 of the canonical JSON of this (defaulted) configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

fn schema_error(e: serde_json::Error) -> Error {
    // serde reports the failing key inside the message; surface it as the field.
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .unwrap_or("config")
        .to_string();
    Error::config(field, msg)
}

/// Reads, defaults and fully validates a configuration file. Relative paths
/// are resolved against the file's directory.
pub fn parse_config(path: impl AsRef<Path>, needs: &[Need]) -> Result<RunConfig> {
    let cfg = load_config(path)?;
    cfg.validate(needs)?;
    Ok(cfg)
}

/// Reads and defaults a configuration file without validating paths.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = RunConfig::from_json(&text)?;
    cfg.rebase(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// Files in `dir` with the given extension, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Every OBJ in `dir`, checked to share one topology.
pub fn load_meshes(dir: &Path) -> Result<Vec<Mesh>> {
    let files = list_files(dir, "obj")?;
    if files.is_empty() {
        return Err(Error::Dataset(format!("no .obj files in {}", dir.display())));
    }
    let meshes: Vec<Mesh> = files.iter().map(load_obj).collect::<Result<_>>()?;
    for m in &meshes[1..] {
        meshes[0].check_same_topology(m)?;
    }
    Ok(meshes)
}

/// Every PNG in `dir`, resized to `size`.
pub fn load_backgrounds(dir: &Path, size: usize) -> Result<Vec<Image>> {
    let files = list_files(dir, "png")?;
    if files.is_empty() {
        return Err(Error::Dataset(format!("no .png files in {}", dir.display())));
    }
    files.iter().map(|p| Image::load_png(p, size)).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Provenance record written next to a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub args: Vec<String>,
    /// Output file name (relative to the manifest's directory when inside
    /// it) and SHA-256.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<&RunConfig>, args: Vec<String>, threads: Option<usize>) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.map(RunConfig::hash),
            seed: config.map(|c| c.seed),
            threads,
            args,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, base: &Path, path: &Path) -> Result<()> {
        let name = path.strip_prefix(base).unwrap_or(path).to_string_lossy().replace('\\', "/");
        self.outputs.push((name, file_sha256(path)?));
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
