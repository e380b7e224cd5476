//! Desk-scale setup shared by the examples: synthetic people and
//! backgrounds, a chest-and-thighs logo, and detectors cached on disk.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use advlogo::attack::{train_attack, AttackRun, AttackScene, LossWeights, TrainPlan};
use advlogo::dataset::{render_dataset, DatasetSpec};
use advlogo::detector::{load_weights, save_weights, train_detector, Architecture, DetectorModel, DetectorTrainConfig};
use advlogo::eval::{success_rate, Patch, SweepResult, SweepSpec};
use advlogo::image::Image;
use advlogo::mesh::{subdivide_simple, LogoRegion, Mesh, RegionSpec, TextureAtlas};
use advlogo::render::SceneConfig;
use advlogo::synth::{background, chest_and_thighs, humanoid, BodyPose, BodyShape, Outfit};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Parser)]
pub struct Opts {
    /// Square render size in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Attack epochs.
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    /// Detector training epochs.
    #[arg(long, default_value_t = 45)]
    pub detector_epochs: usize,
    /// Training and test backgrounds, each.
    #[arg(long, default_value_t = 100)]
    pub backgrounds: usize,
    /// Output directory; trained detectors are cached here too.
    #[arg(long, default_value = "target/advlogo-examples")]
    pub out: PathBuf,
}

pub struct Desk {
    pub opts: Opts,
    pub scene: SceneConfig,
    pub meshes: Vec<Mesh>,
    pub train_bgs: Vec<Image>,
    pub test_bgs: Vec<Image>,
    pub region: LogoRegion,
}

pub fn people(seed: u64, n: usize) -> Vec<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            subdivide_simple(&humanoid(
                &BodyPose::random(&mut rng),
                &BodyShape::random(&mut rng),
                &Outfit::random(&mut rng),
            ))
        })
        .collect()
}

pub fn backgrounds(seed: u64, n: usize, size: usize) -> Vec<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| background(size, &mut rng)).collect()
}

impl Desk {
    pub fn new(opts: Opts) -> Self {
        std::fs::create_dir_all(&opts.out).expect("output directory");
        let scene = SceneConfig {
            image_size: opts.size,
            translation_range: (50 * opts.size / 416) as i64,
            ..SceneConfig::default()
        };
        let meshes = people(203, 2);
        let region = LogoRegion::select(&meshes[0], &RegionSpec::Boxes(chest_and_thighs())).expect("region");
        Desk {
            train_bgs: backgrounds(204, opts.backgrounds, opts.size),
            test_bgs: backgrounds(205, opts.backgrounds, opts.size),
            scene,
            meshes,
            region,
            opts,
        }
    }

    /// Loads `<out>/detector_<name>_<size>.weights`, training and saving it
    /// first if missing.
    pub fn detector(&self, arch: Architecture) -> DetectorModel {
        let path = self.opts.out.join(format!("detector_{}_{}.weights", arch.name, self.opts.size));
        if let Ok(d) = load_weights(&path) {
            return d;
        }
        eprintln!("training detector {} at {}px", arch.name, self.opts.size);
        let data = render_dataset(
            &people(201, 40),
            &backgrounds(202, 300, self.opts.size),
            &DatasetSpec {
                azimuth_range: 90.0,
                ..DatasetSpec::default()
            },
            &self.scene,
        )
        .expect("dataset");
        let e = self.opts.detector_epochs;
        let cfg = DetectorTrainConfig {
            epochs: e,
            learning_rate: 0.02,
            decay_epochs: vec![e * 7 / 10, e * 9 / 10],
            ..DetectorTrainConfig::default()
        };
        let (model, _) = train_detector(&data, arch, &cfg).expect("detector training");
        save_weights(&model, &path).expect("save weights");
        model
    }

    pub fn whitebox(&self) -> DetectorModel {
        self.detector(Architecture::whitebox(self.opts.size))
    }

    pub fn blackbox(&self) -> DetectorModel {
        self.detector(Architecture::blackbox(self.opts.size))
    }

    pub fn plan(&self) -> TrainPlan {
        TrainPlan {
            epochs: self.opts.epochs,
            batch_size: 4,
            snapshot_period: 0,
            ..TrainPlan::default()
        }
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights::resolution_equivalent(self.opts.size)
    }

    pub fn attack(&self, detector: &DetectorModel, plan: &TrainPlan, weights: &LossWeights) -> AttackRun {
        let setup = AttackScene {
            meshes: &self.meshes,
            backgrounds: &self.train_bgs,
            region: &self.region,
            detector,
            scene: &self.scene,
        };
        train_attack(&setup, plan, weights, |s, _| {
            eprintln!("epoch {:>3}  lr {:.4}  dis {:.4}  tv {:.3}", s.epoch, s.lr, s.mean_dis, s.tv)
        })
        .expect("attack")
    }

    pub fn sweep(&self, atlas: Option<&TextureAtlas>, detector: &DetectorModel, spec: &SweepSpec) -> SweepResult {
        let patch = match atlas {
            Some(a) => Patch::logo(a, &self.region),
            None => Patch::none(),
        };
        success_rate(&self.meshes, &self.test_bgs, patch, detector, &self.scene, spec).expect("sweep")
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }
}

pub fn print_sweep(label: &str, r: &SweepResult) {
    let cells: Vec<String> = r
        .cells
        .iter()
        .map(|c| {
            if r.sweep == "distance" {
                format!("{}m:{:.2}", c.distance, c.rate())
            } else {
                format!("{}:{:.2}", c.azimuth, c.rate())
            }
        })
        .collect();
    println!("{label:<12} mean {:.3}  {}", r.mean_rate(), cells.join(" "));
}

pub fn ensure_dir(p: &Path) {
    std::fs::create_dir_all(p).expect("directory");
}
