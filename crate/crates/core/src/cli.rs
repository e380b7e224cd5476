//! Command-line front end. Every command writes `<command>.manifest.json`
//! next to its outputs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attack::{save_checkpoint, snapshot_image, snapshot_strip, train_attack, AttackScene, load_checkpoint};
use crate::config::{load_backgrounds, load_config, load_meshes, Manifest, Need, RunConfig};
use crate::dataset::render_dataset;
use crate::detector::{load_weights, save_weights, train_detector, Architecture, DetectorModel};
use crate::error::{Error, Result};
use crate::eval::{emit_report, read_report_csv, success_rate, Patch, ReportEntry, SweepSpec};
use crate::image::save_rgb8;
use crate::mesh::{Aabb, LogoRegion, RegionSpec, TextureAtlas};
use crate::render::{render, CameraPose};

#[derive(Debug, Parser)]
#[command(name = "advlogo", version, about = "Adversarial mesh logos against grid detectors")]
pub struct Cli {
    /// Worker threads; 1 gives the strictly sequential path.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Overrides the config's global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `plan.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `paths.output`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a training set and train the whitebox and blackbox detectors.
    DetectorTrain {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Optimize the logo atlas against the whitebox detector.
    AttackTrain {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Attack success rate over a camera sweep.
    EvalSweep {
        config: PathBuf,
        /// Atlas checkpoint, or `none` for the meshes' own colors.
        #[arg(long)]
        atlas: String,
        #[arg(long, value_parser = ["narrow", "wide", "distance"])]
        preset: String,
        /// Which detector to attack: `a` (whitebox) or `b` (blackbox).
        #[arg(long, default_value = "a", value_parser = ["a", "b"])]
        detector: String,
        /// Series label; defaults to the atlas file stem.
        #[arg(long)]
        label: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render one mesh over one test background.
    RenderPreview {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        azimuth: f64,
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        atlas: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        mesh: usize,
        #[arg(long, default_value_t = 0)]
        background: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a `.faces` region file from boxes or a face list.
    RegionSelect {
        config: PathBuf,
        /// `minx,miny,minz,maxx,maxy,maxz`; repeat for several boxes.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "faces", required_unless_present = "faces")]
        aabb: Vec<String>,
        #[arg(long)]
        faces: Option<PathBuf>,
        /// Output file; defaults to `<output>/region.faces`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Merge sweep CSVs into one comparison chart.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses arguments, runs, prints a one-line reason on failure and returns
/// the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be >= 1"));
        }
        // A second call in one process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn config_with(path: &Path, o: &Overrides, needs: &[Need]) -> Result<RunConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
        cfg.apply_seed();
    }
    if let Some(e) = o.epochs {
        cfg.plan.epochs = e;
    }
    if let Some(out) = &o.output {
        cfg.paths.output = Some(out.clone());
    }
    cfg.validate(needs)?;
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(cfg)
}

fn load_region(cfg: &RunConfig, mesh: &crate::mesh::Mesh) -> Result<LogoRegion> {
    let path = cfg.paths.region.as_ref().expect("validated");
    LogoRegion::select(mesh, &RegionSpec::load(path)?)
}

pub fn run(cli: &Cli, args: Vec<String>) -> Result<()> {
    set_threads(cli.threads)?;
    match &cli.command {
        Command::DetectorTrain { config, overrides } => {
            let cfg = config_with(config, overrides, &[Need::Meshes, Need::BackgroundsTrain])?;
            let out = cfg.output_dir();
            let mesh_dir = cfg.paths.detector_meshes.clone().or(cfg.paths.meshes.clone()).expect("validated");
            let meshes = load_meshes(&mesh_dir)?;
            let bgs = load_backgrounds(cfg.paths.backgrounds_train.as_ref().expect("validated"), cfg.scene.image_size)?;
            let data = render_dataset(&meshes, &bgs, &cfg.dataset, &cfg.scene)?;
            let mut manifest = Manifest::new("detector-train", Some(&cfg), args, cli.threads);
            for (arch, path) in [
                (Architecture::whitebox(cfg.scene.image_size), cfg.detector_a_path()),
                (Architecture::blackbox(cfg.scene.image_size), cfg.detector_b_path()),
            ] {
                let arch = Architecture {
                    threshold: cfg.eval.threshold,
                    ..arch
                };
                let name = arch.name.clone();
                let (model, trace) = train_detector(&data, arch, &cfg.detector)?;
                save_weights(&model, &path)?;
                let loss_path = out.join(format!("detector_{name}_loss.csv"));
                let mut text = String::from("epoch,loss\n");
                for (i, l) in trace.epoch_losses.iter().enumerate() {
                    text.push_str(&format!("{i},{l}\n"));
                }
                std::fs::write(&loss_path, text).map_err(|e| Error::io(&loss_path, e))?;
                manifest.add_output(&out, &path)?;
                manifest.add_output(&out, &loss_path)?;
            }
            manifest.write(&out.join("detector-train.manifest.json"))
        }
        Command::AttackTrain { config, overrides } => {
            let cfg = config_with(
                config,
                overrides,
                &[Need::Meshes, Need::BackgroundsTrain, Need::Region, Need::DetectorA],
            )?;
            let out = cfg.output_dir();
            let meshes = load_meshes(cfg.paths.meshes.as_ref().expect("validated"))?;
            let bgs = load_backgrounds(cfg.paths.backgrounds_train.as_ref().expect("validated"), cfg.scene.image_size)?;
            let region = load_region(&cfg, &meshes[0])?;
            let detector = load_weights(cfg.detector_a_path())?;
            let setup = AttackScene {
                meshes: &meshes,
                backgrounds: &bgs,
                region: &region,
                detector: &detector,
                scene: &cfg.scene,
            };
            let mut manifest = Manifest::new("attack-train", Some(&cfg), args, cli.threads);
            let run = match train_attack(&setup, &cfg.plan, &cfg.loss, |s, _| {
                log::info!("epoch {}: dis {:.4} tv {:.4}", s.epoch, s.mean_dis, s.tv)
            }) {
                Ok(r) => r,
                Err(e @ Error::Numeric(_)) => {
                    let p = out.join("attack-train.failed.json");
                    let body = serde_json::json!({ "config_hash": cfg.hash(), "error": e.to_string() });
                    let _ = std::fs::write(&p, format!("{body:#}\n"));
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            let ckpt = out.join("atlas.ckpt");
            save_checkpoint(&ckpt, &run.atlas, &region, cfg.plan.epochs)?;
            manifest.add_output(&out, &ckpt)?;

            let loss_path = out.join("attack_loss.csv");
            let mut text = String::from("epoch,lr,mean_dis,tv,total\n");
            for s in &run.trace {
                text.push_str(&format!("{},{},{},{},{}\n", s.epoch, s.lr, s.mean_dis, s.tv, s.total));
            }
            std::fs::write(&loss_path, text).map_err(|e| Error::io(&loss_path, e))?;
            manifest.add_output(&out, &loss_path)?;

            let snaps = out.join("snapshots");
            std::fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
            for (epoch, atlas) in &run.snapshots {
                let png = snaps.join(format!("epoch_{epoch:04}.png"));
                let (w, h, rgb) = snapshot_image(atlas, &region, 4);
                save_rgb8(&png, w, h, &rgb)?;
                let raw = snaps.join(format!("epoch_{epoch:04}.ckpt"));
                save_checkpoint(&raw, atlas, &region, *epoch)?;
                manifest.add_output(&out, &png)?;
                manifest.add_output(&out, &raw)?;
            }
            let all: Vec<&TextureAtlas> = run.snapshots.iter().map(|(_, a)| a).collect();
            let (w, h, rgb) = snapshot_strip(&all, &region, 4);
            let strip = snaps.join("strip.png");
            save_rgb8(&strip, w, h, &rgb)?;
            manifest.add_output(&out, &strip)?;
            manifest.write(&out.join("attack-train.manifest.json"))
        }
        Command::EvalSweep {
            config,
            atlas,
            preset,
            detector,
            label,
            overrides,
        } => {
            let det_need = if detector == "a" { Need::DetectorA } else { Need::DetectorB };
            let mut needs = vec![Need::Meshes, Need::BackgroundsTest, det_need];
            if atlas != "none" {
                needs.push(Need::Region);
            }
            let cfg = config_with(config, overrides, &needs)?;
            let out = cfg.output_dir();
            let meshes = load_meshes(cfg.paths.meshes.as_ref().expect("validated"))?;
            let bgs = load_backgrounds(cfg.paths.backgrounds_test.as_ref().expect("validated"), cfg.scene.image_size)?;
            let model: DetectorModel =
                load_weights(if detector == "a" { cfg.detector_a_path() } else { cfg.detector_b_path() })?;
            let spec = SweepSpec {
                threshold: cfg.eval.threshold,
                elevation: cfg.eval.elevation,
                ..SweepSpec::preset(preset)?
            };
            let loaded;
            let patch = if atlas == "none" {
                Patch::none()
            } else {
                let region = load_region(&cfg, &meshes[0])?;
                let (_, a) = load_checkpoint(atlas, &region)?;
                loaded = (a, region);
                Patch::logo(&loaded.0, &loaded.1)
            };
            let result = success_rate(&meshes, &bgs, patch, &model, &cfg.scene, &spec)?;
            let label = label.clone().unwrap_or_else(|| {
                Path::new(atlas)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "atlas".into())
            });
            let entries = [ReportEntry { label, result }];
            let (csv, svg) = emit_report(out.join("eval"), &entries)?;
            let mut manifest = Manifest::new("eval-sweep", Some(&cfg), args, cli.threads);
            manifest.add_output(&out, &csv)?;
            manifest.add_output(&out, &svg)?;
            let stem = csv.file_stem().expect("named").to_string_lossy().into_owned();
            manifest.write(&out.join("eval").join(format!("{stem}.manifest.json")))
        }
        Command::RenderPreview {
            config,
            azimuth,
            distance,
            atlas,
            mesh,
            background,
            overrides,
        } => {
            let mut needs = vec![Need::Meshes, Need::BackgroundsTest];
            if atlas.is_some() {
                needs.push(Need::Region);
            }
            let cfg = config_with(config, overrides, &needs)?;
            let out = cfg.output_dir();
            let meshes = load_meshes(cfg.paths.meshes.as_ref().expect("validated"))?;
            let bgs = load_backgrounds(cfg.paths.backgrounds_test.as_ref().expect("validated"), cfg.scene.image_size)?;
            let m = meshes
                .get(*mesh)
                .ok_or_else(|| Error::config("--mesh", format!("only {} meshes", meshes.len())))?;
            let bg = bgs
                .get(*background)
                .ok_or_else(|| Error::config("--background", format!("only {} backgrounds", bgs.len())))?;
            let d = distance.unwrap_or(match cfg.plan.distance {
                crate::attack::DistanceMode::Fixed(d) => d,
                crate::attack::DistanceMode::Uniform { min, max } => 0.5 * (min + max),
            });
            let pose = CameraPose::new(d, cfg.plan.elevation, *azimuth);
            pose.validate().map_err(|e| Error::config("--azimuth", e.to_string()))?;
            let mut colors = m.base_atlas();
            if let Some(p) = atlas {
                let region = load_region(&cfg, m)?;
                colors = colors.overlay(&load_checkpoint(p, &region)?.1, &region)?;
            }
            let product = render(m, &pose, &cfg.scene, &colors, bg)?;
            let png = out.join(format!("preview_az{}_d{}.png", fmt_value(*azimuth), fmt_value(d)));
            product.rgb.save_png(&png)?;
            let mut manifest = Manifest::new("render-preview", Some(&cfg), args, cli.threads);
            manifest.add_output(&out, &png)?;
            let stem = png.file_stem().expect("named").to_string_lossy().into_owned();
            manifest.write(&out.join(format!("{stem}.manifest.json")))
        }
        Command::RegionSelect {
            config,
            aabb,
            faces,
            out: target,
            overrides,
        } => {
            let cfg = config_with(config, overrides, &[Need::Meshes])?;
            let out = cfg.output_dir();
            let meshes = load_meshes(cfg.paths.meshes.as_ref().expect("validated"))?;
            let spec = match faces {
                Some(p) => RegionSpec::load(p)?,
                None => RegionSpec::Boxes(aabb.iter().map(|s| parse_aabb(s)).collect::<Result<_>>()?),
            };
            let region = LogoRegion::select(&meshes[0], &spec)?;
            let target = target.clone().unwrap_or_else(|| out.join("region.faces"));
            region.write_faces(&target)?;
            let mut manifest = Manifest::new("region-select", Some(&cfg), args, cli.threads);
            manifest.add_output(&out, &target)?;
            manifest.write(&out.join("region-select.manifest.json"))
        }
        Command::Report { csv, out } => {
            let mut entries: Vec<ReportEntry> = Vec::new();
            for p in csv {
                for e in read_report_csv(p)? {
                    if entries.iter().any(|x| x.label == e.label && x.result.detector == e.result.detector) {
                        return Err(Error::Dataset(format!("label `{}` appears twice", e.label)));
                    }
                    entries.push(e);
                }
            }
            let (c, s) = emit_report(out, &entries)?;
            let mut manifest = Manifest::new("report", None, args, cli.threads);
            manifest.add_output(out, &c)?;
            manifest.add_output(out, &s)?;
            manifest.write(&out.join("report.manifest.json"))
        }
    }
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

/// `minx,miny,minz,maxx,maxy,maxz`.
pub fn parse_aabb(s: &str) -> Result<Aabb> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::config("--aabb", format!("`{s}` is not six comma-separated numbers")))?;
    if v.len() != 6 {
        return Err(Error::config("--aabb", format!("`{s}` is not six comma-separated numbers")));
    }
    Ok(Aabb {
        min: [v[0], v[1], v[2]],
        max: [v[3], v[4], v[5]],
    })
}
