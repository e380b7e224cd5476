//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion.
//!
//! Exits 0 even when a criterion fails, so that the trend criteria can be
//! reported without breaking `cargo test`; set `ACCEPTANCE_STRICT=1` to exit
//! 1 on any failure.

mod common;

use std::time::{Duration, Instant};

use advlogo::attack::{loss_dis, loss_tv, loss_tv_2d, train_attack, AttackRun, AttackScene, DistanceMode, LossWeights, TrainPlan};
use advlogo::boxes::BBox;
use advlogo::dataset::{render_dataset, DatasetSpec};
use advlogo::detector::{decode, train_detector, Architecture, DetectorModel, DetectorTrainConfig};
use advlogo::eval::{success_rate, Patch, SweepResult, SweepSpec};
use advlogo::image::Image;
use advlogo::mesh::{subdivide_simple, LogoRegion, Mesh, RegionSpec, TextureAtlas};
use advlogo::render::{rasterize, render, CameraPose, SceneConfig};
use advlogo::synth::{background, chest_and_thighs, humanoid, BodyPose, BodyShape, Outfit};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IMAGE_SIZE: usize = 96;
const DETECTOR_MESHES: usize = 40;
const DETECTOR_EPOCHS: usize = 45;
const ATTACK_MESHES: usize = 2;
const TRAIN_BACKGROUNDS: usize = 100;
const TEST_BACKGROUNDS: usize = 100;
const ATTACK_EPOCHS: usize = 30;

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn emit(passes: &mut Vec<bool>, o: Outcome, took: Duration) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {:>2}: {verdict}  {}  [{:.1}s]", o.id, o.detail, took.as_secs_f64());
    passes.push(o.pass);
}

fn run(passes: &mut Vec<bool>, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = f();
    emit(passes, o, start.elapsed());
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scaled(mesh: &Mesh, k: f64) -> Mesh {
    Mesh::new(mesh.vertices().iter().map(|v| v.map(|c| c * k)).collect(), mesh.faces().to_vec()).unwrap()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let w = LossWeights::default();
    let worst = (0..3).map(|s| worst_gradient_error(&gradient_case(s), &w, 1e-4)).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        pass: worst < 1e-3 && secs < 60.0,
        detail: format!("gradient check on 18 faces at 32px: worst rel err {worst:.2e} (< 1e-3), {secs:.1}s (< 60s)"),
    }
}

fn c2() -> Outcome {
    let mut r = rng(102);
    let mesh = icosahedron();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut faces: Vec<usize> = (0..mesh.face_count()).filter(|_| r.random_bool(0.7)).collect();
        if faces.is_empty() {
            faces.push(0);
        }
        let region = LogoRegion::from_faces(&mesh, &faces).unwrap();
        let atlas = TextureAtlas::from_colors((0..mesh.face_count()).map(|_| [r.random(), r.random(), r.random()]).collect());
        let tv = loss_tv(&atlas, &region).unwrap().0;
        worst = worst.max((tv - tv_oracle(&mesh, &faces, &atlas)).abs());
    }
    let mut exact = 0;
    for _ in 0..100 {
        let img = Image::from_fn(8, |_, _| [r.random(), r.random(), r.random()]);
        let oracle: f64 = (0..3)
            .map(|c| tv_2d_oracle(&(0..8).map(|y| (0..8).map(|x| img.get(c, x, y)).collect()).collect::<Vec<_>>()))
            .sum();
        exact += usize::from(loss_tv_2d(&img) == oracle);
    }
    Outcome {
        id: 2,
        pass: worst <= 1e-12 && exact == 100,
        detail: format!("mesh TV worst diff {worst:.1e} over 100 atlases (<= 1e-12); pixel TV exact on {exact}/100"),
    }
}

fn c3() -> Outcome {
    let mut r = rng(103);
    let mut exact = 0;
    for _ in 0..1000 {
        let cells = [2usize, 4, 8, 13][r.random_range(0..4)];
        let image = cells * 8;
        let dets = decode(&random_grid(&mut r, cells), image, image as f64 / 4.0);
        let gt = BBox {
            cx: r.random_range(0.0..image as f64),
            cy: r.random_range(0.0..image as f64),
            w: r.random_range(1.0..image as f64),
            h: r.random_range(1.0..image as f64),
        };
        exact += usize::from(loss_dis(&dets, &gt).value == dis_oracle(&dets, &gt));
    }
    Outcome {
        id: 3,
        pass: exact == 1000,
        detail: format!("DIS equals brute-force max on {exact}/1000 grids"),
    }
}

fn c4() -> Outcome {
    let mut r = rng(104);
    let cfg = |n| SceneConfig {
        image_size: n,
        ..SceneConfig::default()
    };
    let mut coverage_ok = 0;
    let mut scenes = 0;
    while scenes < 20 {
        let tri: [[f64; 3]; 3] = std::array::from_fn(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-0.5..0.5)]);
        let Ok(mesh) = Mesh::new(tri.to_vec(), vec![[0, 1, 2]]) else { continue };
        scenes += 1;
        let pose = CameraPose::new(r.random_range(2.0..3.0), r.random_range(-20.0..20.0), r.random_range(-60.0..60.0));
        let got = rasterize(&mesh, &pose, &cfg(48)).foreground_count();
        coverage_ok += usize::from(got == triangle_coverage_oracle(tri, &pose, 60.0, 48));
    }

    let mesh = scaled(&subdivide_simple(&icosahedron()), 0.5);
    let random = |r: &mut ChaCha8Rng| TextureAtlas::from_colors((0..mesh.face_count()).map(|_| [r.random(), r.random(), r.random()]).collect());
    let (a, b) = (random(&mut r), random(&mut r));
    let (alpha, beta) = (0.3, 0.45);
    let mix = TextureAtlas::from_colors(a.colors().iter().zip(b.colors()).map(|(x, y)| [0, 1, 2].map(|c| alpha * x[c] + beta * y[c])).collect());
    let black = Image::new(32);
    let mut linear_err: f64 = 0.0;
    for az in [-40.0, 0.0, 25.0] {
        let pose = CameraPose::new(2.2, 6.0, az);
        let [ra, rb, rm] = [&a, &b, &mix].map(|t| render(&mesh, &pose, &cfg(32), t, &black).unwrap().rgb);
        for i in 0..rm.data().len() {
            linear_err = linear_err.max((rm.data()[i] - alpha * ra.data()[i] - beta * rb.data()[i]).abs());
        }
    }

    let mut meshes = vec![scaled(&subdivide_simple(&subdivide_simple(&icosahedron())), 0.6)];
    meshes.extend((0..3).map(|_| mirrored_soup(&mut r, 12)));
    let bg = Image::filled(64, [0.4, 0.5, 0.6]);
    let mut mirror_err: f64 = 0.0;
    for m in &meshes {
        let atlas = TextureAtlas::from_colors(
            (0..m.face_count())
                .map(|f| {
                    let c = m.centroid(f);
                    [0.5 + 0.4 * (3.0 * c[0].abs()).sin(), 0.5 + 0.4 * (2.0 * c[1]).cos(), 0.5 + 0.4 * (c[2] + c[0].abs()).sin()]
                })
                .collect(),
        );
        for az in [5.0, 20.0, 45.0] {
            let l = render(m, &CameraPose::new(2.2, 6.0, -az), &cfg(64), &atlas, &bg).unwrap().rgb;
            let rr = render(m, &CameraPose::new(2.2, 6.0, az), &cfg(64), &atlas, &bg).unwrap().rgb.flip_horizontal();
            mirror_err = l.data().iter().zip(rr.data()).map(|(x, y)| (x - y).abs()).fold(mirror_err, f64::max);
        }
    }
    Outcome {
        id: 4,
        pass: coverage_ok == 20 && linear_err <= 1e-6 && mirror_err <= 1e-6,
        detail: format!(
            "coverage exact on {coverage_ok}/20 triangles; linearity err {linear_err:.1e}; mirror err {mirror_err:.1e} (<= 1e-6)"
        ),
    }
}

fn c5() -> Outcome {
    let tet = subdivide_simple(&tetrahedron());
    let mut r = rng(105);
    let mut ok = 0;
    for _ in 0..5 {
        let m = random_closed_mesh(&mut r);
        let s = subdivide_simple(&m);
        ok += usize::from(s.vertex_count() == m.vertex_count() + brute_force_edge_count(&m) && s.face_count() == 4 * m.face_count());
    }
    let tet_ok = (tet.vertex_count(), tet.face_count()) == (10, 16);
    Outcome {
        id: 5,
        pass: tet_ok && ok == 5,
        detail: format!(
            "tetrahedron -> ({}, {}); V'=V+E, F'=4F on {ok}/5 random closed meshes",
            tet.vertex_count(),
            tet.face_count()
        ),
    }
}

fn random_bodies(r: &mut ChaCha8Rng, n: usize) -> Vec<Mesh> {
    (0..n)
        .map(|_| subdivide_simple(&humanoid(&BodyPose::random(r), &BodyShape::random(r), &Outfit::random(r))))
        .collect()
}

/// Everything the trend criteria share.
struct Study {
    scene: SceneConfig,
    meshes: Vec<Mesh>,
    train_bgs: Vec<Image>,
    test_bgs: Vec<Image>,
    region: LogoRegion,
    det_a: DetectorModel,
    det_b: DetectorModel,
    plan: TrainPlan,
    weights: LossWeights,
}

impl Study {
    fn rates(&self, atlas: Option<&TextureAtlas>, det: &DetectorModel, spec: &SweepSpec) -> SweepResult {
        let patch = match atlas {
            Some(a) => Patch::logo(a, &self.region),
            None => Patch::none(),
        };
        success_rate(&self.meshes, &self.test_bgs, patch, det, &self.scene, spec).unwrap()
    }

    fn attack(&self, plan: &TrainPlan, weights: &LossWeights) -> AttackRun {
        let setup = AttackScene {
            meshes: &self.meshes,
            backgrounds: &self.train_bgs,
            region: &self.region,
            detector: &self.det_a,
            scene: &self.scene,
        };
        train_attack(&setup, plan, weights, |_, _| {}).unwrap()
    }
}

fn train(arch: Architecture, bodies: &[Mesh], bgs: &[Image], scene: &SceneConfig) -> (DetectorModel, Duration) {
    let start = Instant::now();
    let spec = DatasetSpec {
        positives: 2000,
        negatives: 1000,
        azimuth_range: 90.0,
        seed: 6,
        ..DatasetSpec::default()
    };
    let data = render_dataset(bodies, bgs, &spec, scene).unwrap();
    let cfg = DetectorTrainConfig {
        epochs: DETECTOR_EPOCHS,
        learning_rate: 0.02,
        decay_epochs: vec![DETECTOR_EPOCHS * 7 / 10, DETECTOR_EPOCHS * 9 / 10],
        seed: 6,
        ..DetectorTrainConfig::default()
    };
    let (model, _) = train_detector(&data, arch, &cfg).unwrap();
    (model, start.elapsed())
}

fn c6(none: &SweepResult, took: Duration) -> Outcome {
    let rate = none.mean_rate();
    Outcome {
        id: 6,
        pass: rate <= 0.10 && took.as_secs() <= 30 * 60,
        detail: format!(
            "detector A misses {rate:.3} of held-out renders over [-10,10] (<= 0.10), trained in {:.0}s (<= 1800s)",
            took.as_secs_f64()
        ),
    }
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut outcomes = Vec::new();
    for f in [c1, c2, c3, c4, c5] {
        run(&mut outcomes, f);
    }

    let scene = SceneConfig {
        image_size: IMAGE_SIZE,
        translation_range: (50 * IMAGE_SIZE / 416) as i64,
        ..SceneConfig::default()
    };
    let bodies = random_bodies(&mut rng(201), DETECTOR_MESHES);
    let det_bgs: Vec<Image> = {
        let mut r = rng(202);
        (0..300).map(|_| background(IMAGE_SIZE, &mut r)).collect()
    };
    let meshes = random_bodies(&mut rng(203), ATTACK_MESHES);
    let train_bgs: Vec<Image> = {
        let mut r = rng(204);
        (0..TRAIN_BACKGROUNDS).map(|_| background(IMAGE_SIZE, &mut r)).collect()
    };
    let test_bgs: Vec<Image> = {
        let mut r = rng(205);
        (0..TEST_BACKGROUNDS).map(|_| background(IMAGE_SIZE, &mut r)).collect()
    };
    let region = LogoRegion::select(&meshes[0], &RegionSpec::Boxes(chest_and_thighs())).unwrap();
    let (det_a, took_a) = train(Architecture::whitebox(IMAGE_SIZE), &bodies, &det_bgs, &scene);
    let (det_b, _) = train(Architecture::blackbox(IMAGE_SIZE), &bodies, &det_bgs, &scene);
    let study = Study {
        scene,
        meshes,
        train_bgs,
        test_bgs,
        region,
        det_a,
        det_b,
        plan: TrainPlan {
            epochs: ATTACK_EPOCHS,
            batch_size: 4,
            seed: 7,
            snapshot_period: 0,
            ..TrainPlan::default()
        },
        weights: LossWeights::resolution_equivalent(IMAGE_SIZE),
    };
    let none_a = study.rates(None, &study.det_a, &SweepSpec::narrow());
    emit(&mut outcomes, c6(&none_a, took_a), took_a);

    let narrow = SweepSpec::narrow();
    let wide = SweepSpec::wide();
    let distance = SweepSpec::distance();
    let timed = |f: &dyn Fn() -> AttackRun| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed())
    };
    let (single, t_single) = timed(&|| study.attack(&study.plan, &study.weights));
    let single_narrow = study.rates(Some(&single.atlas), &study.det_a, &narrow);
    let at0 = single_narrow.cell(0.0, 2.2).unwrap().rate();
    emit(
        &mut outcomes,
        Outcome {
            id: 7,
            pass: at0 >= 0.80,
            detail: format!(
                "single-angle atlas success vs A at 0 deg: {at0:.3} (>= 0.80), unperturbed {:.3}; {ATTACK_EPOCHS} epochs",
                none_a.cell(0.0, 2.2).unwrap().rate()
            ),
        },
        t_single,
    );

    let (multi, t_multi) = timed(&|| {
        study.attack(
            &TrainPlan {
                azimuths: TrainPlan::multi_angle_azimuths(),
                ..study.plan.clone()
            },
            &study.weights,
        )
    });
    let multi_wide = study.rates(Some(&multi.atlas), &study.det_a, &wide);
    let multi_narrow = study.rates(Some(&multi.atlas), &study.det_a, &narrow);
    let m0 = multi_wide.cell(0.0, 2.2).unwrap().rate();
    let m50 = multi_wide.mean_rate_where(|c| c.azimuth.abs() == 50.0);
    let pass = m0 - m50 >= 0.2 && multi_narrow.mean_rate() > single_narrow.mean_rate();
    emit(
        &mut outcomes,
        Outcome {
            id: 8,
            pass,
            detail: format!(
                "multi-angle: {m0:.3} at 0 vs {m50:.3} at |50| (gap >= 0.2); [-10,10] mean {:.3} vs single {:.3} (greater)",
                multi_narrow.mean_rate(),
                single_narrow.mean_rate()
            ),
        },
        t_multi,
    );

    let (no_tv, t_no_tv) = timed(&|| {
        study.attack(
            &study.plan,
            &LossWeights {
                lambda_tv: 0.0,
                ..study.weights
            },
        )
    });
    let tv_with = loss_tv(&single.atlas, &study.region).unwrap().0;
    let tv_without = loss_tv(&no_tv.atlas, &study.region).unwrap().0;
    let unseen = |r: &SweepResult| r.mean_rate_where(|c| c.azimuth.abs() == 10.0);
    let no_tv_unseen = unseen(&study.rates(Some(&no_tv.atlas), &study.det_a, &narrow));
    let pass = tv_without > tv_with && no_tv_unseen <= unseen(&single_narrow);
    emit(
        &mut outcomes,
        Outcome {
            id: 9,
            pass,
            detail: format!(
                "TV {tv_without:.3} without vs {tv_with:.3} with the TV term (higher); unseen +-10 success {no_tv_unseen:.3} vs {:.3} (not higher)",
                unseen(&single_narrow)
            ),
        },
        t_no_tv,
    );

    let start = Instant::now();
    let on_b = study.rates(Some(&single.atlas), &study.det_b, &narrow).mean_rate();
    let none_b = study.rates(None, &study.det_b, &narrow).mean_rate();
    let pass = on_b - none_b >= 0.15;
    emit(
        &mut outcomes,
        Outcome {
            id: 10,
            pass,
            detail: format!("transfer to B over [-10,10]: {on_b:.3} vs none {none_b:.3}, gain {:.3} (>= 0.15)", on_b - none_b),
        },
        start.elapsed(),
    );

    let (random_d, t_random) = timed(&|| {
        study.attack(
            &TrainPlan {
                distance: DistanceMode::Uniform { min: 1.4, max: 3.0 },
                ..study.plan.clone()
            },
            &study.weights,
        )
    });
    let fixed = study.rates(Some(&single.atlas), &study.det_a, &distance);
    let randomized = study.rates(Some(&random_d.atlas), &study.det_a, &distance);
    let at = |r: &SweepResult, d: f64| r.cell(0.0, d).unwrap().rate();
    let mid = at(&fixed, 2.2);
    let mut pass = true;
    let mut parts = vec![format!("fixed at 2.2: {mid:.3}")];
    for d in [1.4, 3.0] {
        let lost = mid - at(&fixed, d);
        let recovered = at(&randomized, d) - at(&fixed, d);
        pass &= lost >= 0.2 && recovered >= 0.5 * lost;
        parts.push(format!(
            "at {d}: fixed {:.3} (loss {lost:.3} >= 0.2), randomized {:.3} (recovers {recovered:.3} >= {:.3})",
            at(&fixed, d),
            at(&randomized, d),
            0.5 * lost
        ));
    }
    emit(
        &mut outcomes,
        Outcome {
            id: 11,
            pass,
            detail: parts.join("; "),
        },
        t_random,
    );

    run(&mut outcomes, c12);

    let passed = outcomes.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if strict && passed != outcomes.len() {
        std::process::exit(1);
    }
}

fn c12() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let ws = cli_workspace(tmp.path(), 32, 3);
    let cfg = ws.config.to_str().unwrap().to_string();
    let files = |run: &str| -> Vec<(String, Vec<u8>)> {
        let out = ws.dir.join(run);
        let out_s = out.to_str().unwrap().to_string();
        assert_eq!(advlogo(&["--threads", "1", "attack-train", &cfg, "--output", &out_s]), 0);
        let ckpt = out.join("atlas.ckpt");
        for preset in ["narrow", "distance"] {
            let code = advlogo(&["--threads", "1", "eval-sweep", &cfg, "--atlas", ckpt.to_str().unwrap(), "--preset", preset, "--output", &out_s]);
            assert_eq!(code, 0);
        }
        let mut paths = vec![ckpt];
        paths.extend(advlogo::config::list_files(&out.join("eval"), "csv").unwrap());
        paths.extend(advlogo::config::list_files(&out.join("eval"), "svg").unwrap());
        paths
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect()
    };
    let (a, b) = (files("run1"), files("run2"));
    let same = a == b;
    Outcome {
        id: 12,
        pass: same,
        detail: format!(
            "two 3-epoch attack-train runs with --threads 1: checkpoint and {} eval files {}",
            a.len() - 1,
            if same { "byte-identical" } else { "differ" }
        ),
    }
}
