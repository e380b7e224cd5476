//! Fixtures and brute-force oracles shared by the integration tests and the
//! acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use advlogo::attack::{loss_dis, loss_total, loss_tv, total_gradient, LossWeights};
use advlogo::detector::{Architecture, Detection, DetectorModel, RawGrid};
use advlogo::image::Image;
use advlogo::render::{augment, composite, rasterize, AugmentParams, RasterBuffer, SceneConfig};
use advlogo::geom::Vec3;
use advlogo::mesh::{LogoRegion, Mesh, TextureAtlas};
use advlogo::render::CameraPose;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn tetrahedron() -> Mesh {
    Mesh::new(
        vec![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
    .unwrap()
}

pub fn octahedron() -> Mesh {
    Mesh::new(
        vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ],
    )
    .unwrap()
}

pub fn icosahedron() -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    Mesh::new(v, f).unwrap()
}

/// `nx × ny` quads split into triangles, in the z = 0 plane, centered on the
/// origin, front faces toward +z.
pub fn planar_grid(nx: usize, ny: usize, half: f64) -> Mesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -half + 2.0 * half * i as f64 / nx as f64;
            let y = -half + 2.0 * half * j as f64 / ny as f64;
            v.push([x, y, 0.0]);
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut f = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(v, f).unwrap()
}

/// A closed polyhedron with shuffled vertex labels, rotated face winding and
/// jittered radii.
pub fn random_closed_mesh(rng: &mut impl Rng) -> Mesh {
    let base = match rng.random_range(0..3) {
        0 => tetrahedron(),
        1 => octahedron(),
        _ => icosahedron(),
    };
    let base = if rng.random_bool(0.5) {
        advlogo::mesh::subdivide_simple(&base)
    } else {
        base
    };
    let n = base.vertex_count();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut verts = vec![[0.0; 3]; n];
    for (old, &new) in perm.iter().enumerate() {
        let r = rng.random_range(0.8..1.2);
        verts[new as usize] = base.vertices()[old].map(|c| c * r);
    }
    let mut faces: Vec<[u32; 3]> = base
        .faces()
        .iter()
        .map(|f| {
            let g = f.map(|i| perm[i as usize]);
            let k = rng.random_range(0..3);
            [g[k], g[(k + 1) % 3], g[(k + 2) % 3]]
        })
        .collect();
    faces.shuffle(rng);
    Mesh::new(verts, faces).unwrap()
}

/// Number of vertex pairs that appear together in some face, by checking
/// every pair against every face.
pub fn brute_force_edge_count(mesh: &Mesh) -> usize {
    let n = mesh.vertex_count() as u32;
    let mut count = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            if mesh.faces().iter().any(|f| f.contains(&a) && f.contains(&b)) {
                count += 1;
            }
        }
    }
    count
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Mesh TV by enumerating every pair of region faces and keeping those that
/// share exactly two vertices.
pub fn tv_oracle(mesh: &Mesh, faces: &[usize], atlas: &TextureAtlas) -> f64 {
    let mut tv = 0.0;
    for (i, &fa) in faces.iter().enumerate() {
        for &fb in &faces[i + 1..] {
            let a: BTreeSet<u32> = mesh.faces()[fa].iter().copied().collect();
            let b: BTreeSet<u32> = mesh.faces()[fb].iter().copied().collect();
            let shared: Vec<u32> = a.intersection(&b).copied().collect();
            if shared.len() != 2 {
                continue;
            }
            let len = dist(mesh.vertices()[shared[0] as usize], mesh.vertices()[shared[1] as usize]);
            let (ca, cb) = (atlas.get(fa), atlas.get(fb));
            tv += len * (0..3).map(|c| (ca[c] - cb[c]).abs()).sum::<f64>();
        }
    }
    tv
}

/// Row-by-row sum of vertical then horizontal neighbour differences.
pub fn tv_2d_oracle(r: &[Vec<f64>]) -> f64 {
    let h = r.len();
    let w = r[0].len();
    let mut s = 0.0;
    for i in 0..h {
        for j in 0..w {
            if i + 1 < h {
                s += (r[i + 1][j] - r[i][j]).abs();
            }
            if j + 1 < w {
                s += (r[i][j + 1] - r[i][j]).abs();
            }
        }
    }
    s
}

/// Boxes as `(x0, y0, x1, y1)`.
fn corners(cx: f64, cy: f64, w: f64, h: f64) -> (f64, f64, f64, f64) {
    (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
}

fn overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let ix = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let iy = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    let inter = ix * iy;
    let area = |r: (f64, f64, f64, f64)| (r.2 - r.0).max(0.0) * (r.3 - r.1).max(0.0);
    let union = area(a) + area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Containment rule written out from scratch: the box center lies in the
/// target (closed) or the boxes overlap with IoU at least 0.1.
pub fn contains_oracle(d: &Detection, gt: &advlogo::boxes::BBox) -> bool {
    let g = corners(gt.cx, gt.cy, gt.w, gt.h);
    let b = corners(d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h);
    let center_in = d.bbox.cx >= g.0 && d.bbox.cx <= g.2 && d.bbox.cy >= g.1 && d.bbox.cy <= g.3;
    center_in || overlap(b, g) >= 0.1
}

pub fn dis_oracle(dets: &[Detection], gt: &advlogo::boxes::BBox) -> f64 {
    dets.iter()
        .filter(|d| contains_oracle(d, gt))
        .map(|d| d.confidence)
        .fold(0.0, f64::max)
}

pub fn random_grid(rng: &mut impl Rng, size: usize) -> RawGrid {
    let mut g = RawGrid::zeros(size);
    for v in g.data.iter_mut() {
        *v = rng.random_range(-4.0..4.0);
    }
    g
}

/// Foreground pixel count of one triangle, testing each pixel center with
/// barycentric coordinates from an explicitly built look-at projection.
pub fn triangle_coverage_oracle(tri: [Vec3; 3], pose: &CameraPose, fov_deg: f64, size: usize) -> usize {
    let (el, az) = (pose.elevation.to_radians(), pose.azimuth.to_radians());
    let eye = [
        pose.distance * el.cos() * az.sin(),
        pose.distance * el.sin(),
        pose.distance * el.cos() * az.cos(),
    ];
    let len = |v: Vec3| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let fwd = {
        let l = len(eye);
        [-eye[0] / l, -eye[1] / l, -eye[2] / l]
    };
    // right = fwd × (0,1,0), up = right × fwd
    let r = [-fwd[2], 0.0, fwd[0]];
    let rl = len(r);
    let right = [r[0] / rl, r[1] / rl, r[2] / rl];
    let up = [
        right[1] * fwd[2] - right[2] * fwd[1],
        right[2] * fwd[0] - right[0] * fwd[2],
        right[0] * fwd[1] - right[1] * fwd[0],
    ];
    let f = 1.0 / (fov_deg.to_radians() / 2.0).tan();
    let dot = |a: Vec3, b: Vec3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut p = [[0.0; 2]; 3];
    for (k, v) in tri.iter().enumerate() {
        let rel = [v[0] - eye[0], v[1] - eye[1], v[2] - eye[2]];
        let depth = dot(rel, fwd);
        assert!(depth > 1e-3, "oracle expects the triangle in front of the camera");
        p[k] = [f * dot(rel, right) / depth, f * dot(rel, up) / depth];
    }
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut count = 0;
    for row in 0..size {
        for col in 0..size {
            let x = (2.0 * col as f64 + 1.0) / size as f64 - 1.0;
            let y = 1.0 - (2.0 * row as f64 + 1.0) / size as f64;
            let (dx, dy) = (x - p[0][0], y - p[0][1]);
            let u = (dx * (p[2][1] - p[0][1]) - dy * (p[2][0] - p[0][0])) / det;
            let v = ((p[1][0] - p[0][0]) * dy - (p[1][1] - p[0][1]) * dx) / det;
            if u >= 0.0 && v >= 0.0 && u + v <= 1.0 {
                count += 1;
            }
        }
    }
    count
}

/// Face indices of `region` as `usize`.
pub fn region_faces(region: &LogoRegion) -> Vec<usize> {
    region.face_ids().iter().map(|&f| f as usize).collect()
}

/// Random triangles on the `x > 0.05` side plus their reflections through
/// `x = 0` with reversed winding, so the soup is exactly left-right symmetric.
pub fn mirrored_soup(rng: &mut impl Rng, triangles: usize) -> Mesh {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for _ in 0..triangles {
        let c: Vec3 = [rng.random_range(0.15..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.4..0.4)];
        let tri: [Vec3; 3] = std::array::from_fn(|_| {
            [
                (c[0] + rng.random_range(-0.1f64..0.1)).max(0.05),
                c[1] + rng.random_range(-0.25..0.25),
                c[2] + rng.random_range(-0.25..0.25),
            ]
        });
        let base = v.len() as u32;
        v.extend(tri);
        v.extend(tri.iter().map(|p| [-p[0], p[1], p[2]]));
        f.push([base, base + 1, base + 2]);
        f.push([base + 3, base + 5, base + 4]);
    }
    Mesh::new(v, f).unwrap()
}

/// A complete on-disk run directory: two humanoid OBJs, train and test
/// background PNGs, a chest-and-thighs region, seed-initialized weights for
/// both detectors and `config.json` wiring them together.
pub struct Workspace {
    pub dir: std::path::PathBuf,
    pub config: std::path::PathBuf,
}

pub fn cli_workspace(dir: &std::path::Path, size: usize, epochs: usize) -> Workspace {
    use advlogo::detector::{save_weights, Architecture, DetectorModel};
    use advlogo::mesh::{write_obj, RegionSpec};
    use advlogo::synth::{chest_and_thighs, humanoid, write_backgrounds, BodyPose, BodyShape, Outfit};
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    std::fs::create_dir_all(dir.join("meshes")).unwrap();
    let meshes: Vec<Mesh> = (0..2)
        .map(|_| humanoid(&BodyPose::random(&mut rng), &BodyShape::random(&mut rng), &Outfit::random(&mut rng)))
        .collect();
    for (i, m) in meshes.iter().enumerate() {
        write_obj(m, dir.join("meshes").join(format!("person_{i}.obj"))).unwrap();
    }
    write_backgrounds(&dir.join("bg_train"), "train", 4, size, &mut rng).unwrap();
    write_backgrounds(&dir.join("bg_test"), "test", 3, size, &mut rng).unwrap();
    LogoRegion::select(&meshes[0], &RegionSpec::Boxes(chest_and_thighs()))
        .unwrap()
        .write_faces(dir.join("region.faces"))
        .unwrap();
    save_weights(&DetectorModel::seeded(Architecture::whitebox(size), 1).unwrap(), dir.join("a.weights")).unwrap();
    save_weights(&DetectorModel::seeded(Architecture::blackbox(size), 2).unwrap(), dir.join("b.weights")).unwrap();
    let config = serde_json::json!({
        "paths": {
            "meshes": "meshes",
            "backgrounds_train": "bg_train",
            "backgrounds_test": "bg_test",
            "region": "region.faces",
            "detector_a": "a.weights",
            "detector_b": "b.weights",
            "output": "out"
        },
        "scene": { "image_size": size, "translation_range": 2 },
        "plan": { "epochs": epochs, "batch_size": 2, "snapshot_period": 1 },
        "dataset": { "positives": 12, "negatives": 6 },
        "detector": { "epochs": 1, "batch_size": 6 },
        "seed": 9
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    Workspace {
        dir: dir.to_path_buf(),
        config: path,
    }
}

/// Runs the CLI in-process and returns its exit code.
pub fn advlogo(args: &[&str]) -> i32 {
    let mut v = vec!["advlogo".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    advlogo::cli::main_with_args(v)
}

/// An 18-face planar logo at 32x32 in front of a seed-initialized whitebox
/// detector, with random colors, background and augmentation.
pub struct GradientCase {
    pub detector: DetectorModel,
    pub raster: RasterBuffer,
    pub region: LogoRegion,
    pub atlas: TextureAtlas,
    pub background: Image,
    pub params: AugmentParams,
}

pub fn gradient_case(seed: u64) -> GradientCase {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mesh = planar_grid(3, 3, 0.6);
    let cfg = SceneConfig {
        image_size: 32,
        ..SceneConfig::default()
    };
    let raster = rasterize(&mesh, &CameraPose::new(2.2, 6.0, 15.0), &cfg);
    let faces: Vec<usize> = (0..mesh.face_count()).collect();
    GradientCase {
        detector: DetectorModel::seeded(Architecture::whitebox(32), seed).unwrap(),
        raster,
        region: LogoRegion::from_faces(&mesh, &faces).unwrap(),
        atlas: TextureAtlas::from_colors(
            (0..mesh.face_count())
                .map(|_| [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)])
                .collect(),
        ),
        background: Image::from_fn(32, |_, _| [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)]),
        params: AugmentParams::sample(&mut rng, 32, 2),
    }
}

pub fn case_loss(c: &GradientCase, atlas: &TextureAtlas, w: &LossWeights) -> f64 {
    let product = composite(&c.raster, atlas, &c.background).unwrap();
    let aug = augment(&product, &c.params).unwrap();
    let dis = match aug.gt_box {
        Some(b) => loss_dis(&c.detector.forward(&aug.image).unwrap().detections, &b.to_bbox()).value,
        None => 0.0,
    };
    loss_total(dis, loss_tv(atlas, &c.region).unwrap().0, w)
}

/// Worst relative error between the analytic gradient and central
/// differences with step `h`, over every region face and channel.
pub fn worst_gradient_error(c: &GradientCase, w: &LossWeights, h: f64) -> f64 {
    let (value, grad) = total_gradient(&c.detector, &c.raster, &c.atlas, &c.region, &c.background, &c.params, w).unwrap();
    assert!((value - case_loss(c, &c.atlas, w)).abs() < 1e-12);
    let mut worst: f64 = 0.0;
    for &f in c.region.face_ids() {
        for ch in 0..3 {
            let mut plus = c.atlas.clone();
            let mut minus = c.atlas.clone();
            plus.colors_mut_unclamped()[f as usize][ch] += h;
            minus.colors_mut_unclamped()[f as usize][ch] -= h;
            let fd = (case_loss(c, &plus, w) - case_loss(c, &minus, w)) / (2.0 * h);
            let a = grad[f as usize][ch];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
        }
    }
    worst
}
