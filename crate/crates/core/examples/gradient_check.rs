//! Compares the analytic atlas gradient with central differences on a
//! small flat logo in front of a randomly initialized detector.

use advlogo::attack::{loss_dis, loss_total, loss_tv, total_gradient, LossWeights};
use advlogo::detector::{Architecture, DetectorModel};
use advlogo::image::Image;
use advlogo::mesh::{LogoRegion, Mesh, TextureAtlas};
use advlogo::render::{augment, composite, rasterize, AugmentParams, CameraPose, SceneConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> advlogo::Result<()> {
    let n = 32;
    let mut v = Vec::new();
    for j in 0..4 {
        for i in 0..4 {
            v.push([-0.6 + 0.4 * i as f64, -0.6 + 0.4 * j as f64, 0.0]);
        }
    }
    let mut f = Vec::new();
    for j in 0..3u32 {
        for i in 0..3u32 {
            let k = j * 4 + i;
            f.push([k, k + 1, k + 5]);
            f.push([k, k + 5, k + 4]);
        }
    }
    let mesh = Mesh::new(v, f)?;
    let scene = SceneConfig {
        image_size: n,
        ..SceneConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let raster = rasterize(&mesh, &CameraPose::new(2.2, 6.0, 15.0), &scene);
    let all: Vec<usize> = (0..mesh.face_count()).collect();
    let region = LogoRegion::from_faces(&mesh, &all)?;
    let atlas = TextureAtlas::from_colors((0..mesh.face_count()).map(|_| [rng.random(), rng.random(), rng.random()]).collect());
    let bg = Image::from_fn(n, |_, _| [rng.random(), rng.random(), rng.random()]);
    let params = AugmentParams::sample(&mut rng, n, 2);
    let det = DetectorModel::seeded(Architecture::whitebox(n), 0)?;
    let w = LossWeights::default();

    let loss = |a: &TextureAtlas| -> advlogo::Result<f64> {
        let aug = augment(&composite(&raster, a, &bg)?, &params)?;
        let dis = match aug.gt_box {
            Some(b) => loss_dis(&det.forward(&aug.image)?.detections, &b.to_bbox()).value,
            None => 0.0,
        };
        Ok(loss_total(dis, loss_tv(a, &region)?.0, &w))
    };
    let (value, grad) = total_gradient(&det, &raster, &atlas, &region, &bg, &params, &w)?;
    println!("loss {value:.6}");
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for face in 0..mesh.face_count() {
        for c in 0..3 {
            let (mut p, mut m) = (atlas.clone(), atlas.clone());
            p.colors_mut_unclamped()[face][c] += h;
            m.colors_mut_unclamped()[face][c] -= h;
            let fd = (loss(&p)? - loss(&m)?) / (2.0 * h);
            worst = worst.max((grad[face][c] - fd).abs() / grad[face][c].abs().max(fd.abs()).max(1e-8));
        }
    }
    println!("worst relative error over {} entries: {worst:.2e}", 3 * mesh.face_count());
    Ok(())
}
