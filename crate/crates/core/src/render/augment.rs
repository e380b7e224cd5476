use rand::Rng;

use super::composite::RenderProduct;
use crate::boxes::PixelBox;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::image::Image;

/// Per-image photometric and geometric perturbation.
///
/// The output pixel is `clamp(contrast * v + brightness + noise, 0, 1)` where
/// `v` is the translated composite.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    pub contrast: f64,
    pub brightness: f64,
    /// Planar per-channel offsets (`3 * size * size`); empty means zero.
    pub noise: Vec<f64>,
    pub dx: i64,
    pub dy: i64,
}

/// Half-width of the uniform pixel noise.
pub const NOISE_AMPLITUDE: f64 = 0.1;

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            contrast: 1.0,
            brightness: 0.0,
            noise: Vec::new(),
            dx: 0,
            dy: 0,
        }
    }

    /// Draws contrast `0.9 + 0.2u`, brightness `0.2(v - 0.5)` for
    /// `u, v ~ U(0,1)`, noise `U(-0.1, 0.1)` per pixel and channel, and an
    /// integer translation uniform in `[-range, range]` on each axis.
    pub fn sample(rng: &mut impl Rng, size: usize, translation_range: i64) -> Self {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let noise = (0..3 * size * size)
            .map(|_| rng.random_range(-NOISE_AMPLITUDE..NOISE_AMPLITUDE))
            .collect();
        let r = translation_range.max(0);
        AugmentParams {
            contrast: 0.9 + 0.2 * u,
            brightness: 0.2 * (v - 0.5),
            noise,
            dx: rng.random_range(-r..=r),
            dy: rng.random_range(-r..=r),
        }
    }

    #[inline]
    fn noise_at(&self, i: usize) -> f64 {
        if self.noise.is_empty() {
            0.0
        } else {
            self.noise[i]
        }
    }

    fn check(&self, size: usize) -> Result<()> {
        if !self.noise.is_empty() && self.noise.len() != 3 * size * size {
            return Err(Error::Shape(format!(
                "noise has {} entries for a {size}x{size} image",
                self.noise.len()
            )));
        }
        Ok(())
    }
}

/// An augmented image and its translated ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub image: Image,
    pub gt_box: Option<PixelBox>,
}

/// Source pixel of the translated foreground landing on `(x, y)`, if any.
#[inline]
fn foreground_source(product: &RenderProduct, params: &AugmentParams, x: usize, y: usize) -> Option<usize> {
    let n = product.size() as i64;
    let sx = x as i64 - params.dx;
    let sy = y as i64 - params.dy;
    if sx < 0 || sy < 0 || sx >= n || sy >= n {
        return None;
    }
    let s = (sy * n + sx) as usize;
    product.alpha[s].then_some(s)
}

/// Pre-clamp value of every output channel, planar.
fn pre_clamp(product: &RenderProduct, params: &AugmentParams) -> Vec<f64> {
    let n = product.size();
    let plane = n * n;
    let fg = product.rgb.data();
    let bg = product.background.data();
    let mut out = vec![0.0; 3 * plane];
    for y in 0..n {
        for x in 0..n {
            let p = y * n + x;
            let src = foreground_source(product, params, x, y);
            for c in 0..3 {
                let v = match src {
                    Some(s) => fg[c * plane + s],
                    None => bg[c * plane + p],
                };
                let i = c * plane + p;
                out[i] = params.contrast * v + params.brightness + params.noise_at(i);
            }
        }
    }
    out
}

/// Translates the foreground over the background, then applies the
/// photometric perturbation. Foreground pixels pushed out of frame are
/// dropped; the ground-truth box follows the foreground.
pub fn augment(product: &RenderProduct, params: &AugmentParams) -> Result<Augmented> {
    let n = product.size();
    params.check(n)?;
    let data = pre_clamp(product, params)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let gt_box = product
        .gt_box
        .and_then(|b| b.translate(params.dx, params.dy).clip(n));
    Ok(Augmented {
        image: Image::from_planar(n, data)?,
        gt_box,
    })
}

/// Gradient of a scalar with respect to every face color, given its gradient
/// with respect to the augmented image.
///
/// For face `f`: the sum over its visible pixels `p`, landing on `p'` after
/// translation, of `contrast * shade[f] * image_grad[p']`. Channels whose
/// output was saturated by the clamp contribute nothing. Accumulation runs
/// in pixel order, so the result is deterministic.
pub fn pullback_gradient(
    product: &RenderProduct,
    params: &AugmentParams,
    image_grad: &Image,
) -> Result<Vec<Vec3>> {
    let n = product.size();
    if image_grad.size() != n {
        return Err(Error::Shape(format!(
            "image gradient is {0}x{0}, render is {n}x{n}",
            image_grad.size()
        )));
    }
    params.check(n)?;
    let plane = n * n;
    let pre = pre_clamp(product, params);
    let g = image_grad.data();
    let mut grad = vec![[0.0; 3]; product.shade.len()];
    for y in 0..n {
        for x in 0..n {
            let Some(s) = foreground_source(product, params, x, y) else {
                continue;
            };
            let f = product.face_id[s] as usize;
            let scale = params.contrast * product.shade[f];
            let p = y * n + x;
            for c in 0..3 {
                let i = c * plane + p;
                if pre[i] > 0.0 && pre[i] < 1.0 {
                    grad[f][c] += scale * g[i];
                }
            }
        }
    }
    Ok(grad)
}

/// Mask of output channels (planar) that pass through the clamp unsaturated.
pub fn unsaturated_mask(product: &RenderProduct, params: &AugmentParams) -> Vec<bool> {
    pre_clamp(product, params)
        .into_iter()
        .map(|v| v > 0.0 && v < 1.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh, TextureAtlas};
    use crate::render::{composite, rasterize, CameraPose, SceneConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product(size: usize) -> RenderProduct {
        let m = Mesh::new(
            vec![
                [-0.4, -0.6, 0.0],
                [0.4, -0.6, 0.0],
                [0.0, 0.6, 0.0],
                [0.5, 0.5, -0.2],
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let cfg = SceneConfig {
            image_size: size,
            ..SceneConfig::default()
        };
        let r = rasterize(&m, &CameraPose::new(2.5, 6.0, 20.0), &cfg);
        let bg = Image::from_fn(size, |x, y| [0.5, x as f64 / size as f64 * 0.8, y as f64 / size as f64 * 0.8]);
        composite(&r, &TextureAtlas::from_colors(vec![[0.7, 0.2, 0.4], [0.3, 0.8, 0.6]]), &bg).unwrap()
    }

    #[test]
    fn identity_augmentation() {
        let p = product(32);
        let a = augment(&p, &AugmentParams::identity()).unwrap();
        assert_eq!(a.image, p.rgb);
        assert_eq!(a.gt_box, p.gt_box);
    }

    #[test]
    fn brightness_offset_on_gray() {
        let mut p = product(8);
        p.rgb = Image::filled(8, [0.5; 3]);
        p.background = p.rgb.clone();
        let params = AugmentParams {
            brightness: 0.1,
            ..AugmentParams::identity()
        };
        let a = augment(&p, &params).unwrap();
        assert!(a.image.data().iter().all(|&v| (v - 0.6).abs() < 1e-15));
    }

    #[test]
    fn translation_moves_box_like_the_mask() {
        let p = product(128);
        let orig = p.gt_box.unwrap();
        let n = 128usize;
        // Shift the object flush against the right edge: nothing leaves the frame.
        let dx = n as i64 - orig.x1;
        let params = AugmentParams {
            dx,
            dy: -3,
            ..AugmentParams::identity()
        };
        let a = augment(&p, &params).unwrap();
        let mut shifted = vec![false; n * n];
        for y in 3..n {
            for x in 0..n {
                if p.alpha[y * n + x] {
                    shifted[(y - 3) * n + (x as i64 + dx) as usize] = true;
                }
            }
        }
        assert_eq!(a.gt_box, PixelBox::of_mask(&shifted, n));

        // Pushed partly out of frame, the box is clipped to the image.
        let params = AugmentParams {
            dx: 50,
            ..AugmentParams::identity()
        };
        let b = augment(&p, &params).unwrap().gt_box.unwrap();
        assert_eq!(b.x0, orig.x0 + 50);
        assert_eq!(b.x1, (orig.x1 + 50).min(128));
        assert_eq!((b.y0, b.y1), (orig.y0, orig.y1));
    }

    #[test]
    fn sampled_params_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = AugmentParams::sample(&mut rng, 8, 5);
            assert!((0.9..=1.1).contains(&a.contrast));
            assert!((-0.1..=0.1).contains(&a.brightness));
            assert!(a.noise.iter().all(|v| v.abs() <= 0.1));
            assert!(a.dx.abs() <= 5 && a.dy.abs() <= 5);
        }
    }

    #[test]
    fn zero_seed_gives_zero_gradient() {
        let p = product(16);
        let g = pullback_gradient(&p, &AugmentParams::identity(), &Image::new(16)).unwrap();
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_seed_gives_closed_form() {
        let p = product(32);
        let params = AugmentParams {
            contrast: 0.95,
            ..AugmentParams::identity()
        };
        let gval = 0.37;
        let g = pullback_gradient(&p, &params, &Image::filled(32, [gval; 3])).unwrap();
        for f in 0..2 {
            let k = p.face_id.iter().filter(|&&x| x == f as u32).count() as f64;
            assert!(k > 0.0);
            let expect = k * 0.95 * p.shade[f] * gval;
            for c in 0..3 {
                assert!((g[f][c] - expect).abs() < 1e-12 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = product(16);
        assert!(pullback_gradient(&p, &AugmentParams::identity(), &Image::new(8)).is_err());
        let bad = AugmentParams {
            noise: vec![0.0; 5],
            ..AugmentParams::identity()
        };
        assert!(augment(&p, &bad).is_err());
    }
}
