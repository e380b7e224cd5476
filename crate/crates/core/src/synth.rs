//! Procedural stand-ins for body meshes and background photographs.
//!
//! `humanoid` builds an articulated figure from closed tubes. Every pose and
//! body shape yields the same vertex count and face list, so one logo region
//! transfers across all of them, exactly like meshes exported from a shared
//! parametric body model. `background` paints cluttered scenes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{self, Vec3};
use crate::image::Image;
use crate::mesh::{Aabb, Mesh, TextureAtlas};

/// Joint angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    /// Sideways lift of each arm away from the body.
    pub arm_abduction: [f64; 2],
    /// Forward swing of each upper arm.
    pub arm_swing: [f64; 2],
    /// Extra forward swing of each forearm.
    pub elbow_bend: [f64; 2],
    /// Forward swing of each thigh.
    pub leg_swing: [f64; 2],
    /// Backward fold of each shin relative to its thigh.
    pub knee_bend: [f64; 2],
}

impl Default for BodyPose {
    fn default() -> Self {
        BodyPose {
            arm_abduction: [12.0, 12.0],
            arm_swing: [0.0, 0.0],
            elbow_bend: [0.0, 0.0],
            leg_swing: [0.0, 0.0],
            knee_bend: [0.0, 0.0],
        }
    }
}

impl BodyPose {
    /// Walking / idle / reaching style poses.
    pub fn random(rng: &mut impl Rng) -> Self {
        let stride: f64 = rng.random_range(-25.0..25.0);
        BodyPose {
            arm_abduction: [rng.random_range(5.0..40.0), rng.random_range(5.0..40.0)],
            arm_swing: [-stride + rng.random_range(-10.0..10.0), stride + rng.random_range(-10.0..10.0)],
            elbow_bend: [rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)],
            leg_swing: [stride, -stride],
            knee_bend: [rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)],
        }
    }
}

/// Proportions relative to a 1.7-unit-tall default body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyShape {
    pub height: f64,
    pub girth: f64,
}

impl Default for BodyShape {
    fn default() -> Self {
        BodyShape {
            height: 1.0,
            girth: 1.0,
        }
    }
}

impl BodyShape {
    pub fn random(rng: &mut impl Rng) -> Self {
        BodyShape {
            height: rng.random_range(0.92..1.06),
            girth: rng.random_range(0.85..1.2),
        }
    }
}

/// Clothing colors by body part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outfit {
    pub shirt: Vec3,
    pub pants: Vec3,
    pub skin: Vec3,
}

impl Default for Outfit {
    fn default() -> Self {
        Outfit {
            shirt: [0.75, 0.72, 0.68],
            pants: [0.22, 0.25, 0.35],
            skin: [0.85, 0.65, 0.52],
        }
    }
}

impl Outfit {
    pub fn random(rng: &mut impl Rng) -> Self {
        let tone: f64 = rng.random_range(0.25..0.95);
        Outfit {
            shirt: [rng.random(), rng.random(), rng.random()],
            pants: [rng.random(), rng.random(), rng.random()],
            skin: [tone, tone * rng.random_range(0.7..0.85), tone * rng.random_range(0.5..0.7)],
        }
    }

    fn for_part(&self, part: Part) -> Vec3 {
        match part.slot() {
            Slot::Shirt => self.shirt,
            Slot::Pants => self.pants,
            Slot::Skin => self.skin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Shirt,
    Pants,
    Skin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Torso,
    Head,
    UpperArm(usize),
    LowerArm(usize),
    Thigh(usize),
    Shin(usize),
}

impl Part {
    const ALL: [Part; 10] = [
        Part::Torso,
        Part::Head,
        Part::UpperArm(0),
        Part::LowerArm(0),
        Part::UpperArm(1),
        Part::LowerArm(1),
        Part::Thigh(0),
        Part::Shin(0),
        Part::Thigh(1),
        Part::Shin(1),
    ];

    fn name(&self) -> String {
        let side = |s: usize| if s == 0 { "r" } else { "l" };
        match self {
            Part::Torso => "torso".into(),
            Part::Head => "head".into(),
            Part::UpperArm(s) => format!("upper_arm_{}", side(*s)),
            Part::LowerArm(s) => format!("lower_arm_{}", side(*s)),
            Part::Thigh(s) => format!("thigh_{}", side(*s)),
            Part::Shin(s) => format!("shin_{}", side(*s)),
        }
    }

    fn slot(&self) -> Slot {
        match self {
            Part::Torso | Part::UpperArm(_) => Slot::Shirt,
            Part::Thigh(_) | Part::Shin(_) => Slot::Pants,
            Part::Head | Part::LowerArm(_) => Slot::Skin,
        }
    }
}

/// Slot of an OBJ group name produced by [`humanoid`], if recognizable.
fn slot_of_group(name: &str) -> Option<Slot> {
    Part::ALL.iter().find(|p| p.name() == name).map(|p| p.slot())
}

struct Builder {
    vertices: Vec<Vec3>,
    colors: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    groups: Vec<u32>,
}

impl Builder {
    /// Closed tube from `a` to `b` with capped ends. The cross-section is an
    /// ellipse with half-axes `radius(t)·sx` and `radius(t)·sz`.
    #[allow(clippy::too_many_arguments)]
    fn tube(
        &mut self,
        a: Vec3,
        b: Vec3,
        radius: impl Fn(f64) -> f64,
        sx: f64,
        sz: f64,
        segments: usize,
        rings: usize,
        group: u32,
        color: Vec3,
    ) {
        let d = geom::normalize(geom::sub(b, a));
        let reference = if d[2].abs() > 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
        let u = geom::normalize(geom::cross(d, reference));
        let v = geom::cross(d, u);
        let base = self.vertices.len() as u32;
        for i in 0..=rings {
            let t = i as f64 / rings as f64;
            let c = geom::add(a, geom::scale(geom::sub(b, a), t));
            let r = radius(t);
            for k in 0..segments {
                let th = std::f64::consts::TAU * k as f64 / segments as f64;
                let off = geom::add(geom::scale(u, r * sx * th.cos()), geom::scale(v, r * sz * th.sin()));
                self.vertices.push(geom::add(c, off));
                self.colors.push(color);
            }
        }
        let idx = |i: usize, k: usize| base + (i * segments + k % segments) as u32;
        let mut faces = Vec::new();
        for i in 0..rings {
            for k in 0..segments {
                let (pa, pb, pc, pd) = (idx(i, k), idx(i, k + 1), idx(i + 1, k), idx(i + 1, k + 1));
                faces.push([pa, pb, pc]);
                faces.push([pb, pd, pc]);
            }
        }
        let start = self.vertices.len() as u32;
        self.vertices.push(a);
        self.colors.push(color);
        let end = start + 1;
        self.vertices.push(b);
        self.colors.push(color);
        for k in 0..segments {
            faces.push([start, idx(0, k + 1), idx(0, k)]);
            faces.push([end, idx(rings, k), idx(rings, k + 1)]);
        }
        self.groups.extend(std::iter::repeat_n(group, faces.len()));
        self.faces.extend(faces);
    }
}

fn dir(x: f64, y: f64, z: f64) -> Vec3 {
    geom::normalize([x, y, z])
}

/// An articulated figure centered on the origin, facing +z, about
/// `1.7 * shape.height` units tall. Topology is independent of all inputs.
pub fn humanoid(pose: &BodyPose, shape: &BodyShape, outfit: &Outfit) -> Mesh {
    let h = shape.height;
    let g = shape.girth;
    let mut b = Builder {
        vertices: Vec::new(),
        colors: Vec::new(),
        faces: Vec::new(),
        groups: Vec::new(),
    };
    let y = |v: f64| v * h;
    let group = |p: Part| Part::ALL.iter().position(|q| *q == p).unwrap() as u32;

    // Torso: slightly tapered at the waist, elliptical cross-section.
    b.tube(
        [0.0, y(-0.08), 0.0],
        [0.0, y(0.52), 0.0],
        |t| 0.16 * (1.0 - 0.12 * (1.0 - (2.0 * t - 0.6).powi(2)).max(0.0)) + 0.02 * t,
        g,
        0.62 * g,
        12,
        6,
        group(Part::Torso),
        outfit.for_part(Part::Torso),
    );
    // Head: a tube with a spherical radius profile.
    b.tube(
        [0.0, y(0.56), 0.0],
        [0.0, y(0.85), 0.0],
        |t| 0.002 + 0.11 * (std::f64::consts::PI * t).sin(),
        1.0,
        1.05,
        10,
        5,
        group(Part::Head),
        outfit.for_part(Part::Head),
    );

    for side in 0..2 {
        let s = if side == 0 { -1.0 } else { 1.0 };
        let (ab, sw, el) = (
            pose.arm_abduction[side].to_radians(),
            pose.arm_swing[side].to_radians(),
            pose.elbow_bend[side].to_radians(),
        );
        let shoulder = [s * 0.2 * g, y(0.46), 0.0];
        let upper = dir(s * ab.sin(), -ab.cos() * sw.cos(), ab.cos() * sw.sin());
        let elbow = geom::add(shoulder, geom::scale(upper, 0.3 * h));
        let lower = dir(s * ab.sin(), -ab.cos() * (sw + el).cos(), ab.cos() * (sw + el).sin());
        let wrist = geom::add(elbow, geom::scale(lower, 0.28 * h));
        let arm_r = 0.048 * g;
        b.tube(shoulder, elbow, |_| arm_r, 1.0, 1.0, 6, 2, group(Part::UpperArm(side)), outfit.for_part(Part::UpperArm(side)));
        b.tube(elbow, wrist, |t| arm_r * (1.0 - 0.25 * t), 1.0, 1.0, 6, 2, group(Part::LowerArm(side)), outfit.for_part(Part::LowerArm(side)));

        let (ls, kb) = (pose.leg_swing[side].to_radians(), pose.knee_bend[side].to_radians());
        let hip = [s * 0.085 * g, y(-0.06), 0.0];
        let thigh = dir(0.0, -ls.cos(), ls.sin());
        let knee = geom::add(hip, geom::scale(thigh, 0.4 * h));
        let shin = dir(0.0, -(ls - kb).cos(), (ls - kb).sin());
        let ankle = geom::add(knee, geom::scale(shin, 0.39 * h));
        let leg_r = 0.075 * g;
        b.tube(hip, knee, |t| leg_r * (1.0 - 0.2 * t), 1.0, 1.0, 6, 2, group(Part::Thigh(side)), outfit.for_part(Part::Thigh(side)));
        b.tube(knee, ankle, |t| leg_r * (0.8 - 0.2 * t), 1.0, 1.0, 6, 2, group(Part::Shin(side)), outfit.for_part(Part::Shin(side)));
    }

    // Center vertically on the origin.
    let (lo, hi) = {
        let ys = b.vertices.iter().map(|v| v[1]);
        let lo = ys.clone().fold(f64::INFINITY, f64::min);
        (lo, b.vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max))
    };
    let mid = 0.5 * (lo + hi);
    for v in &mut b.vertices {
        v[1] -= mid;
    }

    let names = Part::ALL.iter().map(Part::name).collect();
    Mesh::with_groups(b.vertices, b.faces, b.groups, names)
        .and_then(|m| m.with_vertex_colors(b.colors))
        .expect("humanoid construction is valid")
}

/// Per-face atlas coloring `mesh` with `outfit`, with small per-face jitter.
/// Groups not produced by [`humanoid`] get a color drawn from `rng`.
pub fn outfit_atlas(mesh: &Mesh, outfit: &Outfit, jitter: f64, rng: &mut impl Rng) -> TextureAtlas {
    let group_colors: Vec<Vec3> = mesh
        .group_names()
        .iter()
        .map(|name| match slot_of_group(name) {
            Some(Slot::Shirt) => outfit.shirt,
            Some(Slot::Pants) => outfit.pants,
            Some(Slot::Skin) => outfit.skin,
            None => [rng.random(), rng.random(), rng.random()],
        })
        .collect();
    TextureAtlas::from_colors(
        mesh.face_groups()
            .iter()
            .map(|&g| {
                let c = group_colors[g as usize];
                let j = if jitter > 0.0 { rng.random_range(-jitter..jitter) } else { 0.0 };
                c.map(|v| v + j)
            })
            .collect(),
    )
}

/// Front-facing chest and thigh boxes for a [`humanoid`] in rest pose.
pub fn chest_and_thighs() -> Vec<Aabb> {
    vec![
        Aabb {
            min: [-0.17, 0.08, 0.02],
            max: [0.17, 0.52, 0.3],
        },
        Aabb {
            min: [-0.2, -0.45, 0.015],
            max: [0.2, -0.12, 0.3],
        },
    ]
}

/// Front chest box only.
pub fn chest() -> Vec<Aabb> {
    vec![chest_and_thighs()[0]]
}

/// A cluttered scene: sky/ground gradient, rectangles, discs and stripes,
/// plus fine texture noise.
pub fn background(size: usize, rng: &mut impl Rng) -> Image {
    let n = size as f64;
    let horizon = rng.random_range(0.3..0.75) * n;
    let sky: Vec3 = [rng.random(), rng.random(), rng.random()];
    let ground: Vec3 = [rng.random(), rng.random(), rng.random()];
    let mut img = Image::from_fn(size, |_, y| {
        let t = y as f64 / n;
        if (y as f64) < horizon {
            sky.map(|c| c * (0.7 + 0.3 * t))
        } else {
            ground.map(|c| c * (1.0 - 0.3 * t))
        }
    });
    let shapes = rng.random_range(3..9);
    for _ in 0..shapes {
        let color: Vec3 = [rng.random(), rng.random(), rng.random()];
        let kind = rng.random_range(0..3);
        let cx = rng.random_range(0.0..n);
        let cy = rng.random_range(0.0..n);
        let w = rng.random_range(0.05..0.45) * n;
        let hgt = rng.random_range(0.05..0.6) * n;
        let period = rng.random_range(2.0..8.0);
        for y in 0..size {
            for x in 0..size {
                let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
                let inside = match kind {
                    0 => (fx - cx).abs() < 0.5 * w && (fy - cy).abs() < 0.5 * hgt,
                    1 => (fx - cx).powi(2) + (fy - cy).powi(2) < (0.35 * w).powi(2),
                    _ => (fx - cx).abs() < 0.5 * w && (fy - cy).abs() < 0.5 * hgt && ((fx / period) as i64) % 2 == 0,
                };
                if inside {
                    img.set_pixel(x, y, color);
                }
            }
        }
    }
    let grain = rng.random_range(0.0..0.08);
    for v in img.data_mut() {
        *v = (*v + rng.random_range(-grain..=grain)).clamp(0.0, 1.0);
    }
    img
}

/// Writes `count` backgrounds as PNGs named `<prefix>_<i>.png`.
pub fn write_backgrounds(
    dir: &std::path::Path,
    prefix: &str,
    count: usize,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let p = dir.join(format!("{prefix}_{i:04}.png"));
            background(size, rng).save_png(&p)?;
            Ok(p)
        })
        .collect()
}
