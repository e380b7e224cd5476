use super::camera::{pixel_center_ndc, Camera, CameraPose, SceneConfig};
use crate::geom;
use crate::mesh::Mesh;

/// Face-id value of pixels no face covers. Never a valid face index.
pub const BACKGROUND: u32 = u32::MAX;

/// Depth-resolved face assignment per pixel plus per-face flat shading.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterBuffer {
    pub size: usize,
    /// Row-major, `BACKGROUND` where nothing is drawn.
    pub face_id: Vec<u32>,
    /// Per-face shading factor in [0,1].
    pub shade: Vec<f64>,
}

impl RasterBuffer {
    pub fn foreground_count(&self) -> usize {
        self.face_id.iter().filter(|&&f| f != BACKGROUND).count()
    }
}

#[inline]
fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Hard z-buffered rasterization sampled at pixel centers.
///
/// No backface culling; a pixel center on a triangle edge counts as covered.
/// Depth ties keep the lower face index. Faces with a vertex behind the near
/// plane are skipped.
pub fn rasterize(mesh: &Mesh, pose: &CameraPose, cfg: &SceneConfig) -> RasterBuffer {
    let n = cfg.image_size;
    let cam = Camera::new(pose, cfg.fov_deg);
    let eye = cam.eye();
    let mut face_id = vec![BACKGROUND; n * n];
    let mut inv_depth = vec![0.0f64; n * n];

    let projected: Vec<Option<(f64, f64, f64)>> =
        mesh.vertices().iter().map(|&v| cam.project(v)).collect();

    let shade: Vec<f64> = (0..mesh.face_count())
        .map(|f| {
            let [a, b, c] = mesh.face_vertices(f);
            let normal = geom::normalize(geom::cross(geom::sub(b, a), geom::sub(c, a)));
            let light = geom::normalize(geom::sub(eye, mesh.centroid(f)));
            (cfg.ambient + cfg.diffuse * geom::dot(normal, light).max(0.0)).clamp(0.0, 1.0)
        })
        .collect();

    let to_px = |ndc: f64| (ndc + 1.0) * 0.5 * n as f64;
    let to_py = |ndc: f64| (1.0 - ndc) * 0.5 * n as f64;

    for (fi, face) in mesh.faces().iter().enumerate() {
        let (Some(p0), Some(p1), Some(p2)) = (
            projected[face[0] as usize],
            projected[face[1] as usize],
            projected[face[2] as usize],
        ) else {
            continue;
        };
        let area = edge(p0.0, p0.1, p1.0, p1.1, p2.0, p2.1);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        // Conservative pixel range, widened by one; the exact test is in NDC.
        let xs = [to_px(p0.0), to_px(p1.0), to_px(p2.0)];
        let ys = [to_py(p0.1), to_py(p1.1), to_py(p2.1)];
        let lo = |v: [f64; 3]| (v.iter().cloned().fold(f64::INFINITY, f64::min).floor() - 1.0).max(0.0);
        let hi = |v: [f64; 3]| {
            (v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0).min(n as f64)
        };
        let (x0, x1, y0, y1) = (lo(xs) as usize, hi(xs), lo(ys) as usize, hi(ys));
        if x1 <= 0.0 || y1 <= 0.0 {
            continue;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);
        let inv = [1.0 / p0.2, 1.0 / p1.2, 1.0 / p2.2];

        for py in y0..y1 {
            let cy = -pixel_center_ndc(py, n);
            for px in x0..x1 {
                let cx = pixel_center_ndc(px, n);
                let w0 = edge(p1.0, p1.1, p2.0, p2.1, cx, cy);
                let w1 = edge(p2.0, p2.1, p0.0, p0.1, cx, cy);
                let w2 = edge(p0.0, p0.1, p1.0, p1.1, cx, cy);
                let inside = (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                    || (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
                if !inside {
                    continue;
                }
                let z = (w0 * inv[0] + w1 * inv[1] + w2 * inv[2]) / area;
                let i = py * n + px;
                if z > inv_depth[i] {
                    inv_depth[i] = z;
                    face_id[i] = fi as u32;
                }
            }
        }
    }

    RasterBuffer {
        size: n,
        face_id,
        shade,
    }
}
