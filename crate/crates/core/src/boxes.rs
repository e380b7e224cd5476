//! Pixel-space bounding boxes.

use serde::{Deserialize, Serialize};

/// Center/size box in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox {
            cx: 0.5 * (x0 + x1),
            cy: 0.5 * (y0 + y1),
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        )
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    /// Closed containment test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, y0, x1, y1) = self.corners();
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let (ax0, ay0, ax1, ay1) = self.corners();
        let (bx0, by0, bx1, by1) = other.corners();
        let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }
}

/// Integer pixel rectangle, half-open: columns `x0..x1`, rows `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelBox {
    pub fn to_bbox(self) -> BBox {
        BBox::from_corners(self.x0 as f64, self.y0 as f64, self.x1 as f64, self.y1 as f64)
    }

    pub fn translate(self, dx: i64, dy: i64) -> Self {
        PixelBox {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }

    /// Intersection with a `size`×`size` frame, `None` when nothing is left.
    pub fn clip(self, size: usize) -> Option<Self> {
        let s = size as i64;
        let b = PixelBox {
            x0: self.x0.clamp(0, s),
            y0: self.y0.clamp(0, s),
            x1: self.x1.clamp(0, s),
            y1: self.y1.clamp(0, s),
        };
        (b.x1 > b.x0 && b.y1 > b.y0).then_some(b)
    }

    /// Tight bounds of the `true` entries of a row-major square mask.
    pub fn of_mask(mask: &[bool], size: usize) -> Option<Self> {
        let mut b: Option<PixelBox> = None;
        for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
            let (x, y) = ((i % size) as i64, (i / size) as i64);
            b = Some(match b {
                None => PixelBox {
                    x0: x,
                    y0: y,
                    x1: x + 1,
                    y1: y + 1,
                },
                Some(p) => PixelBox {
                    x0: p.x0.min(x),
                    y0: p.y0.min(y),
                    x1: p.x1.max(x + 1),
                    y1: p.y1.max(y + 1),
                },
            });
        }
        b
    }
}
