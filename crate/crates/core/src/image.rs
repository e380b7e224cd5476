//! Square planar RGB images with `f64` channels.

use std::path::Path;

use crate::error::{Error, Result};

/// Square RGB image stored channel-major (`[c][y][x]`), values nominally in
/// [0,1]. This is the layout the detector consumes directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    size: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(size: usize) -> Self {
        Self::filled(size, [0.0; 3])
    }

    pub fn filled(size: usize, color: [f64; 3]) -> Self {
        let plane = size * size;
        let mut data = vec![0.0; 3 * plane];
        for c in 0..3 {
            data[c * plane..(c + 1) * plane].fill(color[c]);
        }
        Image { size, data }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut img = Self::new(size);
        for y in 0..size {
            for x in 0..size {
                img.set_pixel(x, y, f(x, y));
            }
        }
        img
    }

    pub fn from_planar(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * size * size {
            return Err(Error::Shape(format!(
                "{} values for a {size}x{size} RGB image",
                data.len()
            )));
        }
        Ok(Image { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn plane(&self) -> usize {
        self.size * self.size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, x: usize, y: usize) -> usize {
        c * self.size * self.size + y * self.size + x
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[self.index(c, x, y)]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let p = y * self.size + x;
        let n = self.plane();
        [self.data[p], self.data[n + p], self.data[2 * n + p]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let p = y * self.size + x;
        let n = self.plane();
        self.data[p] = rgb[0];
        self.data[n + p] = rgb[1];
        self.data[2 * n + p] = rgb[2];
    }

    pub fn flip_horizontal(&self) -> Self {
        Image::from_fn(self.size, |x, y| self.pixel(self.size - 1 - x, y))
    }

    /// Loads any PNG and resizes it to `size`×`size` with nearest-neighbor
    /// sampling.
    pub fn load_png(path: impl AsRef<Path>, size: usize) -> Result<Self> {
        let path = path.as_ref();
        let img = ::image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        if w == 0 || h == 0 {
            return Err(Error::Dataset(format!("{} is empty", path.display())));
        }
        Ok(Image::from_fn(size, |x, y| {
            let sx = (x * w / size).min(w - 1);
            let sy = (y * h / size).min(h - 1);
            let p = img.get_pixel(sx as u32, sy as u32).0;
            [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
        }))
    }

    /// 8-bit RGB bytes, row-major interleaved.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.plane() * 3);
        for y in 0..self.size {
            for x in 0..self.size {
                for v in self.pixel(x, y) {
                    out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
        }
        out
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        save_rgb8(path, self.size as u32, self.size as u32, &self.to_rgb8())
    }
}

/// Writes interleaved 8-bit RGB bytes as a PNG.
pub fn save_rgb8(path: impl AsRef<Path>, width: u32, height: u32, rgb: &[u8]) -> Result<()> {
    let path = path.as_ref();
    ::image::save_buffer(path, rgb, width, height, ::image::ExtendedColorType::Rgb8).map_err(
        |source| Error::Image {
            path: path.to_path_buf(),
            source,
        },
    )
}
