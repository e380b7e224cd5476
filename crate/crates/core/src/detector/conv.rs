//! 2-D convolution over planar activations via im2col and GEMM.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Geometry of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn output_size(&self, input: usize) -> Option<usize> {
        let padded = input + 2 * self.padding;
        if self.stride == 0 || self.kernel == 0 || padded < self.kernel {
            return None;
        }
        Some((padded - self.kernel) / self.stride + 1)
    }
}

/// A planar `channels × size × size` activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub channels: usize,
    pub size: usize,
    pub data: Vec<f64>,
}

impl Activation {
    pub fn zeros(channels: usize, size: usize) -> Self {
        Activation {
            channels,
            size,
            data: vec![0.0; channels * size * size],
        }
    }
}

/// Unfolds `input` into a `(C·k·k) × (out·out)` patch matrix.
pub fn im2col(input: &Activation, spec: &ConvSpec, out: usize) -> Array2<f64> {
    let (c_in, n, k) = (input.channels, input.size as isize, spec.kernel);
    let cols = out * out;
    let mut m = vec![0.0; c_in * k * k * cols];
    for c in 0..c_in {
        let plane = &input.data[c * input.size * input.size..(c + 1) * input.size * input.size];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut m[row * cols..(row + 1) * cols];
                for oy in 0..out {
                    let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                    if iy < 0 || iy >= n {
                        continue;
                    }
                    let src_row = &plane[iy as usize * input.size..(iy as usize + 1) * input.size];
                    for ox in 0..out {
                        let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                        if ix >= 0 && ix < n {
                            dst[oy * out + ox] = src_row[ix as usize];
                        }
                    }
                }
            }
        }
    }
    Array2::from_shape_vec((c_in * k * k, cols), m).expect("im2col shape")
}

/// Folds a patch-matrix gradient back onto the input, accumulating overlaps.
pub fn col2im(cols: ArrayView2<f64>, channels: usize, size: usize, spec: &ConvSpec, out: usize) -> Activation {
    let k = spec.kernel;
    let n = size as isize;
    let mut act = Activation::zeros(channels, size);
    for c in 0..channels {
        let plane = &mut act.data[c * size * size..(c + 1) * size * size];
        for ky in 0..k {
            for kx in 0..k {
                let row = cols.row((c * k + ky) * k + kx);
                for oy in 0..out {
                    let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                    if iy < 0 || iy >= n {
                        continue;
                    }
                    for ox in 0..out {
                        let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                        if ix >= 0 && ix < n {
                            plane[iy as usize * size + ix as usize] += row[oy * out + ox];
                        }
                    }
                }
            }
        }
    }
    act
}
