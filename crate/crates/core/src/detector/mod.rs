//! Single-class, single-anchor, fully convolutional grid detectors.
//!
//! The network maps an RGB image to an `S×S×5` grid: one objectness logit and
//! four box parameters per cell. Hidden layers use a leaky rectifier; the
//! output layer is linear. Reverse-mode gradients are exact for every op.

mod conv;
mod train;
mod weights;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use conv::{col2im, im2col, Activation, ConvSpec};
pub use train::{train_detector, DetectorSample, DetectorTrainConfig, TrainTrace};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};

use crate::boxes::BBox;
use crate::error::{Error, Result};
use crate::image::Image;

/// Output channels per grid cell: objectness logit, x, y, log-w, log-h.
pub const CELL_CHANNELS: usize = 5;

/// Layer list and decoding settings of a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub name: String,
    pub input_size: usize,
    pub layers: Vec<ConvSpec>,
    pub leaky_slope: f64,
    pub threshold: f64,
}

impl Architecture {
    /// Four conv layers, grid stride 8.
    pub fn whitebox(input_size: usize) -> Self {
        let c = |out_channels, kernel, stride, padding| ConvSpec {
            out_channels,
            kernel,
            stride,
            padding,
        };
        Architecture {
            name: "A".into(),
            input_size,
            layers: vec![c(16, 5, 2, 2), c(32, 5, 2, 2), c(32, 5, 2, 2), c(CELL_CHANNELS, 5, 1, 2)],
            leaky_slope: 0.1,
            threshold: 0.6,
        }
    }

    /// Three wider conv layers, grid stride 16.
    pub fn blackbox(input_size: usize) -> Self {
        let c = |out_channels, kernel, stride, padding| ConvSpec {
            out_channels,
            kernel,
            stride,
            padding,
        };
        Architecture {
            name: "B".into(),
            input_size,
            layers: vec![c(24, 5, 2, 2), c(48, 5, 4, 2), c(CELL_CHANNELS, 5, 2, 2)],
            leaky_slope: 0.1,
            threshold: 0.6,
        }
    }

    /// Grid side length, validating the layer chain.
    pub fn grid_size(&self) -> Result<usize> {
        if self.layers.is_empty() {
            return Err(Error::Shape("architecture has no layers".into()));
        }
        if self.layers.last().map(|l| l.out_channels) != Some(CELL_CHANNELS) {
            return Err(Error::Shape(format!(
                "last layer must have {CELL_CHANNELS} output channels"
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Shape("threshold must be in (0,1)".into()));
        }
        let mut n = self.input_size;
        for (i, l) in self.layers.iter().enumerate() {
            n = l
                .output_size(n)
                .filter(|&s| s > 0)
                .ok_or_else(|| Error::Shape(format!("layer {i} does not fit a {n}px input")))?;
        }
        Ok(n)
    }

    /// Anchor side in pixels.
    pub fn anchor(&self) -> f64 {
        self.input_size as f64 / 4.0
    }

    /// Weight-tensor shapes in declaration order: `(out, in·k·k)` then `(out,)`.
    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut c_in = 3;
        let mut shapes = Vec::new();
        for l in &self.layers {
            shapes.push(vec![l.out_channels, c_in * l.kernel * l.kernel]);
            shapes.push(vec![l.out_channels]);
            c_in = l.out_channels;
        }
        shapes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub spec: ConvSpec,
    pub in_channels: usize,
    pub in_size: usize,
    pub out_size: usize,
    pub weight: Array2<f64>,
    pub bias: Vec<f64>,
}

/// Raw network output, planar `[channel][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub size: usize,
    pub data: Vec<f64>,
}

impl RawGrid {
    pub fn zeros(size: usize) -> Self {
        RawGrid {
            size,
            data: vec![0.0; CELL_CHANNELS * size * size],
        }
    }

    pub fn cells(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn at(&self, channel: usize, cell: usize) -> f64 {
        self.data[channel * self.cells() + cell]
    }

    #[inline]
    pub fn at_mut(&mut self, channel: usize, cell: usize) -> &mut f64 {
        let n = self.cells();
        &mut self.data[channel * n + cell]
    }

    pub fn objectness(&self, cell: usize) -> f64 {
        self.at(0, cell)
    }
}

/// One decoded grid-cell prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: BBox,
    pub cell: usize,
}

/// Supervision / evaluation target for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroundTruth {
    Person(BBox),
    NoPerson,
}

impl GroundTruth {
    pub fn person_box(&self) -> Option<BBox> {
        match self {
            GroundTruth::Person(b) => Some(*b),
            GroundTruth::NoPerson => None,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-scale box parameters are clamped to this magnitude when decoding.
const MAX_LOG_SCALE: f64 = 8.0;

/// Center offset within a cell, in (-0.5, 1.5) so neighbouring cells can
/// claim a center near their shared border.
#[inline]
pub(crate) fn cell_offset(raw: f64) -> f64 {
    2.0 * sigmoid(raw) - 0.5
}

/// Decodes every cell; thresholding is left to the caller.
pub fn decode(grid: &RawGrid, image_size: usize, anchor: f64) -> Vec<Detection> {
    let cell = image_size as f64 / grid.size as f64;
    (0..grid.cells())
        .map(|i| {
            let (row, col) = (i / grid.size, i % grid.size);
            let cx = (col as f64 + cell_offset(grid.at(1, i))) * cell;
            let cy = (row as f64 + cell_offset(grid.at(2, i))) * cell;
            let w = anchor * grid.at(3, i).clamp(-MAX_LOG_SCALE, MAX_LOG_SCALE).exp();
            let h = anchor * grid.at(4, i).clamp(-MAX_LOG_SCALE, MAX_LOG_SCALE).exp();
            Detection {
                class_id: 0,
                confidence: sigmoid(grid.objectness(i)),
                bbox: BBox { cx, cy, w, h },
                cell: i,
            }
        })
        .collect()
}

/// Forward intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input to each layer (the image first).
    inputs: Vec<Activation>,
    /// Pre-activation output of each layer.
    pre: Vec<Activation>,
}

/// Raw grid plus its decoded detections.
#[derive(Debug, Clone)]
pub struct DetectorOutput {
    pub grid: RawGrid,
    pub detections: Vec<Detection>,
}

/// Per-layer parameter gradients, same layout as the model.
#[derive(Debug, Clone)]
pub(crate) struct ParamGrads {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    arch: Architecture,
    grid_size: usize,
    pub(crate) layers: Vec<Layer>,
}

impl DetectorModel {
    /// All weights and biases zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        let grid_size = arch.grid_size()?;
        let mut c_in = 3;
        let mut n = arch.input_size;
        let mut layers = Vec::new();
        for spec in &arch.layers {
            let out_size = spec.output_size(n).expect("validated");
            layers.push(Layer {
                spec: *spec,
                in_channels: c_in,
                in_size: n,
                out_size,
                weight: Array2::zeros((spec.out_channels, c_in * spec.kernel * spec.kernel)),
                bias: vec![0.0; spec.out_channels],
            });
            c_in = spec.out_channels;
            n = out_size;
        }
        Ok(DetectorModel {
            arch,
            grid_size,
            layers,
        })
    }

    /// He-normal weights from `seed`, zero biases, values rounded to `f32`.
    pub fn seeded(arch: Architecture, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let fan_in = layer.weight.ncols() as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("finite std");
            layer.weight.mapv_inplace(|_| normal.sample(&mut rng));
        }
        model.round_to_f32();
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn input_size(&self) -> usize {
        self.arch.input_size
    }

    pub fn threshold(&self) -> f64 {
        self.arch.threshold
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Makes every parameter exactly representable as `f32`, so the binary
    /// weights file round-trips losslessly.
    pub fn round_to_f32(&mut self) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|v| v as f32 as f64);
            for b in &mut l.bias {
                *b = *b as f32 as f64;
            }
        }
    }

    /// Sets the objectness bias of the output layer.
    pub fn set_objectness_bias(&mut self, bias: f64) {
        if let Some(l) = self.layers.last_mut() {
            l.bias[0] = bias;
        }
    }

    /// Parameters in declaration order (each layer's weights then bias).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(&l.bias[..]);
        }
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(&mut l.bias[..]);
        }
        out
    }

    fn check_image(&self, image: &Image) -> Result<()> {
        if image.size() != self.arch.input_size {
            return Err(Error::Shape(format!(
                "detector {} expects {1}x{1} input, got {2}x{2}",
                self.arch.name,
                self.arch.input_size,
                image.size()
            )));
        }
        Ok(())
    }

    fn leaky(&self, v: f64) -> f64 {
        if v > 0.0 {
            v
        } else {
            self.arch.leaky_slope * v
        }
    }

    /// Forward pass keeping intermediates for backpropagation.
    pub fn forward_traced(&self, image: &Image) -> Result<(RawGrid, Trace)> {
        self.check_image(image)?;
        let mut x = Activation {
            channels: 3,
            size: image.size(),
            data: image.data().to_vec(),
        };
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let cols = im2col(&x, &layer.spec, layer.out_size);
            let mut y = layer.weight.dot(&cols);
            for (mut row, b) in y.rows_mut().into_iter().zip(&layer.bias) {
                row.mapv_inplace(|v| v + b);
            }
            let z = Activation {
                channels: layer.spec.out_channels,
                size: layer.out_size,
                data: y.into_raw_vec_and_offset().0,
            };
            let next = if i == last {
                z.clone()
            } else {
                Activation {
                    data: z.data.iter().map(|&v| self.leaky(v)).collect(),
                    ..z.clone()
                }
            };
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        let grid = RawGrid {
            size: self.grid_size,
            data: x.data,
        };
        Ok((grid, Trace { inputs, pre }))
    }

    pub fn forward(&self, image: &Image) -> Result<DetectorOutput> {
        let (grid, _) = self.forward_traced(image)?;
        let detections = decode(&grid, self.arch.input_size, self.arch.anchor());
        Ok(DetectorOutput { grid, detections })
    }

    /// Reverse pass from a gradient on the raw grid. Returns the image
    /// gradient and, when requested, parameter gradients.
    pub(crate) fn backward(
        &self,
        trace: &Trace,
        seed: &RawGrid,
        want_params: bool,
    ) -> Result<(Image, Option<ParamGrads>)> {
        if seed.size != self.grid_size || seed.data.len() != CELL_CHANNELS * self.grid_size * self.grid_size {
            return Err(Error::Shape(format!(
                "seed grid is {0}x{0}, detector grid is {1}x{1}",
                seed.size, self.grid_size
            )));
        }
        let last = self.layers.len() - 1;
        let mut grad = seed.data.clone();
        let mut weight_grads = Vec::new();
        let mut bias_grads = Vec::new();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if i != last {
                let slope = self.arch.leaky_slope;
                for (g, &z) in grad.iter_mut().zip(&trace.pre[i].data) {
                    if z <= 0.0 {
                        *g *= slope;
                    }
                }
            }
            let cols_out = layer.out_size * layer.out_size;
            let dy = Array2::from_shape_vec((layer.spec.out_channels, cols_out), grad)
                .expect("gradient shape");
            if want_params {
                let cols = im2col(&trace.inputs[i], &layer.spec, layer.out_size);
                weight_grads.push(dy.dot(&cols.t()));
                bias_grads.push(dy.rows().into_iter().map(|r| r.sum()).collect());
            }
            let dcols = layer.weight.t().dot(&dy);
            grad = col2im(
                dcols.view(),
                layer.in_channels,
                layer.in_size,
                &layer.spec,
                layer.out_size,
            )
            .data;
        }
        let image = Image::from_planar(self.arch.input_size, grad)?;
        let params = want_params.then(|| {
            weight_grads.reverse();
            bias_grads.reverse();
            ParamGrads {
                weight: weight_grads,
                bias: bias_grads,
            }
        });
        Ok((image, params))
    }

    /// Gradient of a scalar with respect to the input image, given the
    /// scalar's gradient with respect to the raw grid.
    pub fn input_gradient(&self, image: &Image, seed: &RawGrid) -> Result<Image> {
        let (_, trace) = self.forward_traced(image)?;
        Ok(self.backward(&trace, seed, false)?.0)
    }
}

/// Confidences of the boxes that contain the target: center inside the
/// ground-truth box, or IoU with it at least `CONTAIN_IOU`.
pub fn containing_confidences(detections: &[Detection], gt: &BBox) -> Vec<(usize, f64)> {
    detections
        .iter()
        .filter(|d| contains_target(&d.bbox, gt))
        .map(|d| (d.cell, d.confidence))
        .collect()
}

/// Minimum IoU for a box whose center lies outside the target to count as
/// containing it.
pub const CONTAIN_IOU: f64 = 0.1;

/// Minimum IoU for a detection to count as finding the target.
pub const DETECT_IOU: f64 = 0.5;

pub fn contains_target(b: &BBox, gt: &BBox) -> bool {
    gt.contains(b.cx, b.cy) || b.iou(gt) >= CONTAIN_IOU
}

/// True iff some box has confidence at or above `threshold` and IoU with the
/// target of at least 0.5.
pub fn detects(detections: &[Detection], gt: &BBox, threshold: f64) -> bool {
    detections
        .iter()
        .any(|d| d.confidence >= threshold && d.bbox.iou(gt) >= DETECT_IOU)
}

/// Runs the model and applies [`detects`]. A missing target counts as not
/// detected.
pub fn is_detected(model: &DetectorModel, image: &Image, gt: &GroundTruth, threshold: f64) -> Result<bool> {
    let Some(b) = gt.person_box() else {
        return Ok(false);
    };
    Ok(detects(&model.forward(image)?.detections, &b, threshold))
}
