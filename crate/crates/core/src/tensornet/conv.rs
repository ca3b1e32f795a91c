use ndarray::{s, Array2, Array3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, HasParameters, Parameter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Valid,
    /// Zero padding split evenly, the extra column going to the right.
    Same,
}

/// Output length and left padding of a 1-D convolution over `time` steps.
pub fn conv_output_len(time: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if kernel == 0 || stride == 0 {
        return Err(Error::InvalidArgument("kernel and stride must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if kernel > time {
                return Err(Error::Shape(format!(
                    "kernel {kernel} longer than input length {time} with valid padding"
                )));
            }
            Ok(((time - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = time.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(time);
            Ok((out, total / 2))
        }
    }
}

/// Cross-correlation over the time axis of `[batch, time, channels]` input with
/// filters shaped `[kernel, channels, n_filters]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub filters: Parameter,
    pub bias: Parameter,
    pub stride: usize,
    pub padding: Padding,
    pub activation: Activation,
    cache: Option<ConvCache>,
}

#[derive(Debug, Clone)]
struct ConvCache {
    patches: Array2<f64>,
    input_dims: (usize, usize, usize),
    out_len: usize,
    pad_left: usize,
    output: Array3<f64>,
}

impl Conv1d {
    pub fn new<R: Rng>(
        name: &str,
        kernel: usize,
        channels: usize,
        n_filters: usize,
        stride: usize,
        padding: Padding,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let filters = Parameter::glorot(
            format!("{name}.filters"),
            &[kernel, channels, n_filters],
            kernel * channels,
            kernel * n_filters,
            rng,
        );
        let bias = Parameter::zeros(format!("{name}.bias"), &[n_filters]);
        Self::from_params(filters, bias, stride, padding, activation)
    }

    pub fn from_params(filters: Parameter, bias: Parameter, stride: usize, padding: Padding, activation: Activation) -> Self {
        Self {
            filters,
            bias,
            stride,
            padding,
            activation,
            cache: None,
        }
    }

    pub fn kernel(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.filters.shape()[1]
    }

    pub fn n_filters(&self) -> usize {
        self.filters.shape()[2]
    }

    fn weight_matrix(&self) -> Array2<f64> {
        let (k, c, f) = (self.kernel(), self.channels(), self.n_filters());
        self.filters
            .value
            .view()
            .into_shape_with_order((k * c, f))
            .expect("contiguous filters")
            .to_owned()
    }

    pub fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (batch, time, channels) = x.dim();
        if channels != self.channels() {
            return Err(Error::Shape(format!(
                "conv1d expects {} channels, got {channels}",
                self.channels()
            )));
        }
        let kernel = self.kernel();
        let (out_len, pad_left) = conv_output_len(time, kernel, self.stride, self.padding)?;

        let mut patches = Array2::<f64>::zeros((batch * out_len, kernel * channels));
        for b in 0..batch {
            for t in 0..out_len {
                let row = b * out_len + t;
                for k in 0..kernel {
                    let src = (t * self.stride + k) as isize - pad_left as isize;
                    if src < 0 || src as usize >= time {
                        continue;
                    }
                    patches
                        .slice_mut(s![row, k * channels..(k + 1) * channels])
                        .assign(&x.slice(s![b, src as usize, ..]));
                }
            }
        }
        let z = patches.dot(&self.weight_matrix()) + self.bias.vec();
        let z = z
            .into_shape_with_order((batch, out_len, self.n_filters()))
            .expect("conv output reshape");
        let y = self.activation.apply(&z);
        self.cache = Some(ConvCache {
            patches,
            input_dims: (batch, time, channels),
            out_len,
            pad_left,
            output: y.clone(),
        });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape("conv1d backward before forward".into()))?;
        if dy.dim() != cache.output.dim() {
            return Err(Error::Shape(format!(
                "conv1d output gradient {:?} vs output {:?}",
                dy.shape(),
                cache.output.shape()
            )));
        }
        let (batch, time, channels) = cache.input_dims;
        let kernel = self.kernel();
        let n_filters = self.n_filters();
        let dz = self.activation.backward(&cache.output, dy);
        let dz = dz
            .into_shape_with_order((batch * cache.out_len, n_filters))
            .expect("conv grad reshape");

        let dw = cache.patches.t().dot(&dz);
        let dpatches = dz.dot(&self.weight_matrix().t());
        let mut dx = Array3::<f64>::zeros((batch, time, channels));
        for b in 0..batch {
            for t in 0..cache.out_len {
                let row = b * cache.out_len + t;
                for k in 0..kernel {
                    let src = (t * self.stride + k) as isize - cache.pad_left as isize;
                    if src < 0 || src as usize >= time {
                        continue;
                    }
                    let mut dst = dx.slice_mut(s![b, src as usize, ..]);
                    dst += &dpatches.slice(s![row, k * channels..(k + 1) * channels]);
                }
            }
        }
        let dw = dw
            .into_shape_with_order((kernel, channels, n_filters))
            .expect("filter grad reshape")
            .into_dyn();
        self.filters.grad.scaled_add(1.0, &dw);
        self.bias.grad_vec_mut().scaled_add(1.0, &dz.sum_axis(Axis(0)));
        Ok(dx)
    }
}

impl HasParameters for Conv1d {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.filters, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.filters, &mut self.bias]
    }
}
