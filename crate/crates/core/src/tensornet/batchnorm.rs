use ndarray::{Array1, Array2, Array3, Axis, Zip};

use super::{HasParameters, Mode, Parameter};
use crate::error::{Error, Result};

/// Batch normalization over the feature (last) axis.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gain: Parameter,
    pub bias: Parameter,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    /// Weight of the previous running value in the update.
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
    mode: Mode,
}

impl BatchNorm {
    pub fn new(name: &str, features: usize) -> Self {
        let mut gain = Parameter::zeros(format!("{name}.gain"), &[features]);
        gain.value.fill(1.0);
        Self {
            gain,
            bias: Parameter::zeros(format!("{name}.bias"), &[features]),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum: 0.99,
            eps: 1e-3,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gain.len()
    }

    pub fn forward(&mut self, x: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
        let (n, f) = x.dim();
        if f != self.features() {
            return Err(Error::Shape(format!(
                "batchnorm expects {} features, got {f}",
                self.features()
            )));
        }
        let (mean, var) = match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::Shape(format!(
                        "batchnorm in train mode needs batch >= 2, got {n}"
                    )));
                }
                let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
                let var = x.var_axis(Axis(0), 0.0);
                let m = self.momentum;
                Zip::from(&mut self.running_mean)
                    .and(&mean)
                    .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
                Zip::from(&mut self.running_var)
                    .and(&var)
                    .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
                (mean, var)
            }
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let normalized = (x - &mean) * &inv_std;
        let y = &normalized * &self.gain.vec() + self.bias.vec();
        self.cache = Some(BnCache {
            normalized,
            inv_std,
            mode,
        });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape("batchnorm backward before forward".into()))?;
        if dy.dim() != cache.normalized.dim() {
            return Err(Error::Shape(format!(
                "batchnorm gradient {:?} vs output {:?}",
                dy.shape(),
                cache.normalized.shape()
            )));
        }
        let n = dy.nrows() as f64;
        let dgain = (dy * &cache.normalized).sum_axis(Axis(0));
        let dbias = dy.sum_axis(Axis(0));
        let dxhat = dy * &self.gain.vec();
        let dx = match cache.mode {
            Mode::Infer => &dxhat * &cache.inv_std,
            Mode::Train => {
                let sum_dxhat = dxhat.sum_axis(Axis(0));
                let sum_dxhat_xhat = (&dxhat * &cache.normalized).sum_axis(Axis(0));
                let centered = &dxhat * n - &sum_dxhat - &cache.normalized * &sum_dxhat_xhat;
                centered * &cache.inv_std / n
            }
        };
        self.gain.grad_vec_mut().scaled_add(1.0, &dgain);
        self.bias.grad_vec_mut().scaled_add(1.0, &dbias);
        Ok(dx)
    }

    /// Normalizes `[batch, time, channels]` with statistics pooled over batch and time.
    pub fn forward3(&mut self, x: &Array3<f64>, mode: Mode) -> Result<Array3<f64>> {
        let (b, t, c) = x.dim();
        let flat = x
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b * t, c))
            .expect("reshape");
        let y = self.forward(&flat, mode)?;
        Ok(y.into_shape_with_order((b, t, c)).expect("reshape"))
    }

    pub fn backward3(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let (b, t, c) = dy.dim();
        let flat = dy
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b * t, c))
            .expect("reshape");
        let dx = self.backward(&flat)?;
        Ok(dx.into_shape_with_order((b, t, c)).expect("reshape"))
    }
}

impl HasParameters for BatchNorm {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.gain, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.gain, &mut self.bias]
    }
}
