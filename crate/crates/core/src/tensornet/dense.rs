use ndarray::{Array2, Axis};
use rand::Rng;

use super::{Activation, HasParameters, Parameter};
use crate::error::{Error, Result};

/// Fully connected layer: `activation(x·W + b)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
    pub activation: Activation,
    input: Option<Array2<f64>>,
    output: Option<Array2<f64>>,
}

impl Dense {
    pub fn new<R: Rng>(name: &str, inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        Self::from_params(
            Parameter::glorot(format!("{name}.weight"), &[inputs, outputs], inputs, outputs, rng),
            Parameter::zeros(format!("{name}.bias"), &[outputs]),
            activation,
        )
    }

    pub fn from_params(weight: Parameter, bias: Parameter, activation: Activation) -> Self {
        Self {
            weight,
            bias,
            activation,
            input: None,
            output: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() || self.bias.len() != self.outputs() {
            return Err(Error::Shape(format!(
                "dense expects [batch, {}] input with bias [{}], got {:?} and bias {:?}",
                self.inputs(),
                self.outputs(),
                x.shape(),
                self.bias.shape()
            )));
        }
        let z = x.dot(&self.weight.mat()) + self.bias.vec();
        let y = self.activation.apply(&z);
        self.input = Some(x.clone());
        self.output = Some(y.clone());
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>> {
        let (x, y) = match (&self.input, &self.output) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::Shape("dense backward before forward".into())),
        };
        if dy.shape() != y.shape() {
            return Err(Error::Shape(format!(
                "dense output gradient {:?} vs output {:?}",
                dy.shape(),
                y.shape()
            )));
        }
        let dz = self.activation.backward(y, dy);
        let dx = dz.dot(&self.weight.mat().t());
        let dw = x.t().dot(&dz);
        self.weight.grad_mat_mut().scaled_add(1.0, &dw);
        self.bias.grad_vec_mut().scaled_add(1.0, &dz.sum_axis(Axis(0)));
        Ok(dx)
    }
}

impl HasParameters for Dense {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.weight, &mut self.bias]
    }
}
