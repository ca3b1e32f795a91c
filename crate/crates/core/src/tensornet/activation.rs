use ndarray::{Array, ArrayD, Axis, Dimension, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
    /// Over the last axis.
    Softmax,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

impl Activation {
    pub fn apply<D: Dimension>(self, x: &Array<f64, D>) -> Array<f64, D> {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => x.mapv(relu),
            Activation::Sigmoid => x.mapv(sigmoid),
            Activation::Tanh => x.mapv(f64::tanh),
            Activation::Softmax => softmax(x),
        }
    }

    /// Gradient with respect to the pre-activation, given the activation's output `y`
    /// and the upstream gradient `dy`.
    pub fn backward<D: Dimension>(self, y: &Array<f64, D>, dy: &Array<f64, D>) -> Array<f64, D> {
        match self {
            Activation::Identity => dy.clone(),
            Activation::Relu => Zip::from(y)
                .and(dy)
                .map_collect(|&y, &g| if y > 0.0 { g } else { 0.0 }),
            Activation::Sigmoid => Zip::from(y).and(dy).map_collect(|&y, &g| g * y * (1.0 - y)),
            Activation::Tanh => Zip::from(y).and(dy).map_collect(|&y, &g| g * (1.0 - y * y)),
            Activation::Softmax => {
                let last = Axis(y.ndim() - 1);
                let mut out = dy.clone();
                for ((mut o, yl), gl) in out
                    .lanes_mut(last)
                    .into_iter()
                    .zip(y.lanes(last))
                    .zip(dy.lanes(last))
                {
                    let dot: f64 = yl.iter().zip(gl.iter()).map(|(a, b)| a * b).sum();
                    Zip::from(&mut o)
                        .and(&yl)
                        .and(&gl)
                        .for_each(|o, &y, &g| *o = y * (g - dot));
                }
                out
            }
        }
    }
}

/// Softmax over the last axis with max subtraction.
pub fn softmax<D: Dimension>(x: &Array<f64, D>) -> Array<f64, D> {
    let mut out = x.clone();
    let last = Axis(x.ndim().max(1) - 1);
    for mut lane in out.lanes_mut(last) {
        let max = lane.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        lane.mapv_inplace(|v| (v - max).exp());
        let sum = lane.sum();
        lane.mapv_inplace(|v| v / sum);
    }
    out
}

/// Dynamic-rank entry point.
pub fn activate(x: &ArrayD<f64>, kind: Activation) -> ArrayD<f64> {
    kind.apply(x)
}
