//! LSTM and bidirectional LSTM layers with hand-written backpropagation through time.
//!
//! Gate pre-activations for a step are `z = x_t·W + h_{t-1}·U + b`, laid out as four
//! blocks of `hidden` columns in the order input, forget, output, candidate:
//!
//! ```text
//! i = σ(z_i)   f = σ(z_f)   o = σ(z_o)   g = act(z_c)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ act(c_t)
//! ```
//!
//! Positions whose mask is false carry `(h, c)` through unchanged.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::{HasParameters, Parameter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellActivation {
    Tanh,
    Relu,
}

impl CellActivation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            CellActivation::Tanh => x.tanh(),
            CellActivation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            CellActivation::Tanh => 1.0 - y * y,
            CellActivation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Concatenated gate weights: `input_weight` is `[input_dim, 4·hidden]`,
/// `recurrent_weight` is `[hidden, 4·hidden]`, `bias` is `[4·hidden]`.
#[derive(Debug, Clone)]
pub struct LstmCellParams {
    pub input_weight: Parameter,
    pub recurrent_weight: Parameter,
    pub bias: Parameter,
}

impl LstmCellParams {
    /// Glorot-uniform weights, zero biases except a forget-gate bias of one.
    pub fn new<R: Rng>(name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let input_weight = Parameter::glorot(
            format!("{name}.input_weight"),
            &[input_dim, 4 * hidden],
            input_dim,
            4 * hidden,
            rng,
        );
        let recurrent_weight = Parameter::glorot(
            format!("{name}.recurrent_weight"),
            &[hidden, 4 * hidden],
            hidden,
            4 * hidden,
            rng,
        );
        let mut bias = Parameter::zeros(format!("{name}.bias"), &[4 * hidden]);
        bias.value
            .slice_mut(s![hidden..2 * hidden])
            .fill(1.0);
        Self {
            input_weight,
            recurrent_weight,
            bias,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.recurrent_weight.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.input_weight.shape()[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.input_weight.len() + self.recurrent_weight.len() + self.bias.len()
    }

    fn validate(&self) -> Result<()> {
        let h = self.hidden_size();
        let ok = self.input_weight.shape().len() == 2
            && self.input_weight.shape()[1] == 4 * h
            && self.recurrent_weight.shape() == [h, 4 * h]
            && self.bias.shape() == [4 * h];
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "inconsistent LSTM gate shapes: W {:?}, U {:?}, b {:?}",
                self.input_weight.shape(),
                self.recurrent_weight.shape(),
                self.bias.shape()
            )))
        }
    }
}

#[derive(Debug, Clone)]
struct LstmCache {
    batch: usize,
    time: usize,
    /// Input rows in time-major order `[time·batch, input_dim]`.
    x_tb: Array2<f64>,
    mask: Array2<bool>,
    /// Activated gates `[time, batch, 4·hidden]`.
    gates: Array3<f64>,
    h_prev: Array3<f64>,
    c_prev: Array3<f64>,
    /// `act(c_t)` per step.
    cell_out: Array3<f64>,
}

/// One LSTM direction.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub params: LstmCellParams,
    pub activation: CellActivation,
    /// Process `t = T-1 .. 0`.
    pub reverse: bool,
    cache: Option<LstmCache>,
}

impl Lstm {
    pub fn new(params: LstmCellParams, activation: CellActivation, reverse: bool) -> Self {
        Self {
            params,
            activation,
            reverse,
            cache: None,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.params.hidden_size()
    }

    fn order(&self, time: usize) -> Vec<usize> {
        if self.reverse {
            (0..time).rev().collect()
        } else {
            (0..time).collect()
        }
    }

    /// Runs the recurrence and returns `(h per step [batch, time, hidden], final h)`.
    fn run(&mut self, x: &Array3<f64>, mask: &Array2<bool>) -> Result<(Array3<f64>, Array2<f64>)> {
        self.params.validate()?;
        let (batch, time, input_dim) = x.dim();
        if input_dim != self.params.input_dim() {
            return Err(Error::Shape(format!(
                "LSTM expects input width {}, got {input_dim}",
                self.params.input_dim()
            )));
        }
        if mask.dim() != (batch, time) {
            return Err(Error::Shape(format!(
                "mask {:?} does not match input [batch {batch}, time {time}]",
                mask.shape()
            )));
        }
        let hidden = self.hidden_size();
        let act = self.activation;

        let x_tb = x
            .view()
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((time * batch, input_dim))
            .expect("time-major reshape");
        let xw = x_tb.dot(&self.params.input_weight.mat()) + self.params.bias.vec();
        let u = self.params.recurrent_weight.mat();

        let mut gates = Array3::<f64>::zeros((time, batch, 4 * hidden));
        let mut h_prev_all = Array3::<f64>::zeros((time, batch, hidden));
        let mut c_prev_all = Array3::<f64>::zeros((time, batch, hidden));
        let mut cell_out = Array3::<f64>::zeros((time, batch, hidden));
        let mut outputs = Array3::<f64>::zeros((batch, time, hidden));

        let mut h = Array2::<f64>::zeros((batch, hidden));
        let mut c = Array2::<f64>::zeros((batch, hidden));
        for t in self.order(time) {
            h_prev_all.slice_mut(s![t, .., ..]).assign(&h);
            c_prev_all.slice_mut(s![t, .., ..]).assign(&c);
            let z = &xw.slice(s![t * batch..(t + 1) * batch, ..]) + &h.dot(&u);
            for b in 0..batch {
                if !mask[[b, t]] {
                    continue;
                }
                for j in 0..hidden {
                    let i = sigmoid(z[[b, j]]);
                    let f = sigmoid(z[[b, hidden + j]]);
                    let o = sigmoid(z[[b, 2 * hidden + j]]);
                    let g = act.apply(z[[b, 3 * hidden + j]]);
                    let c_new = f * c[[b, j]] + i * g;
                    let a = act.apply(c_new);
                    gates[[t, b, j]] = i;
                    gates[[t, b, hidden + j]] = f;
                    gates[[t, b, 2 * hidden + j]] = o;
                    gates[[t, b, 3 * hidden + j]] = g;
                    cell_out[[t, b, j]] = a;
                    c[[b, j]] = c_new;
                    h[[b, j]] = o * a;
                }
            }
            outputs.slice_mut(s![.., t, ..]).assign(&h);
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LSTM hidden state".into()));
        }

        self.cache = Some(LstmCache {
            batch,
            time,
            x_tb,
            mask: mask.clone(),
            gates,
            h_prev: h_prev_all,
            c_prev: c_prev_all,
            cell_out,
        });
        Ok((outputs, h))
    }

    /// Hidden state after every step, `[batch, time, hidden]`.
    pub fn forward_sequence(&mut self, x: &Array3<f64>, mask: &Array2<bool>) -> Result<Array3<f64>> {
        Ok(self.run(x, mask)?.0)
    }

    /// Final hidden state (the last valid step in processing order), `[batch, hidden]`.
    pub fn forward_last(&mut self, x: &Array3<f64>, mask: &Array2<bool>) -> Result<Array2<f64>> {
        Ok(self.run(x, mask)?.1)
    }

    pub fn backward_sequence(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        self.backward_impl(Some(dy), None)
    }

    pub fn backward_last(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        self.backward_impl(None, Some(dy))
    }

    fn backward_impl(&mut self, dseq: Option<&Array3<f64>>, dlast: Option<&Array2<f64>>) -> Result<Array3<f64>> {
        let order = {
            let cache = self
                .cache
                .as_ref()
                .ok_or_else(|| Error::Shape("LSTM backward before forward".into()))?;
            self.order(cache.time)
        };
        let cache = self.cache.as_ref().expect("checked above");
        let (batch, time) = (cache.batch, cache.time);
        let hidden = self.hidden_size();
        let input_dim = self.params.input_dim();
        let act = self.activation;

        if let Some(d) = dseq {
            if d.dim() != (batch, time, hidden) {
                return Err(Error::Shape(format!(
                    "LSTM sequence gradient {:?} vs [{batch}, {time}, {hidden}]",
                    d.shape()
                )));
            }
        }
        let mut dh = match dlast {
            Some(d) if d.dim() != (batch, hidden) => {
                return Err(Error::Shape(format!(
                    "LSTM final-state gradient {:?} vs [{batch}, {hidden}]",
                    d.shape()
                )))
            }
            Some(d) => d.clone(),
            None => Array2::zeros((batch, hidden)),
        };
        let mut dc = Array2::<f64>::zeros((batch, hidden));
        let mut dz_all = Array2::<f64>::zeros((time * batch, 4 * hidden));
        let u_t = self.params.recurrent_weight.mat().t().to_owned();

        for &t in order.iter().rev() {
            if let Some(d) = dseq {
                dh += &d.slice(s![.., t, ..]);
            }
            let mut dz = dz_all.slice_mut(s![t * batch..(t + 1) * batch, ..]);
            for b in 0..batch {
                if !cache.mask[[b, t]] {
                    continue;
                }
                for j in 0..hidden {
                    let i = cache.gates[[t, b, j]];
                    let f = cache.gates[[t, b, hidden + j]];
                    let o = cache.gates[[t, b, 2 * hidden + j]];
                    let g = cache.gates[[t, b, 3 * hidden + j]];
                    let a = cache.cell_out[[t, b, j]];
                    let c_prev = cache.c_prev[[t, b, j]];
                    let dhv = dh[[b, j]];

                    let d_out = dhv * a;
                    let dcell = dc[[b, j]] + dhv * o * act.derivative_from_output(a);
                    dz[[b, j]] = dcell * g * i * (1.0 - i);
                    dz[[b, hidden + j]] = dcell * c_prev * f * (1.0 - f);
                    dz[[b, 2 * hidden + j]] = d_out * o * (1.0 - o);
                    dz[[b, 3 * hidden + j]] = dcell * i * act.derivative_from_output(g);
                    dc[[b, j]] = dcell * f;
                }
            }
            let dh_prev = dz.dot(&u_t);
            for b in 0..batch {
                if cache.mask[[b, t]] {
                    dh.row_mut(b).assign(&dh_prev.row(b));
                }
            }
        }

        let h_prev_flat: ArrayView2<f64> = cache
            .h_prev
            .view()
            .into_shape_with_order((time * batch, hidden))
            .expect("time-major state");
        let dw = cache.x_tb.t().dot(&dz_all);
        let du = h_prev_flat.t().dot(&dz_all);
        let db = dz_all.sum_axis(Axis(0));
        let dx_tb = dz_all.dot(&self.params.input_weight.mat().t());

        self.params.input_weight.grad_mat_mut().scaled_add(1.0, &dw);
        self.params.recurrent_weight.grad_mat_mut().scaled_add(1.0, &du);
        self.params.bias.grad_vec_mut().scaled_add(1.0, &db);

        let dx = dx_tb
            .into_shape_with_order((time, batch, input_dim))
            .expect("reshape")
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned();
        Ok(dx)
    }
}

impl HasParameters for Lstm {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![
            &self.params.input_weight,
            &self.params.recurrent_weight,
            &self.params.bias,
        ]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.params.input_weight,
            &mut self.params.recurrent_weight,
            &mut self.params.bias,
        ]
    }
}

/// Forward and reverse LSTMs whose outputs are concatenated on the feature axis
/// (forward block first).
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

impl BiLstm {
    pub fn new(forward: LstmCellParams, backward: LstmCellParams, activation: CellActivation) -> Result<Self> {
        if forward.hidden_size() != backward.hidden_size() || forward.input_dim() != backward.input_dim() {
            return Err(Error::Shape(format!(
                "BiLSTM directions disagree: forward {}→{}, backward {}→{}",
                forward.input_dim(),
                forward.hidden_size(),
                backward.input_dim(),
                backward.hidden_size()
            )));
        }
        Ok(Self {
            forward: Lstm::new(forward, activation, false),
            backward: Lstm::new(backward, activation, true),
        })
    }

    pub fn with_random<R: Rng>(name: &str, input_dim: usize, hidden: usize, activation: CellActivation, rng: &mut R) -> Self {
        let f = LstmCellParams::new(&format!("{name}.fwd"), input_dim, hidden, rng);
        let b = LstmCellParams::new(&format!("{name}.bwd"), input_dim, hidden, rng);
        Self::new(f, b, activation).expect("matching directions")
    }

    pub fn hidden_size(&self) -> usize {
        self.forward.hidden_size()
    }

    pub fn output_width(&self) -> usize {
        2 * self.hidden_size()
    }

    pub fn forward_sequence(&mut self, x: &Array3<f64>, mask: &Array2<bool>) -> Result<Array3<f64>> {
        let f = self.forward.forward_sequence(x, mask)?;
        let b = self.backward.forward_sequence(x, mask)?;
        Ok(ndarray::concatenate(Axis(2), &[f.view(), b.view()]).expect("same batch/time"))
    }

    /// Forward direction's last valid state next to the reverse direction's state at
    /// the first valid position.
    pub fn forward_last(&mut self, x: &Array3<f64>, mask: &Array2<bool>) -> Result<Array2<f64>> {
        let f = self.forward.forward_last(x, mask)?;
        let b = self.backward.forward_last(x, mask)?;
        Ok(ndarray::concatenate(Axis(1), &[f.view(), b.view()]).expect("same batch"))
    }

    pub fn backward_sequence(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let h = self.hidden_size();
        if dy.dim().2 != 2 * h {
            return Err(Error::Shape(format!("BiLSTM gradient width {} vs {}", dy.dim().2, 2 * h)));
        }
        let df = dy.slice(s![.., .., ..h]).to_owned();
        let db = dy.slice(s![.., .., h..]).to_owned();
        let dx = self.forward.backward_sequence(&df)?;
        Ok(dx + self.backward.backward_sequence(&db)?)
    }

    pub fn backward_last(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let h = self.hidden_size();
        if dy.ncols() != 2 * h {
            return Err(Error::Shape(format!("BiLSTM gradient width {} vs {}", dy.ncols(), 2 * h)));
        }
        let df = dy.slice(s![.., ..h]).to_owned();
        let db = dy.slice(s![.., h..]).to_owned();
        let dx = self.forward.backward_last(&df)?;
        Ok(dx + self.backward.backward_last(&db)?)
    }
}

impl HasParameters for BiLstm {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.forward.parameters();
        p.extend(self.backward.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.forward.parameters_mut();
        p.extend(self.backward.parameters_mut());
        p
    }
}
