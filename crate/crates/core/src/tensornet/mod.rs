//! Small numerical core: dense, 1-D convolution, max pooling, batch norm, LSTM and
//! BiLSTM layers with explicit backward passes, plus dropout, losses, Adam and a
//! finite-difference gradient checker. Everything runs in `f64`.
//!
//! Layers cache what their backward pass needs during `forward`, accumulate parameter
//! gradients into [`Parameter::grad`] during `backward`, and return the gradient with
//! respect to their input.

mod activation;
mod adam;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod embedding;
pub mod gradcheck;
mod loss;
mod lstm;
mod param;
mod pool;

pub use activation::{activate, relu, sigmoid, softmax, Activation};
pub use adam::{AdamConfig, AdamState};
pub use batchnorm::BatchNorm;
pub use conv::{conv_output_len, Conv1d, Padding};
pub use dense::Dense;
pub use dropout::Dropout;
pub use embedding::EmbeddingLayer;
pub use gradcheck::{
    check_parameters, check_parameters_sweep, grad_check, grad_check_coords, grad_check_sweep, relative_error, STEP_SWEEP,
};
pub use loss::{loss, LossKind, EPSILON};
pub use lstm::{BiLstm, CellActivation, Lstm, LstmCellParams};
pub use param::{HasParameters, Parameter};
pub use pool::MaxPool1d;

/// Dense runtime tensor type.
pub type Tensor = ndarray::ArrayD<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Infer,
}
