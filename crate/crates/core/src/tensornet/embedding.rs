use ndarray::{s, Array2, Array3};

use super::{HasParameters, Parameter};
use crate::error::{Error, Result};
use crate::seqdata::PAD;

/// Lookup table mapping token indices to rows of a `[vocab, dim]` matrix.
/// The PAD row never receives gradient.
#[derive(Debug, Clone)]
pub struct EmbeddingLayer {
    pub table: Parameter,
    pub trainable: bool,
    indices: Option<Array2<usize>>,
}

impl EmbeddingLayer {
    pub fn new(table: Parameter, trainable: bool) -> Self {
        Self {
            table,
            trainable,
            indices: None,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.table.shape()[1]
    }

    pub fn forward(&mut self, indices: &Array2<usize>) -> Result<Array3<f64>> {
        let (batch, time) = indices.dim();
        let dim = self.dim();
        let vocab = self.vocab_size();
        let table = self.table.mat();
        let mut out = Array3::<f64>::zeros((batch, time, dim));
        for ((b, t), &idx) in indices.indexed_iter() {
            if idx >= vocab {
                return Err(Error::Shape(format!(
                    "token index {idx} outside embedding table of {vocab} rows"
                )));
            }
            out.slice_mut(s![b, t, ..]).assign(&table.row(idx));
        }
        self.indices = Some(indices.clone());
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Array3<f64>) -> Result<()> {
        if !self.trainable {
            return Ok(());
        }
        let indices = self
            .indices
            .as_ref()
            .ok_or_else(|| Error::Shape("embedding backward before forward".into()))?;
        let mut grad = self.table.grad_mat_mut();
        for ((b, t), &idx) in indices.indexed_iter() {
            if idx == PAD {
                continue;
            }
            let mut row = grad.row_mut(idx);
            row += &dy.slice(s![b, t, ..]);
        }
        Ok(())
    }
}

impl HasParameters for EmbeddingLayer {
    fn parameters(&self) -> Vec<&Parameter> {
        if self.trainable {
            vec![&self.table]
        } else {
            vec![]
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        if self.trainable {
            vec![&mut self.table]
        } else {
            vec![]
        }
    }
}
