use ndarray::{Array2, Array3, Ix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Architecture, ClassHead, ModelConfig, ReluPlacement};
use crate::embed::{EmbeddingMatrix, EmbeddingMode, TrainedEmbedding};
use crate::error::{Error, Result};
use crate::seqdata::{Vocabulary, PAD};
use crate::tensornet::{
    Activation, BiLstm, CellActivation, Conv1d, Dense, Dropout, EmbeddingLayer, HasParameters, Lstm, LstmCellParams,
    Mode, Padding, Parameter,
};

/// conv1d → global max over time → dropout → dropout → dense head.
#[derive(Debug, Clone)]
pub struct CnnNet {
    pub conv: Conv1d,
    pub drop1: Dropout,
    pub drop2: Dropout,
    pub dense: Dense,
    argmax: Option<(Array2<usize>, usize)>,
}

/// LSTM (last state) → dropout → dropout → dense head.
#[derive(Debug, Clone)]
pub struct LstmNet {
    pub lstm: Lstm,
    pub post_relu: bool,
    pub drop1: Dropout,
    pub drop2: Dropout,
    pub dense: Dense,
    relu_out: Option<Array2<f64>>,
}

/// Stacked BiLSTMs with dropout after each; all but the last return sequences.
#[derive(Debug, Clone)]
pub struct BiLstmNet {
    pub layers: Vec<BiLstm>,
    pub drops: Vec<Dropout>,
    pub dense: Dense,
}

#[derive(Debug, Clone)]
pub enum Network {
    Cnn(CnnNet),
    Lstm(LstmNet),
    BiLstm(BiLstmNet),
}

/// Embedding lookup followed by one of the three networks.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub config: ModelConfig,
    pub head: ClassHead,
    pub max_len: usize,
    pub vocab: Vocabulary,
    pub embedding_mode: EmbeddingMode,
    pub minn: usize,
    pub maxn: usize,
    pub embedding: EmbeddingLayer,
    pub net: Network,
}

fn head_activation(head: ClassHead) -> Activation {
    match head {
        ClassHead::Softmax2 => Activation::Softmax,
        ClassHead::Sigmoid1 => Activation::Sigmoid,
    }
}

fn to2(a: ndarray::ArrayD<f64>) -> Array2<f64> {
    a.into_dimensionality::<Ix2>().expect("2-D")
}

impl Classifier {
    /// Builds a randomly initialized network over `table` (`vocab.len() × dim`).
    pub fn new(
        config: &ModelConfig,
        vocab: Vocabulary,
        table: Array2<f64>,
        source: &EmbeddingMatrix,
        max_len: usize,
    ) -> Result<Self> {
        config.validate()?;
        if table.nrows() != vocab.len() {
            return Err(Error::Shape(format!(
                "embedding table has {} rows for a vocabulary of {}",
                table.nrows(),
                vocab.len()
            )));
        }
        if config.architecture == Architecture::Cnn && max_len < config.cnn_kernel {
            return Err(Error::InvalidArgument(format!(
                "max_len {max_len} is shorter than the convolution kernel {}",
                config.cnn_kernel
            )));
        }
        if max_len == 0 {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        let dim = table.ncols();
        let head = config.head();
        let rate = config.dropout();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let head_act = head_activation(head);

        let net = match config.architecture {
            Architecture::Cnn => Network::Cnn(CnnNet {
                conv: Conv1d::new(
                    "conv",
                    config.cnn_kernel,
                    dim,
                    config.cnn_filters,
                    1,
                    Padding::Valid,
                    Activation::Relu,
                    &mut rng,
                ),
                drop1: Dropout::new(rate)?,
                drop2: Dropout::new(rate)?,
                dense: Dense::new("dense", config.cnn_filters, head.width(), head_act, &mut rng),
                argmax: None,
            }),
            Architecture::Lstm => {
                let (cell, post_relu) = match config.lstm_relu {
                    ReluPlacement::InCell => (CellActivation::Relu, false),
                    ReluPlacement::PostLayer => (CellActivation::Tanh, true),
                };
                Network::Lstm(LstmNet {
                    lstm: Lstm::new(LstmCellParams::new("lstm", dim, config.lstm_units, &mut rng), cell, false),
                    post_relu,
                    drop1: Dropout::new(rate)?,
                    drop2: Dropout::new(rate)?,
                    dense: Dense::new("dense", config.lstm_units, head.width(), head_act, &mut rng),
                    relu_out: None,
                })
            }
            Architecture::BiLstm => {
                let mut layers = Vec::new();
                let mut width = dim;
                for (i, &units) in config.bilstm_units.iter().enumerate() {
                    let layer = BiLstm::with_random(&format!("bilstm{i}"), width, units, CellActivation::Tanh, &mut rng);
                    width = layer.output_width();
                    layers.push(layer);
                }
                let drops = (0..layers.len()).map(|_| Dropout::new(rate)).collect::<Result<_>>()?;
                Network::BiLstm(BiLstmNet {
                    layers,
                    drops,
                    dense: Dense::new("dense", width, head.width(), head_act, &mut rng),
                })
            }
        };
        Ok(Self {
            config: config.clone(),
            head,
            max_len,
            vocab,
            embedding_mode: source.mode,
            minn: source.minn,
            maxn: source.maxn,
            embedding: EmbeddingLayer::new(
                Parameter::new("embedding.table", table.into_dyn()),
                config.embedding_trainable,
            ),
            net,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.config.architecture
    }

    /// Probabilities `[batch, head width]` for token indices `[batch, time]`.
    pub fn forward<R: Rng>(&mut self, indices: &Array2<usize>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        let x = self.embedding.forward(indices)?;
        let mask = indices.mapv(|i| i != PAD);
        match &mut self.net {
            Network::Cnn(n) => n.forward(&x, mode, rng),
            Network::Lstm(n) => n.forward(&x, &mask, mode, rng),
            Network::BiLstm(n) => n.forward(&x, &mask, mode, rng),
        }
    }

    /// Back-propagates the gradient with respect to the probabilities.
    pub fn backward(&mut self, dprobs: &Array2<f64>) -> Result<()> {
        let dx = match &mut self.net {
            Network::Cnn(n) => n.backward(dprobs)?,
            Network::Lstm(n) => n.backward(dprobs)?,
            Network::BiLstm(n) => n.backward(dprobs)?,
        };
        self.embedding.backward(&dx)
    }

    /// Current embedding table as a matrix aligned with `vocab`.
    pub fn embedding_snapshot(&self) -> EmbeddingMatrix {
        let table = to2(self.embedding.table.value.clone());
        EmbeddingMatrix {
            output: Array2::zeros(table.raw_dim()),
            input: table,
            vocab: self.vocab.clone(),
            mode: self.embedding_mode,
            minn: self.minn,
            maxn: self.maxn,
            epoch_loss: Vec::new(),
        }
    }

    /// Network tensors excluding the embedding table, in a fixed order.
    pub fn network_parameters(&self) -> Vec<&Parameter> {
        match &self.net {
            Network::Cnn(n) => n.parameters(),
            Network::Lstm(n) => n.parameters(),
            Network::BiLstm(n) => n.parameters(),
        }
    }

    pub fn network_parameters_mut(&mut self) -> Vec<&mut Parameter> {
        match &mut self.net {
            Network::Cnn(n) => n.parameters_mut(),
            Network::Lstm(n) => n.parameters_mut(),
            Network::BiLstm(n) => n.parameters_mut(),
        }
    }
}

impl HasParameters for Classifier {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.embedding.parameters();
        p.extend(self.network_parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.embedding.parameters_mut();
        p.extend(match &mut self.net {
            Network::Cnn(n) => n.parameters_mut(),
            Network::Lstm(n) => n.parameters_mut(),
            Network::BiLstm(n) => n.parameters_mut(),
        });
        p
    }
}

impl CnnNet {
    fn forward<R: Rng>(&mut self, x: &Array3<f64>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        let y = self.conv.forward(x)?;
        let (batch, time, filters) = y.dim();
        let mut pooled = Array2::<f64>::zeros((batch, filters));
        let mut argmax = Array2::<usize>::zeros((batch, filters));
        for b in 0..batch {
            for f in 0..filters {
                let mut best = 0;
                for t in 1..time {
                    if y[[b, t, f]] > y[[b, best, f]] {
                        best = t;
                    }
                }
                argmax[[b, f]] = best;
                pooled[[b, f]] = y[[b, best, f]];
            }
        }
        self.argmax = Some((argmax, time));
        let h = self.drop1.forward(&pooled, mode, rng);
        let h = self.drop2.forward(&h, mode, rng);
        self.dense.forward(&h)
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let dh = self.dense.backward(dy)?;
        let dh = self.drop2.backward(&dh);
        let dpooled = self.drop1.backward(&dh);
        let (argmax, time) = self
            .argmax
            .as_ref()
            .ok_or_else(|| Error::Shape("CNN backward before forward".into()))?;
        let (batch, filters) = argmax.dim();
        let mut dconv = Array3::<f64>::zeros((batch, *time, filters));
        for ((b, f), &t) in argmax.indexed_iter() {
            dconv[[b, t, f]] = dpooled[[b, f]];
        }
        self.conv.backward(&dconv)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.conv.parameters();
        p.extend(self.dense.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.conv.parameters_mut();
        p.extend(self.dense.parameters_mut());
        p
    }
}

impl LstmNet {
    fn forward<R: Rng>(&mut self, x: &Array3<f64>, mask: &Array2<bool>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        let mut h = self.lstm.forward_last(x, mask)?;
        if self.post_relu {
            h = Activation::Relu.apply(&h);
            self.relu_out = Some(h.clone());
        }
        let h = self.drop1.forward(&h, mode, rng);
        let h = self.drop2.forward(&h, mode, rng);
        self.dense.forward(&h)
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let dh = self.dense.backward(dy)?;
        let dh = self.drop2.backward(&dh);
        let mut dh = self.drop1.backward(&dh);
        if self.post_relu {
            let out = self
                .relu_out
                .as_ref()
                .ok_or_else(|| Error::Shape("LSTM backward before forward".into()))?;
            dh = Activation::Relu.backward(out, &dh);
        }
        self.lstm.backward_last(&dh)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.lstm.parameters();
        p.extend(self.dense.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.lstm.parameters_mut();
        p.extend(self.dense.parameters_mut());
        p
    }
}

impl BiLstmNet {
    fn forward<R: Rng>(&mut self, x: &Array3<f64>, mask: &Array2<bool>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        let last = self.layers.len() - 1;
        let mut seq = x.clone();
        for i in 0..last {
            let y = self.layers[i].forward_sequence(&seq, mask)?;
            seq = self.drops[i].forward(&y, mode, rng);
        }
        let h = self.layers[last].forward_last(&seq, mask)?;
        let h = self.drops[last].forward(&h, mode, rng);
        self.dense.forward(&h)
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let last = self.layers.len() - 1;
        let dh = self.dense.backward(dy)?;
        let dh = self.drops[last].backward(&dh);
        let mut dseq = self.layers[last].backward_last(&dh)?;
        for i in (0..last).rev() {
            let d = self.drops[i].backward(&dseq);
            dseq = self.layers[i].backward_sequence(&d)?;
        }
        Ok(dseq)
    }

    fn parameters(&self) -> Vec<&Parameter> {
        let mut p: Vec<&Parameter> = self.layers.iter().flat_map(|l| l.parameters()).collect();
        p.extend(self.dense.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p: Vec<&mut Parameter> = self.layers.iter_mut().flat_map(|l| l.parameters_mut()).collect();
        p.extend(self.dense.parameters_mut());
        p
    }
}

/// Builds a classifier whose vocabulary and initial embedding table come from `embedding`.
pub fn build_model(config: &ModelConfig, embedding: &TrainedEmbedding, max_len: usize) -> Result<Classifier> {
    Classifier::new(
        config,
        embedding.matrix.vocab.clone(),
        embedding.table(),
        &embedding.matrix,
        max_len,
    )
}

fn build_checked(
    arch: Architecture,
    config: &ModelConfig,
    embedding: &TrainedEmbedding,
    max_len: usize,
) -> Result<Classifier> {
    if config.architecture != arch {
        return Err(Error::InvalidArgument(format!(
            "config describes {}, expected {}",
            config.architecture.as_str(),
            arch.as_str()
        )));
    }
    build_model(config, embedding, max_len)
}

pub fn build_cnn(config: &ModelConfig, embedding: &TrainedEmbedding, max_len: usize) -> Result<Classifier> {
    build_checked(Architecture::Cnn, config, embedding, max_len)
}

pub fn build_lstm(config: &ModelConfig, embedding: &TrainedEmbedding, max_len: usize) -> Result<Classifier> {
    build_checked(Architecture::Lstm, config, embedding, max_len)
}

pub fn build_bilstm(config: &ModelConfig, embedding: &TrainedEmbedding, max_len: usize) -> Result<Classifier> {
    build_checked(Architecture::BiLstm, config, embedding, max_len)
}
