//! CNN, LSTM and BiLSTM peptide classifiers on top of a pre-trained embedding table,
//! trained with Adam and validation-loss early stopping.

mod network;
mod persist;
mod train;

use serde::{Deserialize, Serialize};

pub use network::{build_bilstm, build_cnn, build_lstm, build_model, BiLstmNet, Classifier, CnnNet, LstmNet, Network};
pub use persist::{load_params, save_params, ModelParams, TensorSpec, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use train::{
    batch_loss, predict, predict_tokens, train, EarlyStopping, LabeledData, StopDecision, TrainConfig, BATCH_SIZE_GRID,
};

use crate::error::{Error, Result};
use crate::seqdata::MAX_SEQUENCE_LEN;
use crate::tensornet::LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Cnn,
    Lstm,
    BiLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Cnn, Architecture::Lstm, Architecture::BiLstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
            Architecture::BiLstm => "bilstm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Architecture::Cnn => "CNN",
            Architecture::Lstm => "LSTM",
            Architecture::BiLstm => "BiLSTM",
        }
    }

    pub fn default_head(self) -> ClassHead {
        match self {
            Architecture::Cnn | Architecture::Lstm => ClassHead::Softmax2,
            Architecture::BiLstm => ClassHead::Sigmoid1,
        }
    }

    pub fn default_dropout(self) -> f64 {
        match self {
            Architecture::Cnn | Architecture::Lstm => 0.3,
            Architecture::BiLstm => 0.2,
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(Architecture::Cnn),
            "lstm" => Ok(Architecture::Lstm),
            "bilstm" => Ok(Architecture::BiLstm),
            other => Err(Error::InvalidArgument(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassHead {
    /// Two-way softmax; the positive probability is column 1.
    Softmax2,
    /// One sigmoid unit.
    Sigmoid1,
}

impl ClassHead {
    pub fn width(self) -> usize {
        match self {
            ClassHead::Softmax2 => 2,
            ClassHead::Sigmoid1 => 1,
        }
    }

    pub fn default_loss(self) -> LossKind {
        match self {
            ClassHead::Softmax2 => LossKind::CategoricalCe,
            ClassHead::Sigmoid1 => LossKind::BinaryCe,
        }
    }
}

/// Where the LSTM classifier applies its ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReluPlacement {
    /// ReLU replaces tanh inside the cell.
    InCell,
    /// Standard tanh cell followed by a ReLU on the returned state.
    PostLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// `None` uses the architecture's usual head.
    pub head: Option<ClassHead>,
    pub embedding_trainable: bool,
    /// Padded token length; `None` fits the longest training sequence.
    pub max_len: Option<usize>,
    pub seed: u64,
    pub cnn_filters: usize,
    pub cnn_kernel: usize,
    pub lstm_units: usize,
    pub lstm_relu: ReluPlacement,
    /// Hidden size of each stacked BiLSTM layer; the last returns only its final state.
    pub bilstm_units: Vec<usize>,
    /// `None` uses the architecture's usual rate.
    pub dropout: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::BiLstm,
            head: None,
            embedding_trainable: true,
            max_len: None,
            seed: 0,
            cnn_filters: 64,
            cnn_kernel: 3,
            lstm_units: 32,
            lstm_relu: ReluPlacement::InCell,
            bilstm_units: vec![64, 32, 16],
            dropout: None,
        }
    }
}

impl ModelConfig {
    pub fn for_architecture(architecture: Architecture) -> Self {
        Self {
            architecture,
            ..Self::default()
        }
    }

    pub fn head(&self) -> ClassHead {
        self.head.unwrap_or_else(|| self.architecture.default_head())
    }

    pub fn dropout(&self) -> f64 {
        self.dropout.unwrap_or_else(|| self.architecture.default_dropout())
    }

    /// Padded length for a training set whose longest token sequence is `longest`.
    pub fn resolve_max_len(&self, longest: usize) -> usize {
        self.max_len.unwrap_or(longest).clamp(1, MAX_SEQUENCE_LEN)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..1.0).contains(&self.dropout()) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout()));
        }
        match self.architecture {
            Architecture::Cnn if self.cnn_filters == 0 || self.cnn_kernel == 0 => {
                bad("CNN filters and kernel must be positive".into())
            }
            Architecture::Lstm if self.lstm_units == 0 => bad("LSTM units must be positive".into()),
            Architecture::BiLstm if self.bilstm_units.is_empty() || self.bilstm_units.contains(&0) => {
                bad(format!("BiLSTM units must be positive, got {:?}", self.bilstm_units))
            }
            _ => Ok(()),
        }
    }
}

/// Per-epoch losses of one training run. Epochs are numbered from 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Loss over the training portion before the first update (inference mode).
    pub initial_train_loss: f64,
    /// Same measurement as `initial_train_loss`, taken after the first epoch.
    pub first_epoch_eval_loss: f64,
    /// Mean mini-batch loss of each epoch (training mode, dropout active).
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub early_stopped: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_pairing_defaults() {
        assert_eq!(ModelConfig::for_architecture(Architecture::Cnn).head(), ClassHead::Softmax2);
        assert_eq!(ModelConfig::for_architecture(Architecture::Lstm).head(), ClassHead::Softmax2);
        assert_eq!(ModelConfig::for_architecture(Architecture::BiLstm).head(), ClassHead::Sigmoid1);
        let over = ModelConfig {
            head: Some(ClassHead::Softmax2),
            ..ModelConfig::for_architecture(Architecture::BiLstm)
        };
        assert_eq!(over.head(), ClassHead::Softmax2);
    }

    #[test]
    fn dropout_defaults() {
        assert_eq!(ModelConfig::for_architecture(Architecture::Cnn).dropout(), 0.3);
        assert_eq!(ModelConfig::for_architecture(Architecture::BiLstm).dropout(), 0.2);
    }

    #[test]
    fn config_toml_round_trip() {
        let cfg = ModelConfig::for_architecture(Architecture::Lstm);
        let text = toml::to_string(&cfg).unwrap();
        let back: ModelConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<ModelConfig>("units = 3").is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ModelConfig::for_architecture(Architecture::BiLstm);
        cfg.bilstm_units = vec![];
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            dropout: Some(1.0),
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
