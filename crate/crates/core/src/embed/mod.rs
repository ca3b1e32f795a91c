//! Word2Vec (skip-gram, CBOW) and FastText embeddings trained with negative sampling
//! on k-mer token streams, one peptide per sentence.
//!
//! Row indices of an [`EmbeddingMatrix`] follow its [`Vocabulary`]: row 0 is PAD
//! (always zero) and row 1 is UNK.

mod fasttext;
pub mod io;
mod pairs;
mod sampling;
mod subword;
mod word2vec;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub use fasttext::train_fasttext;
pub use pairs::{generate_pairs, Instance, PairMode};
pub use sampling::{NegativeTable, UNIGRAM_POWER};
pub use subword::{extract_subwords, fnv1a_32, subword_strings, SubwordIndex};
pub use word2vec::{negative_sampling_grads, negative_sampling_loss, train_word2vec, NsGradients, LR_FLOOR};

use crate::error::{Error, Result};
use crate::seqdata::{Vocabulary, PAD, PAD_TOKEN, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    SkipGram,
    Cbow,
    FastText,
}

impl EmbeddingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingMode::SkipGram => "skipgram",
            EmbeddingMode::Cbow => "cbow",
            EmbeddingMode::FastText => "fasttext",
        }
    }
}

impl std::str::FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skipgram" | "skip-gram" | "sg" => Ok(EmbeddingMode::SkipGram),
            "cbow" => Ok(EmbeddingMode::Cbow),
            "fasttext" | "ft" => Ok(EmbeddingMode::FastText),
            other => Err(Error::InvalidArgument(format!("unknown embedding mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Maximum context radius in tokens.
    pub window: usize,
    /// Negative samples per positive target.
    pub negatives: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub mode: EmbeddingMode,
    pub minn: usize,
    pub maxn: usize,
    pub bucket_count: u32,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 50,
            lr_initial: 0.025,
            mode: EmbeddingMode::SkipGram,
            minn: 2,
            maxn: 3,
            bucket_count: 200_000,
            min_count: 1,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("embedding dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if !(self.lr_initial.is_finite() && self.lr_initial > 0.0) {
            return bad("lr_initial must be positive");
        }
        if self.bucket_count == 0 {
            return bad("bucket_count must be at least 1");
        }
        if self.mode == EmbeddingMode::FastText && (self.minn == 0 || self.minn > self.maxn) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= minn <= maxn, got minn={} maxn={}",
                self.minn, self.maxn
            )));
        }
        Ok(())
    }
}

/// Trained vectors aligned to `vocab`. For FastText the input rows hold the
/// token-level vectors only; use [`embedding_for`] to compose them with subwords.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub input: Array2<f64>,
    pub output: Array2<f64>,
    pub vocab: Vocabulary,
    pub mode: EmbeddingMode,
    pub minn: usize,
    pub maxn: usize,
    /// Mean per-update loss of each epoch (empty when loaded from disk).
    pub epoch_loss: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.input.ncols()
    }

    pub fn len(&self) -> usize {
        self.input.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A trained embedding with its subword table when the mode is FastText.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEmbedding {
    pub matrix: EmbeddingMatrix,
    pub subwords: Option<SubwordIndex>,
}

impl TrainedEmbedding {
    pub fn vector(&self, token: &str) -> Array1<f64> {
        embedding_for(token, &self.matrix, self.subwords.as_ref())
    }

    /// Classifier embedding table for this embedding's own vocabulary.
    pub fn table(&self) -> Array2<f64> {
        embedding_table(&self.matrix, self.subwords.as_ref())
    }
}

/// Trains whichever model `config.mode` selects.
pub fn train_embedding(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Result<TrainedEmbedding> {
    match config.mode {
        EmbeddingMode::FastText => {
            let (matrix, subwords) = train_fasttext(corpus, config)?;
            Ok(TrainedEmbedding {
                matrix,
                subwords: Some(subwords),
            })
        }
        _ => Ok(TrainedEmbedding {
            matrix: train_word2vec(corpus, config)?,
            subwords: None,
        }),
    }
}

/// Vector for `token`. PAD is all zeros; Word2Vec maps unknown tokens to the UNK row;
/// FastText averages the token vector (if known) with its subword vectors.
pub fn embedding_for(token: &str, matrix: &EmbeddingMatrix, subwords: Option<&SubwordIndex>) -> Array1<f64> {
    if token == PAD_TOKEN {
        return Array1::zeros(matrix.dim());
    }
    match (matrix.mode, subwords) {
        (EmbeddingMode::FastText, Some(index)) => fasttext::compose(token, matrix, index),
        _ => matrix.input.row(matrix.vocab.index(token)).to_owned(),
    }
}

/// `vocab.len() × dim` table whose row `i` is the vector of vocabulary index `i`.
pub fn embedding_table(matrix: &EmbeddingMatrix, subwords: Option<&SubwordIndex>) -> Array2<f64> {
    let mut table = Array2::zeros((matrix.len(), matrix.dim()));
    for (i, token) in matrix.vocab.tokens().iter().enumerate() {
        match i {
            PAD => {}
            UNK => table.row_mut(i).assign(&matrix.input.row(UNK)),
            _ => table.row_mut(i).assign(&embedding_for(token, matrix, subwords)),
        }
    }
    table
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<String>> {
        ["KLA KLA AKL", "GIG GIG KLA", "AKL GIG"]
            .iter()
            .map(|s| s.split(' ').map(String::from).collect())
            .collect()
    }

    fn tiny(mode: EmbeddingMode) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 6,
            epochs: 2,
            mode,
            bucket_count: 100,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(EmbeddingConfig::default().validate().is_ok());
        for cfg in [
            EmbeddingConfig { dim: 0, ..Default::default() },
            EmbeddingConfig { window: 0, ..Default::default() },
            EmbeddingConfig { negatives: 0, ..Default::default() },
            EmbeddingConfig {
                mode: EmbeddingMode::FastText,
                minn: 4,
                maxn: 3,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("SkipGram".parse::<EmbeddingMode>().unwrap(), EmbeddingMode::SkipGram);
        assert_eq!("fasttext".parse::<EmbeddingMode>().unwrap(), EmbeddingMode::FastText);
        assert!("glove".parse::<EmbeddingMode>().is_err());
    }

    #[test]
    fn lookup_rules() {
        for mode in [EmbeddingMode::SkipGram, EmbeddingMode::Cbow, EmbeddingMode::FastText] {
            let t = train_embedding(&corpus(), &tiny(mode)).unwrap();
            assert!(t.vector(PAD_TOKEN).iter().all(|&v| v == 0.0), "{mode:?}");
            let table = t.table();
            assert_eq!(table.dim(), (t.matrix.vocab.len(), 6));
            assert!(table.row(PAD).iter().all(|&v| v == 0.0));
            let id = t.matrix.vocab.get("KLA").unwrap();
            assert_eq!(table.row(id), t.vector("KLA"));
            if mode != EmbeddingMode::FastText {
                assert_eq!(t.vector("KLA"), t.matrix.input.row(id));
                assert_eq!(t.vector("WWW"), t.matrix.input.row(UNK));
            }
        }
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }
}
