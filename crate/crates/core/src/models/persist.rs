//! Model files.
//!
//! Layout: magic `ACPM`, `u32` format version, `u64` header length, a JSON header
//! (architecture, model config, padded length, tensor manifest, embedding section
//! length), the tensors as little-endian `f64` in manifest order, and finally the
//! embedding text section (vocabulary plus the current embedding table).
//! All integers are little-endian.

use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use super::{Architecture, Classifier, ModelConfig};
use crate::embed::io::{from_text, to_text};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::fsutil::{read_bytes, write_atomic};

pub const MODEL_MAGIC: &[u8; 4] = b"ACPM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    config: ModelConfig,
    max_len: usize,
    tensors: Vec<TensorSpec>,
    embedding_bytes: u64,
}

/// Everything needed to rebuild a trained [`Classifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub format_version: u32,
    pub architecture: Architecture,
    pub config: ModelConfig,
    pub max_len: usize,
    /// Network tensors in a fixed order (the embedding table lives in `embedding`).
    pub tensors: Vec<(String, ArrayD<f64>)>,
    pub embedding: EmbeddingMatrix,
}

impl Classifier {
    pub fn to_params(&self) -> ModelParams {
        ModelParams {
            format_version: MODEL_FORMAT_VERSION,
            architecture: self.architecture(),
            config: self.config.clone(),
            max_len: self.max_len,
            tensors: self
                .network_parameters()
                .into_iter()
                .map(|p| (p.name.clone(), p.value.clone()))
                .collect(),
            embedding: self.embedding_snapshot(),
        }
    }

    /// Rebuilds the classifier; fails when the tensors do not fit the architecture.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        if params.config.architecture != params.architecture {
            return Err(Error::Corrupt(format!(
                "architecture tag {} disagrees with config {}",
                params.architecture.as_str(),
                params.config.architecture.as_str()
            )));
        }
        let emb = &params.embedding;
        let mut model = Classifier::new(&params.config, emb.vocab.clone(), emb.input.clone(), emb, params.max_len)?;
        let mut slots = model.network_parameters_mut();
        if slots.len() != params.tensors.len() {
            return Err(Error::Shape(format!(
                "{} expects {} tensors, file has {}",
                params.architecture.label(),
                slots.len(),
                params.tensors.len()
            )));
        }
        for (slot, (name, value)) in slots.iter_mut().zip(&params.tensors) {
            if &slot.name != name || slot.value.shape() != value.shape() {
                return Err(Error::Shape(format!(
                    "tensor {name} {:?} does not fit {} {:?}",
                    value.shape(),
                    slot.name,
                    slot.value.shape()
                )));
            }
            slot.value = value.clone();
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_params(&self.to_params(), path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_params(&load_params(path)?)
    }
}

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let embedding = to_text(&self.embedding).into_bytes();
        let header = Header {
            architecture: self.architecture,
            config: self.config.clone(),
            max_len: self.max_len,
            tensors: self
                .tensors
                .iter()
                .map(|(name, v)| TensorSpec {
                    name: name.clone(),
                    shape: v.shape().to_vec(),
                })
                .collect(),
            embedding_bytes: embedding.len() as u64,
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let floats: usize = self.tensors.iter().map(|(_, v)| v.len()).sum();
        let mut buf = Vec::with_capacity(16 + header.len() + 8 * floats + embedding.len());
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&self.format_version.to_le_bytes());
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(&header);
        let mut word = [0u8; 8];
        for (_, v) in &self.tensors {
            for &x in v.iter() {
                LittleEndian::write_f64(&mut word, x);
                buf.extend_from_slice(&word);
            }
        }
        buf.extend_from_slice(&embedding);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::Corrupt(m.to_string());
        if bytes.len() < 16 {
            return Err(corrupt("model file truncated before the header"));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(corrupt("not a model file (bad magic)"));
        }
        let version = LittleEndian::read_u32(&bytes[4..8]);
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let header_len = LittleEndian::read_u64(&bytes[8..16]) as usize;
        let body = &bytes[16..];
        if body.len() < header_len {
            return Err(corrupt("model file truncated inside the header"));
        }
        let header: Header = serde_json::from_slice(&body[..header_len])
            .map_err(|e| Error::Corrupt(format!("model header: {e}")))?;
        let mut rest = &body[header_len..];

        let floats: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        let expected = floats * 8 + header.embedding_bytes as usize;
        if rest.len() != expected {
            return Err(Error::Corrupt(format!(
                "model payload is {} bytes, header describes {expected}",
                rest.len()
            )));
        }
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for spec in &header.tensors {
            let n: usize = spec.shape.iter().product();
            let data: Vec<f64> = rest[..8 * n].chunks_exact(8).map(LittleEndian::read_f64).collect();
            rest = &rest[8 * n..];
            let value = ArrayD::from_shape_vec(IxDyn(&spec.shape), data).expect("length checked");
            tensors.push((spec.name.clone(), value));
        }
        let text = std::str::from_utf8(rest).map_err(|_| corrupt("embedding section is not UTF-8"))?;
        Ok(Self {
            format_version: version,
            architecture: header.architecture,
            config: header.config,
            max_len: header.max_len,
            tensors,
            embedding: from_text(text)?,
        })
    }
}

pub fn save_params(params: &ModelParams, path: &Path) -> Result<()> {
    write_atomic(path, &params.to_bytes())
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    ModelParams::from_bytes(&read_bytes(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{train_embedding, EmbeddingConfig, EmbeddingMode};
    use crate::models::{build_model, predict_tokens};
    use crate::seqdata::tokenize_lenient;

    fn model(arch: Architecture, mode: EmbeddingMode) -> Classifier {
        let corpus: Vec<Vec<String>> = ["KLAKLAKGLKKLLG", "GIGKFLHSAKKF", "FLPIIAKLLSGLL"]
            .iter()
            .map(|s| tokenize_lenient(s, 3))
            .collect();
        let e = train_embedding(
            &corpus,
            &EmbeddingConfig {
                dim: 6,
                epochs: 1,
                mode,
                bucket_count: 500,
                ..Default::default()
            },
        )
        .unwrap();
        let cfg = ModelConfig {
            cnn_filters: 5,
            lstm_units: 4,
            bilstm_units: vec![4, 3],
            ..ModelConfig::for_architecture(arch)
        };
        build_model(&cfg, &e, 10).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let seqs = ["KLAKLAKG", "GIGKFLHS", "WWWWWW", "AC"];
        for arch in Architecture::ALL {
            for mode in [EmbeddingMode::SkipGram, EmbeddingMode::FastText] {
                let mut m = model(arch, mode);
                let path = dir.path().join(format!("{}.acpm", arch.as_str()));
                m.save(&path).unwrap();
                let params = load_params(&path).unwrap();
                let orig = m.to_params();
                assert_eq!(params.tensors, orig.tensors);
                assert_eq!(params.embedding.input, orig.embedding.input);
                assert_eq!(params.embedding.vocab.tokens(), orig.embedding.vocab.tokens());
                assert_eq!(params.config, orig.config);
                let mut back = Classifier::load(&path).unwrap();
                assert_eq!(
                    predict_tokens(&mut m, &seqs).unwrap(),
                    predict_tokens(&mut back, &seqs).unwrap()
                );
            }
        }
    }

    #[test]
    fn truncation_and_version_errors() {
        let bytes = model(Architecture::Lstm, EmbeddingMode::Cbow).to_params().to_bytes();
        for cut in [3, 15, 40, bytes.len() - 1] {
            assert!(matches!(ModelParams::from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        let mut newer = bytes.clone();
        newer[4] = 2;
        assert!(matches!(
            ModelParams::from_bytes(&newer),
            Err(Error::VersionMismatch { found: 2, supported: 1 })
        ));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(ModelParams::from_bytes(&bad).is_err());
    }

    #[test]
    fn mismatched_tensors_rejected() {
        let mut p = model(Architecture::Cnn, EmbeddingMode::SkipGram).to_params();
        p.tensors.pop();
        assert!(Classifier::from_params(&p).is_err());
        let mut p = model(Architecture::Cnn, EmbeddingMode::SkipGram).to_params();
        p.architecture = Architecture::Lstm;
        assert!(Classifier::from_params(&p).is_err());
    }
}
