use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Overlapping windows of length `k` taken every `stride` characters. Partial
/// trailing windows are dropped.
pub fn tokenize(sequence: &str, k: usize, stride: usize) -> Result<Vec<String>> {
    if k == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "token length and stride must be positive (k={k}, stride={stride})"
        )));
    }
    let chars: Vec<char> = sequence.chars().collect();
    if k > chars.len() {
        return Err(Error::SequenceTooShort {
            len: chars.len(),
            k,
        });
    }
    Ok((0..=chars.len() - k)
        .step_by(stride)
        .map(|start| chars[start..start + k].iter().collect())
        .collect())
}

/// Like [`tokenize`] but yields no tokens for a sequence shorter than `k`.
pub fn tokenize_lenient(sequence: &str, k: usize) -> Vec<String> {
    tokenize(sequence, k, 1).unwrap_or_default()
}

/// Token/index mapping. Index 0 is PAD and index 1 is UNK; corpus tokens start at 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    counts: Vec<u64>,
    k: usize,
}

impl Vocabulary {
    /// Indices are assigned by descending frequency, ties broken lexicographically.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], min_count: usize, k: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidArgument("corpus is empty".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for sentence in corpus {
            for token in sentence {
                *freq.entry(token.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|&(_, c)| c >= min_count as u64)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        Ok(Self::from_tokens(
            kept.iter().map(|(t, c)| (t.to_string(), *c)),
            k,
        ))
    }

    /// Rebuilds a vocabulary from `(token, count)` pairs already in index order
    /// (specials excluded).
    pub fn from_tokens(tokens: impl IntoIterator<Item = (String, u64)>, k: usize) -> Self {
        let mut index_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut counts = vec![0, 0];
        let mut token_to_index = HashMap::new();
        for (token, count) in tokens {
            token_to_index.insert(token.clone(), index_to_token.len());
            index_to_token.push(token);
            counts.push(count);
        }
        Self {
            token_to_index,
            index_to_token,
            counts,
            k,
        }
    }

    /// Total number of indices, specials included.
    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 2
    }

    /// Number of corpus tokens (specials excluded).
    pub fn corpus_len(&self) -> usize {
        self.len() - 2
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn index(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    /// Corpus frequency per index (zero for the specials).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub indices: Vec<usize>,
    pub mask: Vec<bool>,
}

/// Maps tokens to indices, truncating on the right past `max_len` and right-padding with PAD.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> EncodedSequence {
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index(t.as_ref()))
        .collect();
    let valid = indices.len();
    indices.resize(max_len, PAD);
    let mask = (0..max_len).map(|i| i < valid).collect();
    EncodedSequence { indices, mask }
}

/// Inverse of [`encode`] over the valid positions.
pub fn decode(encoded: &EncodedSequence, vocab: &Vocabulary) -> Vec<String> {
    encoded
        .indices
        .iter()
        .zip(&encoded.mask)
        .filter(|(_, &m)| m)
        .map(|(&i, _)| vocab.token(i).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

/// Token lists plus their fixed-length encodings for a batch of records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Vec<String>>,
    pub encoded: Vec<EncodedSequence>,
    pub max_len: usize,
}

impl TokenStream {
    pub fn new(tokens: Vec<Vec<String>>, vocab: &Vocabulary, max_len: usize) -> Self {
        let encoded = tokens.iter().map(|t| encode(t, vocab, max_len)).collect();
        Self {
            tokens,
            encoded,
            max_len,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
