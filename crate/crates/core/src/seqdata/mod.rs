//! Peptide datasets: loading, validation, k-mer tokenization, vocabularies,
//! fixed-length encoding and stratified holdout splits.

mod load;
mod split;
mod vocab;

pub use load::{
    dataset_to_csv, load_dataset, parse_csv, parse_fasta, standard_dataset_path, DatasetFormat, ACPS250_FILE, DATA_DIR_ENV, INDEPENDENT_FILE,
};
pub use split::{repeated_holdout, split_holdout};
pub use vocab::{
    decode, encode, tokenize, tokenize_lenient, EncodedSequence, TokenStream, Vocabulary, PAD,
    PAD_TOKEN, UNK, UNK_TOKEN,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest accepted peptide.
pub const MAX_SEQUENCE_LEN: usize = 200;

/// The 20 standard residues followed by the rare/ambiguous letters B, J, O, U, X, Z.
pub const ALPHABET: &str = "ACDEFGHIKLMNPQRSTVWYBJOUXZ";

pub fn is_valid_residue(ch: char) -> bool {
    ALPHABET.contains(ch)
}

/// Binary class of a peptide. The label column of a dataset file is taken as ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative = 0,
    Positive = 1,
}

impl Label {
    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeptideRecord {
    pub id: usize,
    pub sequence: String,
    pub label: Label,
}

impl PeptideRecord {
    /// Validates the sequence against [`ALPHABET`] and the length bounds.
    pub fn new(id: usize, sequence: impl Into<String>, label: Label) -> Result<Self> {
        let sequence = sequence.into();
        if let Some(ch) = sequence.chars().find(|c| !is_valid_residue(*c)) {
            return Err(Error::InvalidResidue { id, ch });
        }
        let len = sequence.len();
        if len == 0 || len > MAX_SEQUENCE_LEN {
            return Err(Error::InvalidLength { id, len });
        }
        Ok(Self {
            id,
            sequence,
            label,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    records: Vec<PeptideRecord>,
    positive_count: usize,
    negative_count: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<PeptideRecord>) -> Self {
        let positive_count = records.iter().filter(|r| r.label.is_positive()).count();
        let negative_count = records.len() - positive_count;
        Self {
            name: name.into(),
            records,
            positive_count,
            negative_count,
        }
    }

    pub fn records(&self) -> &[PeptideRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.positive_count
    }

    pub fn negative_count(&self) -> usize {
        self.negative_count
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn sequences(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.sequence.as_str()).collect()
    }

    /// Dataset made of the records at `indices`, in the given order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Self {
        Dataset::new(
            name,
            indices.iter().map(|&i| self.records[i].clone()).collect(),
        )
    }
}
