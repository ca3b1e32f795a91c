//! Anticancer peptide classification: k-mer tokenization, Word2Vec and FastText
//! embeddings, CNN/LSTM/BiLSTM classifiers built on layers with hand-written backward passes,
//! repeated-holdout evaluation and the `acpclass` command line.

pub mod embed;
pub mod error;
pub(crate) mod fsutil;
pub mod seqdata;
pub mod tensornet;
pub mod models;
pub mod eval;
pub mod selfcheck;
pub mod synth;
pub mod cli;
pub use error::{Error, Result};
