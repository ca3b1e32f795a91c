use rand::Rng;

use crate::error::{Error, Result};

/// Smoothing exponent applied to token frequencies.
pub const UNIGRAM_POWER: f64 = 0.75;

/// Negative-sampling distribution `P(w) ∝ count(w)^0.75` stored as a cumulative table.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeTable {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl NegativeTable {
    /// `counts` is indexed by token id; zero-count ids (the specials) are never drawn.
    pub fn new(counts: &[u64]) -> Result<Self> {
        let distinct = counts.iter().filter(|&&c| c > 0).count();
        if distinct < 2 {
            return Err(Error::InvalidArgument(format!(
                "negative sampling needs at least 2 distinct tokens, found {distinct}"
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // guard the top of the table against rounding
        let top = counts.iter().rposition(|&c| c > 0).expect("two positive counts");
        for v in &mut cdf[top..] {
            *v = 1.0;
        }
        Ok(Self { probs, cdf })
    }

    pub fn probability(&self, id: usize) -> f64 {
        self.probs.get(id).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}
