//! Synthetic data for examples and tests: labeled peptides whose classes differ in
//! residue composition, and a token corpus with planted co-occurrence structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seqdata::{Dataset, Label, PeptideRecord};

const STANDARD: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";
const POSITIVE_POOL: &[u8] = b"KLARFWKLK";
const NEGATIVE_POOL: &[u8] = b"DESNQGPTE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub per_class: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a residue comes from its class pool rather than uniformly
    /// from the 20 standard residues.
    pub signal: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            per_class: 60,
            min_len: 10,
            max_len: 30,
            signal: 0.6,
            seed: 0,
        }
    }
}

/// Balanced dataset, classes interleaved, ids from 1.
pub fn peptide_dataset(cfg: &SynthConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.min_len.clamp(1, 200), cfg.max_len.clamp(1, 200));
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let mut records = Vec::with_capacity(2 * cfg.per_class);
    for i in 0..2 * cfg.per_class {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let pool = if label.is_positive() { POSITIVE_POOL } else { NEGATIVE_POOL };
        let len = rng.gen_range(lo..=hi);
        let seq: String = (0..len)
            .map(|_| {
                let src = if rng.gen_bool(cfg.signal.clamp(0.0, 1.0)) { pool } else { STANDARD };
                src[rng.gen_range(0..src.len())] as char
            })
            .collect();
        records.push(PeptideRecord::new(i + 1, seq, label).expect("generated residues are valid"));
    }
    Dataset::new(format!("synthetic-{}", cfg.seed), records)
}

/// A corpus of three-token sentences `left member right`. Each group owns two member
/// tokens and its own left and right context tokens, so members of one group share
/// every context while members of different groups share none.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCorpus {
    pub sentences: Vec<Vec<String>>,
    /// Member pairs of each group.
    pub groups: Vec<[String; 2]>,
}

impl CooccurrenceCorpus {
    /// `(anchor, same-context partner, different-context token)` for every ordered
    /// pair of groups.
    pub fn triples(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (g, [a, b]) in self.groups.iter().enumerate() {
            for (h, [c, _]) in self.groups.iter().enumerate() {
                if g != h {
                    out.push((a.clone(), b.clone(), c.clone()));
                }
            }
        }
        out
    }
}

/// Token names are random distinct residue triplets, so subword overlap carries no
/// group information.
pub fn cooccurrence_corpus(groups: usize, sentences_per_group: usize, seed: u64) -> CooccurrenceCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names: Vec<String> = Vec::new();
    for &a in STANDARD {
        for &b in STANDARD {
            for &c in STANDARD {
                names.push([a, b, c].iter().map(|&x| x as char).collect());
            }
        }
    }
    names.shuffle(&mut rng);
    let mut next = names.into_iter();
    let mut take = |n: usize| -> Vec<String> { (&mut next).take(n).collect() };

    let mut sentences = Vec::new();
    let mut members = Vec::new();
    for _ in 0..groups {
        let m = take(2);
        let left = take(3);
        let right = take(3);
        for _ in 0..sentences_per_group {
            sentences.push(vec![
                left[rng.gen_range(0..3)].clone(),
                m[rng.gen_range(0..2)].clone(),
                right[rng.gen_range(0..3)].clone(),
            ]);
        }
        members.push([m[0].clone(), m[1].clone()]);
    }
    sentences.shuffle(&mut rng);
    CooccurrenceCorpus {
        sentences,
        groups: members,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn dataset_is_balanced_and_valid() {
        let d = peptide_dataset(&SynthConfig::default());
        assert_eq!((d.positive_count(), d.negative_count()), (60, 60));
        assert!(d.sequences().iter().all(|s| (10..=30).contains(&s.len())));
        assert_eq!(d, peptide_dataset(&SynthConfig::default()));
        let back = crate::seqdata::parse_csv(&d.name, &crate::seqdata::dataset_to_csv(&d)).unwrap();
        assert_eq!(back.records(), d.records());
    }

    #[test]
    fn corpus_structure() {
        let c = cooccurrence_corpus(4, 50, 3);
        assert_eq!(c.sentences.len(), 200);
        assert_eq!(c.triples().len(), 12);
        let all: HashSet<&String> = c.sentences.iter().flatten().collect();
        assert_eq!(all.len(), 4 * 8);
        for [a, b] in &c.groups {
            let ctx = |t: &String| -> HashSet<String> {
                c.sentences.iter().filter(|s| &s[1] == t).map(|s| s[0].clone()).collect()
            };
            assert_eq!(ctx(a), ctx(b));
        }
    }
}
