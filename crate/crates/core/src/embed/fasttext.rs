use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pairs::draw_window;
use super::sampling::NegativeTable;
use super::subword::SubwordIndex;
use super::word2vec::{build_vocab, decayed_lr, ensure_finite, index_corpus, init_input, output_step};
use super::{EmbeddingConfig, EmbeddingMatrix, EmbeddingMode};
use crate::error::{Error, Result};
use crate::seqdata::PAD;

/// Skip-gram with negative sampling where the center representation is the mean of
/// the token vector and its subword bucket vectors.
pub fn train_fasttext(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Result<(EmbeddingMatrix, SubwordIndex)> {
    config.validate()?;
    if config.mode != EmbeddingMode::FastText {
        return Err(Error::InvalidArgument("train_fasttext needs mode fasttext".into()));
    }
    let vocab = build_vocab(corpus, config)?;
    let table = NegativeTable::new(vocab.counts())?;
    let sentences = index_corpus(corpus, &vocab);
    let dim = config.dim;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = init_input(vocab.len(), dim, &mut rng);
    let mut output = Array2::zeros((vocab.len(), dim));
    let mut index = SubwordIndex::new(dim, config.bucket_count, config.minn, config.maxn, config.seed);

    // Dense working copy of the buckets the vocabulary touches.
    let mut slot_of: HashMap<u32, usize> = HashMap::new();
    let mut buckets: Vec<u32> = Vec::new();
    let token_slots: Vec<Vec<usize>> = vocab
        .tokens()
        .iter()
        .enumerate()
        .map(|(id, token)| {
            if id < 2 {
                return Vec::new();
            }
            index
                .subwords(token)
                .into_iter()
                .map(|b| {
                    *slot_of.entry(b).or_insert_with(|| {
                        buckets.push(b);
                        buckets.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let mut slots = Array2::zeros((buckets.len(), dim));
    for (s, &b) in buckets.iter().enumerate() {
        slots.row_mut(s).assign(&index.initial_row(b));
    }

    let per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total = per_epoch * config.epochs as u64;
    let mut done = 0u64;
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut h = vec![0.0; dim];
    let mut h_step = vec![0.0; dim];

    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        for sentence in &sentences {
            for center in 0..sentence.len() {
                let (lo, hi) = draw_window(center, sentence.len(), config.window, &mut rng);
                let lr = decayed_lr(config.lr_initial, done, total);
                done += 1;
                let c = sentence[center];
                let parts = &token_slots[c];
                let scale = 1.0 / (1 + parts.len()) as f64;
                for j in (lo..hi).filter(|&j| j != center) {
                    h.fill(0.0);
                    for (hi, v) in h.iter_mut().zip(input.row(c)) {
                        *hi += v * scale;
                    }
                    for &s in parts {
                        for (hi, v) in h.iter_mut().zip(slots.row(s)) {
                            *hi += v * scale;
                        }
                    }
                    h_step.fill(0.0);
                    loss_sum += output_step(
                        &h,
                        sentence[j],
                        &mut output,
                        &table,
                        config.negatives,
                        lr,
                        &mut rng,
                        &mut h_step,
                    );
                    updates += 1;
                    for (v, st) in input.row_mut(c).iter_mut().zip(&h_step) {
                        *v += st * scale;
                    }
                    for &s in parts {
                        for (v, st) in slots.row_mut(s).iter_mut().zip(&h_step) {
                            *v += st * scale;
                        }
                    }
                }
            }
        }
        epoch_loss.push(if updates == 0 { 0.0 } else { loss_sum / updates as f64 });
    }

    ensure_finite(&input, "token vectors")?;
    ensure_finite(&output, "output vectors")?;
    ensure_finite(&slots, "subword vectors")?;
    input.row_mut(PAD).fill(0.0);
    for (s, &b) in buckets.iter().enumerate() {
        index.insert_row(b, slots.row(s).to_owned());
    }
    let matrix = EmbeddingMatrix {
        input,
        output,
        vocab,
        mode: EmbeddingMode::FastText,
        minn: config.minn,
        maxn: config.maxn,
        epoch_loss,
    };
    Ok((matrix, index))
}

/// Mean of the token vector (when in vocabulary) and the token's subword vectors.
pub(crate) fn compose(token: &str, matrix: &EmbeddingMatrix, index: &SubwordIndex) -> Array1<f64> {
    let mut acc = Array1::zeros(index.dim);
    let mut n = 0usize;
    if let Some(id) = matrix.vocab.get(token) {
        acc += &matrix.input.row(id);
        n += 1;
    }
    for b in index.subwords(token) {
        acc += &index.row(b);
        n += 1;
    }
    if n > 0 {
        acc /= n as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{cosine, embedding_for};
    use rand::Rng;

    fn config(seed: u64) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 12,
            window: 2,
            negatives: 4,
            epochs: 5,
            lr_initial: 0.05,
            mode: EmbeddingMode::FastText,
            minn: 2,
            maxn: 3,
            bucket_count: 5000,
            seed,
            ..EmbeddingConfig::default()
        }
    }

    fn corpus() -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let alphabet: Vec<char> = "ACDEFGHIKL".chars().collect();
        (0..120)
            .map(|_| {
                (0..10)
                    .map(|_| (0..3).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn reproducible_and_finite() {
        let (a, ia) = train_fasttext(&corpus(), &config(3)).unwrap();
        let (b, ib) = train_fasttext(&corpus(), &config(3)).unwrap();
        assert_eq!(a.input, b.input);
        assert_eq!(ia, ib);
        assert!(a.input.iter().all(|v| v.is_finite()));
        assert!(ia.materialized().all(|(_, r)| r.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn oov_token_gets_finite_vector() {
        let (m, idx) = train_fasttext(&corpus(), &config(1)).unwrap();
        assert!(m.vocab.get("WWW").is_none());
        let v = embedding_for("WWW", &m, Some(&idx));
        assert_eq!(v.len(), 12);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(v.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn in_vocab_vector_is_manual_mean() {
        let (m, idx) = train_fasttext(&corpus(), &config(2)).unwrap();
        let token = m.vocab.token(5).unwrap().to_string();
        let got = embedding_for(&token, &m, Some(&idx));
        let mut sum = m.input.row(5).to_owned();
        let subs = crate::embed::extract_subwords(&token, 2, 3, 5000);
        for b in &subs {
            sum = sum + idx.row(*b);
        }
        let expected = sum / (subs.len() + 1) as f64;
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    /// Uniform contexts: every token appears next to random fillers, so token-level
    /// signal is noise and shared subwords dominate similarity.
    #[test]
    fn shared_subwords_increase_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fillers = ["QQ", "RR", "SS", "TT"];
        let targets = ["AB", "BA", "CD"];
        let corpus: Vec<Vec<String>> = (0..600)
            .map(|_| {
                let mut s: Vec<String> = (0..4).map(|_| fillers[rng.gen_range(0..4)].to_string()).collect();
                s.insert(2, targets[rng.gen_range(0..3)].to_string());
                s
            })
            .collect();
        let cfg = EmbeddingConfig {
            minn: 1,
            maxn: 1,
            epochs: 3,
            ..config(5)
        };
        // "AB" and "BA" share every single-character subword; "CD" shares only the boundary markers
        let (m, idx) = train_fasttext(&corpus, &cfg).unwrap();
        let ab = embedding_for("AB", &m, Some(&idx));
        let ba = embedding_for("BA", &m, Some(&idx));
        let cd = embedding_for("CD", &m, Some(&idx));
        let near = cosine(ab.as_slice().unwrap(), ba.as_slice().unwrap());
        let far = cosine(ab.as_slice().unwrap(), cd.as_slice().unwrap());
        assert!(near > far, "shared {near} vs disjoint {far}");
    }

    #[test]
    fn wrong_mode_rejected() {
        let cfg = EmbeddingConfig {
            mode: EmbeddingMode::SkipGram,
            ..config(0)
        };
        assert!(train_fasttext(&corpus(), &cfg).is_err());
    }
}
