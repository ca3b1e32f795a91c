use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pairs::draw_window;
use super::sampling::NegativeTable;
use super::{EmbeddingConfig, EmbeddingMatrix, EmbeddingMode};
use crate::error::{Error, Result};
use crate::seqdata::{Vocabulary, PAD, UNK};

/// Final learning rate as a fraction of the initial one.
pub const LR_FLOOR: f64 = 1e-4;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-log σ(u⁺·h) - Σ log σ(-u⁻·h)` for one hidden vector `h`.
pub fn negative_sampling_loss(h: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(positive, h)) - negatives.iter().map(|u| log_sigmoid(-dot(u, h))).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsGradients {
    pub loss: f64,
    pub hidden: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Loss and gradients of [`negative_sampling_loss`] with respect to every argument.
pub fn negative_sampling_grads(h: &[f64], positive: &[f64], negatives: &[&[f64]]) -> NsGradients {
    let mut hidden = vec![0.0; h.len()];
    let s = dot(positive, h);
    let gp = sigmoid(s) - 1.0;
    for (d, u) in hidden.iter_mut().zip(positive) {
        *d += gp * u;
    }
    let positive_grad = h.iter().map(|x| gp * x).collect();
    let mut negative_grads = Vec::with_capacity(negatives.len());
    for u in negatives {
        let gn = sigmoid(dot(u, h));
        for (d, ui) in hidden.iter_mut().zip(u.iter()) {
            *d += gn * ui;
        }
        negative_grads.push(h.iter().map(|x| gn * x).collect());
    }
    NsGradients {
        loss: negative_sampling_loss(h, positive, negatives),
        hidden,
        positive: positive_grad,
        negatives: negative_grads,
    }
}

/// One SGD step on the output side for hidden vector `h`.
///
/// Updates the target and negative rows of `output` in place, accumulates the
/// gradient-scaled step for `h` into `h_step` (to be added to the input side), and
/// returns the loss before the update.
pub(crate) fn output_step<R: Rng>(
    h: &[f64],
    target: usize,
    output: &mut Array2<f64>,
    table: &NegativeTable,
    negatives: usize,
    lr: f64,
    rng: &mut R,
    h_step: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    for n in 0..=negatives {
        let (row, label) = if n == 0 {
            (target, 1.0)
        } else {
            let neg = table.sample(rng);
            if neg == target {
                continue;
            }
            (neg, 0.0)
        };
        let mut u = output.row_mut(row);
        let u = u.as_slice_mut().expect("row-major");
        let score = dot(u, h);
        loss -= if label > 0.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
        let g = lr * (label - sigmoid(score));
        for ((step, ui), hi) in h_step.iter_mut().zip(u.iter_mut()).zip(h) {
            *step += g * *ui;
            *ui += g * hi;
        }
    }
    loss
}

pub(crate) fn init_input<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    let limit = 0.5 / dim as f64;
    let mut m = Array2::from_shape_simple_fn((rows, dim), || rng.gen_range(-limit..limit));
    m.row_mut(PAD).fill(0.0);
    m
}

/// Corpus as vocabulary indices, dropping tokens below `min_count`.
pub(crate) fn index_corpus(corpus: &[Vec<String>], vocab: &Vocabulary) -> Vec<Vec<usize>> {
    corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.get(t)).collect())
        .collect()
}

pub(crate) fn build_vocab(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Result<Vocabulary> {
    let total: usize = corpus.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("embedding corpus is empty".into()));
    }
    let k = corpus
        .iter()
        .flat_map(|s| s.first())
        .next()
        .map_or(0, |t| t.chars().count());
    Vocabulary::build(corpus, config.min_count, k)
}

/// Linearly decaying learning rate after `done` of `total` steps.
pub(crate) fn decayed_lr(lr0: f64, done: u64, total: u64) -> f64 {
    let frac = if total == 0 { 0.0 } else { done as f64 / total as f64 };
    lr0 * (1.0 - frac).max(LR_FLOOR)
}

pub(crate) fn ensure_finite(m: &Array2<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} after embedding training")))
    }
}

/// Trains skip-gram or CBOW vectors with negative sampling. Each inner `Vec` is one
/// sentence; windows never cross sentences.
pub fn train_word2vec(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Result<EmbeddingMatrix> {
    config.validate()?;
    if config.mode == EmbeddingMode::FastText {
        return Err(Error::InvalidArgument(
            "train_word2vec needs mode skipgram or cbow".into(),
        ));
    }
    let vocab = build_vocab(corpus, config)?;
    let table = NegativeTable::new(vocab.counts())?;
    let sentences = index_corpus(corpus, &vocab);
    let dim = config.dim;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = init_input(vocab.len(), dim, &mut rng);
    let mut output = Array2::zeros((vocab.len(), dim));

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
                match config.mode {
                    EmbeddingMode::SkipGram => {
                        let c = sentence[center];
                        for j in (lo..hi).filter(|&j| j != center) {
                            h.copy_from_slice(input.row(c).as_slice().expect("row-major"));
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
                            for (v, s) in input.row_mut(c).iter_mut().zip(&h_step) {
                                *v += s;
                            }
                        }
                    }
                    EmbeddingMode::Cbow => {
                        let ctx: Vec<usize> = (lo..hi).filter(|&j| j != center).map(|j| sentence[j]).collect();
                        if ctx.is_empty() {
                            continue;
                        }
                        let scale = 1.0 / ctx.len() as f64;
                        h.fill(0.0);
                        for &c in &ctx {
                            for (hi, v) in h.iter_mut().zip(input.row(c)) {
                                *hi += v * scale;
                            }
                        }
                        h_step.fill(0.0);
                        loss_sum += output_step(
                            &h,
                            sentence[center],
                            &mut output,
                            &table,
                            config.negatives,
                            lr,
                            &mut rng,
                            &mut h_step,
                        );
                        updates += 1;
                        for &c in &ctx {
                            for (v, s) in input.row_mut(c).iter_mut().zip(&h_step) {
                                *v += s * scale;
                            }
                        }
                    }
                    EmbeddingMode::FastText => unreachable!(),
                }
            }
        }
        epoch_loss.push(if updates == 0 { 0.0 } else { loss_sum / updates as f64 });
    }

    ensure_finite(&input, "input vectors")?;
    ensure_finite(&output, "output vectors")?;
    input.row_mut(PAD).fill(0.0);
    debug_assert!(UNK < input.nrows());
    Ok(EmbeddingMatrix {
        input,
        output,
        vocab,
        mode: config.mode,
        minn: config.minn,
        maxn: config.maxn,
        epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::cosine;
    use crate::tensornet::gradcheck::{grad_check, DEFAULT_EPS};
    use proptest::prelude::*;
    use rand::Rng;

    fn small_config(mode: EmbeddingMode) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 16,
            window: 2,
            negatives: 5,
            epochs: 40,
            lr_initial: 0.05,
            mode,
            seed: 7,
            ..EmbeddingConfig::default()
        }
    }

    /// A and B always sit between the same neighbours; C lives in a disjoint context.
    fn shared_context_corpus() -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let left = ["L1", "L2", "L3"];
        let right = ["R1", "R2", "R3"];
        let other = ["X1", "X2", "X3"];
        let mut corpus = Vec::new();
        for _ in 0..300 {
            let mid = if rng.gen_bool(0.5) { "A" } else { "B" };
            corpus.push(vec![
                left[rng.gen_range(0..3)].to_string(),
                mid.to_string(),
                right[rng.gen_range(0..3)].to_string(),
            ]);
            corpus.push(vec![
                other[rng.gen_range(0..3)].to_string(),
                "C".to_string(),
                other[rng.gen_range(0..3)].to_string(),
            ]);
        }
        corpus
    }

    fn vec_of(m: &EmbeddingMatrix, t: &str) -> Vec<f64> {
        m.input.row(m.vocab.get(t).unwrap()).to_vec()
    }

    #[test]
    fn shared_contexts_are_closer() {
        for mode in [EmbeddingMode::SkipGram, EmbeddingMode::Cbow] {
            let m = train_word2vec(&shared_context_corpus(), &small_config(mode)).unwrap();
            let (a, b, c) = (vec_of(&m, "A"), vec_of(&m, "B"), vec_of(&m, "C"));
            let ab = cosine(&a, &b);
            let ac = cosine(&a, &c);
            assert!(ab > ac, "{mode:?}: cos(A,B)={ab} cos(A,C)={ac}");
        }
    }

    #[test]
    fn shape_and_determinism() {
        let cfg = EmbeddingConfig {
            epochs: 3,
            ..small_config(EmbeddingMode::SkipGram)
        };
        let corpus = shared_context_corpus();
        let a = train_word2vec(&corpus, &cfg).unwrap();
        let b = train_word2vec(&corpus, &cfg).unwrap();
        assert_eq!(a.input.ncols(), 16);
        assert_eq!(a.input.nrows(), a.vocab.len());
        assert_eq!(a.input, b.input);
        assert_eq!(a.output, b.output);
        assert!(a.input.row(PAD).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn training_loss_decreases() {
        let m = train_word2vec(&shared_context_corpus(), &small_config(EmbeddingMode::SkipGram)).unwrap();
        assert!(m.epoch_loss.last().unwrap() < m.epoch_loss.first().unwrap());
    }

    #[test]
    fn empty_corpus_rejected() {
        let cfg = small_config(EmbeddingMode::SkipGram);
        assert!(train_word2vec(&[], &cfg).is_err());
        assert!(train_word2vec(&[vec![]], &cfg).is_err());
    }

    #[test]
    fn fasttext_mode_rejected() {
        let cfg = small_config(EmbeddingMode::FastText);
        assert!(train_word2vec(&shared_context_corpus(), &cfg).is_err());
    }

    #[test]
    fn lr_schedule_endpoints() {
        assert_eq!(decayed_lr(0.025, 0, 100), 0.025);
        assert!((decayed_lr(0.025, 100, 100) - 0.025e-4).abs() < 1e-18);
        assert!((decayed_lr(0.025, 50, 100) - 0.0125).abs() < 1e-15);
    }

    fn instance(seed: u64, dim: usize, n_neg: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = || (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let h = v();
        let p = v();
        let negs = (0..n_neg).map(|_| v()).collect();
        (h, p, negs)
    }

    proptest! {
        #[test]
        fn analytic_gradients_match_finite_differences(seed in 0u64..10_000, dim in 1usize..8, n_neg in 1usize..6) {
            let (h, p, negs) = instance(seed, dim, n_neg);
            let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = negative_sampling_grads(&h, &p, &neg_refs);

            // flatten [h, p, negs...] into one parameter vector
            let mut x = h.clone();
            x.extend(&p);
            negs.iter().for_each(|n| x.extend(n));
            let mut analytic = g.hidden.clone();
            analytic.extend(&g.positive);
            g.negatives.iter().for_each(|n| analytic.extend(n));

            let f = |x: &[f64]| {
                let parts: Vec<&[f64]> = x.chunks(dim).collect();
                negative_sampling_loss(parts[0], parts[1], &parts[2..])
            };
            let err = grad_check(&x, &analytic, DEFAULT_EPS, f).unwrap();
            prop_assert!(err < 1e-5, "relative error {}", err);
        }

        #[test]
        fn one_small_step_lowers_the_loss(seed in 0u64..10_000, dim in 1usize..8, n_neg in 1usize..6) {
            let (h, p, negs) = instance(seed, dim, n_neg);
            let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = negative_sampling_grads(&h, &p, &neg_refs);
            let lr = 1e-3;
            let step = |x: &[f64], d: &[f64]| x.iter().zip(d).map(|(a, b)| a - lr * b).collect::<Vec<f64>>();
            let h2 = step(&h, &g.hidden);
            let p2 = step(&p, &g.positive);
            let n2: Vec<Vec<f64>> = negs.iter().zip(&g.negatives).map(|(n, d)| step(n, d)).collect();
            let n2_refs: Vec<&[f64]> = n2.iter().map(Vec::as_slice).collect();
            let after = negative_sampling_loss(&h2, &p2, &n2_refs);
            prop_assert!(after <= g.loss, "{} -> {}", g.loss, after);
        }
    }

    #[test]
    fn output_step_matches_pure_gradient() {
        let table = NegativeTable::new(&[0, 0, 1, 1]).unwrap();
        let mut out = Array2::from_shape_vec((4, 3), (0..12).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let h = [0.2, -0.4, 0.9];
        let before = out.clone();
        let lr = 0.1;
        // find a seed whose first draw is id 2 (the non-target)
        let mut seed = 0;
        loop {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            if table.sample(&mut r) == 2 {
                break;
            }
            seed += 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h_step = [0.0; 3];
        let loss = output_step(&h, 3, &mut out, &table, 1, lr, &mut rng, &mut h_step);

        let p = before.row(3).to_vec();
        let n = before.row(2).to_vec();
        let g = negative_sampling_grads(&h, &p, &[&n]);
        assert!((loss - g.loss).abs() < 1e-12);
        for i in 0..3 {
            assert!((h_step[i] + lr * g.hidden[i]).abs() < 1e-12);
            assert!((out[[3, i]] - (p[i] - lr * g.positive[i])).abs() < 1e-12);
            assert!((out[[2, i]] - (n[i] - lr * g.negatives[0][i])).abs() < 1e-12);
        }
    }
}
