use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassHead, Classifier, TrainHistory};
use crate::error::{Error, Result};
use crate::seqdata::{encode, tokenize_lenient, Label};
use crate::tensornet::{loss, AdamConfig, AdamState, HasParameters, LossKind, Mode};

/// Accepted mini-batch sizes.
pub const BATCH_SIZE_GRID: [usize; 6] = [16, 32, 64, 96, 128, 192];

const PREDICT_BATCH: usize = 256;
const DROPOUT_SALT: u64 = 0x00d2_0f0a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub early_stopping_patience: usize,
    pub validation_fraction: f64,
    /// `None` picks the loss that matches the model's head.
    pub loss_kind: Option<LossKind>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 50,
            batch_size: 32,
            lr: 0.01,
            early_stopping_patience: 3,
            validation_fraction: 0.1,
            loss_kind: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !BATCH_SIZE_GRID.contains(&self.batch_size) {
            return Err(Error::InvalidArgument(format!(
                "batch size {} is not one of {BATCH_SIZE_GRID:?}",
                self.batch_size
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction {} not in (0, 1)",
                self.validation_fraction
            )));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be positive", self.lr)));
        }
        if self.max_epochs == 0 || self.early_stopping_patience == 0 {
            return Err(Error::InvalidArgument("max_epochs and patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Encoded token indices `[n, max_len]` with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub indices: Array2<usize>,
    pub labels: Vec<Label>,
}

impl LabeledData {
    /// Tokenizes with the model's k and encodes against its vocabulary.
    pub fn from_tokens(model: &Classifier, tokens: &[Vec<String>], labels: Vec<Label>) -> Result<Self> {
        if tokens.len() != labels.len() {
            return Err(Error::Shape(format!("{} sequences vs {} labels", tokens.len(), labels.len())));
        }
        Ok(Self {
            indices: encode_batch(model, tokens),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            indices: self.indices.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

pub(crate) fn encode_batch(model: &Classifier, tokens: &[Vec<String>]) -> Array2<usize> {
    let mut out = Array2::zeros((tokens.len(), model.max_len));
    for (r, t) in tokens.iter().enumerate() {
        let e = encode(t, &model.vocab, model.max_len);
        for (c, &i) in e.indices.iter().enumerate() {
            out[[r, c]] = i;
        }
    }
    out
}

fn targets(head: ClassHead, labels: &[Label]) -> Array2<f64> {
    match head {
        ClassHead::Softmax2 => {
            let mut t = Array2::zeros((labels.len(), 2));
            for (r, l) in labels.iter().enumerate() {
                t[[r, l.as_u8() as usize]] = 1.0;
            }
            t
        }
        ClassHead::Sigmoid1 => Array2::from_shape_fn((labels.len(), 1), |(r, _)| labels[r].as_u8() as f64),
    }
}

/// Loss of `model` on one batch; with `backward` the parameter gradients are
/// accumulated as well.
pub fn batch_loss<R: Rng>(
    model: &mut Classifier,
    indices: &Array2<usize>,
    labels: &[Label],
    kind: LossKind,
    mode: Mode,
    backward: bool,
    rng: &mut R,
) -> Result<f64> {
    let probs = model.forward(indices, mode, rng)?;
    let (value, grad) = loss(&probs, &targets(model.head, labels), kind)?;
    if backward {
        model.backward(&grad)?;
    }
    Ok(value)
}

fn mean_loss(model: &mut Classifier, data: &LabeledData, kind: LossKind) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    for start in (0..data.len()).step_by(PREDICT_BATCH) {
        let rows: Vec<usize> = (start..(start + PREDICT_BATCH).min(data.len())).collect();
        let part = data.select(&rows);
        total += batch_loss(model, &part.indices, &part.labels, kind, Mode::Infer, false, &mut rng)? * rows.len() as f64;
    }
    Ok(total / data.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// New best epoch; keep its weights.
    Improved,
    Continue,
    Stop,
}

/// Stops after `patience` consecutive epochs without a strictly lower validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    pub wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.wait = 0;
            StopDecision::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

/// Stratified validation rows: `round(fraction · class size)` per class, at least one
/// whenever the class has two or more members.
fn validation_rows(labels: &[Label], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut val = Vec::new();
    for class in [Label::Positive, Label::Negative] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::SingleClass);
        }
        members.shuffle(&mut rng);
        let mut n = (fraction * members.len() as f64).round() as usize;
        if members.len() >= 2 {
            n = n.clamp(1, members.len() - 1);
        } else {
            n = 0;
        }
        val.extend_from_slice(&members[..n]);
    }
    val.sort_unstable();
    let train: Vec<usize> = (0..labels.len()).filter(|i| val.binary_search(i).is_err()).collect();
    Ok((train, val))
}

/// Mini-batch Adam with early stopping on a held-out slice of `data`. On return the
/// model holds the weights of the best validation epoch.
pub fn train(model: &mut Classifier, data: &LabeledData, config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset("training data".into()));
    }
    if data.indices.nrows() != data.len() {
        return Err(Error::Shape(format!(
            "{} encoded rows vs {} labels",
            data.indices.nrows(),
            data.len()
        )));
    }
    let kind = config.loss_kind.unwrap_or_else(|| model.head.default_loss());
    let (train_rows, val_rows) = validation_rows(&data.labels, config.validation_fraction, config.seed)?;
    let fit = data.select(&train_rows);
    let val = data.select(&val_rows);

    let mut history = TrainHistory {
        initial_train_loss: mean_loss(model, &fit, kind)?,
        ..TrainHistory::default()
    };
    let mut adam = AdamState::new(AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    });
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ DROPOUT_SALT);
    let mut stopper = EarlyStopping::new(config.early_stopping_patience);
    let mut best: Option<Vec<ndarray::ArrayD<f64>>> = None;
    let mut order: Vec<usize> = (0..fit.len()).collect();

    model.zero_grad();
    for epoch in 1..=config.max_epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
        shuffle_rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut shuffle_rng);

        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let part = fit.select(chunk);
            let l = batch_loss(model, &part.indices, &part.labels, kind, Mode::Train, true, &mut dropout_rng)?;
            if !l.is_finite() {
                history.stopped_epoch = epoch;
                return Err(Error::Diverged {
                    epoch,
                    last_finite_epoch: epoch.checked_sub(1).filter(|&e| e > 0),
                    history: Box::new(history),
                });
            }
            total += l * chunk.len() as f64;
            let mut params = model.parameters_mut();
            adam.step(&mut params)?;
        }
        history.train_loss.push(total / fit.len() as f64);
        if epoch == 1 {
            history.first_epoch_eval_loss = mean_loss(model, &fit, kind)?;
        }

        let val_loss = if val.is_empty() {
            history.train_loss[epoch - 1]
        } else {
            mean_loss(model, &val, kind)?
        };
        history.val_loss.push(val_loss);
        history.stopped_epoch = epoch;
        match stopper.update(epoch, val_loss) {
            StopDecision::Improved => {
                best = Some(model.parameters().iter().map(|p| p.value.clone()).collect());
            }
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.early_stopped = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch;
    if let Some(values) = best {
        for (p, v) in model.parameters_mut().into_iter().zip(values) {
            p.value = v;
        }
    }
    Ok(history)
}

/// Positive-class probability per row of `indices`, in inference mode.
pub fn predict(model: &mut Classifier, indices: &Array2<usize>) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let column = match model.head {
        ClassHead::Softmax2 => 1,
        ClassHead::Sigmoid1 => 0,
    };
    let mut out = Vec::with_capacity(indices.nrows());
    for start in (0..indices.nrows()).step_by(PREDICT_BATCH) {
        let end = (start + PREDICT_BATCH).min(indices.nrows());
        let part = indices.slice(ndarray::s![start..end, ..]).to_owned();
        let probs = model.forward(&part, Mode::Infer, &mut rng)?;
        out.extend(probs.column(column).iter().copied());
    }
    Ok(out)
}

/// Tokenizes raw sequences with the model's k-mer length and predicts them.
pub fn predict_tokens(model: &mut Classifier, sequences: &[&str]) -> Result<Vec<f64>> {
    let k = model.vocab.k();
    let tokens: Vec<Vec<String>> = sequences.iter().map(|s| tokenize_lenient(s, k)).collect();
    let indices = encode_batch(model, &tokens);
    predict(model, &indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{train_embedding, EmbeddingConfig, TrainedEmbedding};
    use crate::models::{build_model, Architecture, ModelConfig};

    fn tokens(seqs: &[String]) -> Vec<Vec<String>> {
        seqs.iter().map(|s| tokenize_lenient(s, 2)).collect()
    }

    /// Positives are rich in K/L, negatives in D/E.
    fn toy(n: usize, seed: u64) -> (Vec<String>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<char> = "KLKLAKG".chars().collect();
        let neg: Vec<char> = "DEDESNG".chars().collect();
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let (alpha, label) = if i % 2 == 0 { (&pos, Label::Positive) } else { (&neg, Label::Negative) };
            let len = rng.gen_range(6..12);
            seqs.push((0..len).map(|_| alpha[rng.gen_range(0..alpha.len())]).collect());
            labels.push(label);
        }
        (seqs, labels)
    }

    fn emb(seqs: &[String]) -> TrainedEmbedding {
        let cfg = EmbeddingConfig {
            dim: 8,
            epochs: 3,
            ..Default::default()
        };
        train_embedding(&tokens(seqs), &cfg).unwrap()
    }

    fn small(arch: Architecture) -> ModelConfig {
        ModelConfig {
            cnn_filters: 8,
            lstm_units: 6,
            bilstm_units: vec![6, 4],
            ..ModelConfig::for_architecture(arch)
        }
    }

    #[test]
    fn patience_counts_consecutive_failures() {
        let mut es = EarlyStopping::new(2);
        let losses = [1.0, 1.1, 1.2, 1.3];
        let mut stopped = None;
        for (i, &l) in losses.iter().enumerate() {
            if es.update(i + 1, l) == StopDecision::Stop {
                stopped = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped, Some(3));
        assert_eq!(es.best_epoch, 1);

        let mut es = EarlyStopping::new(2);
        assert_eq!(es.update(1, 1.0), StopDecision::Improved);
        assert_eq!(es.update(2, 1.0), StopDecision::Continue);
        assert_eq!(es.update(3, 0.5), StopDecision::Improved);
        assert_eq!(es.wait, 0);
    }

    #[test]
    fn validation_split_is_stratified() {
        let labels: Vec<Label> = (0..40).map(|i| if i < 30 { Label::Positive } else { Label::Negative }).collect();
        let (tr, va) = validation_rows(&labels, 0.1, 3).unwrap();
        assert_eq!(tr.len() + va.len(), 40);
        let vpos = va.iter().filter(|&&i| labels[i] == Label::Positive).count();
        assert_eq!((vpos, va.len() - vpos), (3, 1));
        assert!(validation_rows(&[Label::Positive; 4], 0.1, 0).is_err());
    }

    #[test]
    fn batch_size_grid_enforced() {
        let cfg = TrainConfig {
            batch_size: 10,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        for b in BATCH_SIZE_GRID {
            assert!(TrainConfig { batch_size: b, ..Default::default() }.validate().is_ok());
        }
    }

    #[test]
    fn memorizes_sixteen_records() {
        let (seqs, labels) = toy(16, 1);
        let e = emb(&seqs);
        for arch in Architecture::ALL {
            let mut model = build_model(&small(arch), &e, 12).unwrap();
            let data = LabeledData::from_tokens(&model, &tokens(&seqs), labels.clone()).unwrap();
            let cfg = TrainConfig {
                max_epochs: 200,
                batch_size: 16,
                early_stopping_patience: 200,
                ..Default::default()
            };
            train(&mut model, &data, &cfg).unwrap();
            let probs = predict(&mut model, &data.indices).unwrap();
            let correct = probs
                .iter()
                .zip(&labels)
                .filter(|(p, l)| (**p >= 0.5) == l.is_positive())
                .count();
            assert_eq!(correct, 16, "{arch:?}: {probs:?}");
        }
    }

    #[test]
    fn first_epoch_lowers_training_loss() {
        let (seqs, labels) = toy(120, 2);
        let e = emb(&seqs);
        for arch in Architecture::ALL {
            let mut model = build_model(&small(arch), &e, 12).unwrap();
            let data = LabeledData::from_tokens(&model, &tokens(&seqs), labels.clone()).unwrap();
            let cfg = TrainConfig {
                max_epochs: 1,
                ..Default::default()
            };
            let h = train(&mut model, &data, &cfg).unwrap();
            assert_eq!(h.train_loss.len(), 1);
            assert!(h.first_epoch_eval_loss < h.initial_train_loss, "{arch:?}: {h:?}");
        }
    }

    #[test]
    fn dropout_free_runs_are_identical() {
        let (seqs, labels) = toy(60, 3);
        let e = emb(&seqs);
        let cfg = ModelConfig {
            dropout: Some(0.0),
            ..small(Architecture::BiLstm)
        };
        let run = || {
            let mut model = build_model(&cfg, &e, 12).unwrap();
            let data = LabeledData::from_tokens(&model, &tokens(&seqs), labels.clone()).unwrap();
            let tc = TrainConfig {
                max_epochs: 4,
                batch_size: 16,
                ..Default::default()
            };
            (train(&mut model, &data, &tc).unwrap(), predict(&mut model, &data.indices).unwrap())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn history_lengths_agree() {
        let (seqs, labels) = toy(60, 4);
        let e = emb(&seqs);
        let mut model = build_model(&small(Architecture::Cnn), &e, 12).unwrap();
        let data = LabeledData::from_tokens(&model, &tokens(&seqs), labels).unwrap();
        let cfg = TrainConfig {
            max_epochs: 30,
            batch_size: 16,
            early_stopping_patience: 2,
            ..Default::default()
        };
        let h = train(&mut model, &data, &cfg).unwrap();
        assert_eq!(h.train_loss.len(), h.val_loss.len());
        assert_eq!(h.train_loss.len(), h.stopped_epoch);
        assert!(h.stopped_epoch <= 30);
        assert!(h.best_epoch >= 1 && h.best_epoch <= h.stopped_epoch);
    }

    #[test]
    fn divergence_reports_history() {
        let (seqs, labels) = toy(32, 5);
        let e = emb(&seqs);
        let mut model = build_model(&small(Architecture::Cnn), &e, 12).unwrap();
        let data = LabeledData::from_tokens(&model, &tokens(&seqs), labels).unwrap();
        model.network_parameters_mut().last_mut().unwrap().value.fill(f64::NAN);
        let err = train(&mut model, &data, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. } | Error::NonFinite(_)), "{err}");
    }

    #[test]
    fn prediction_is_batch_invariant_and_deterministic() {
        let (seqs, _) = toy(300, 6);
        let e = emb(&seqs);
        for arch in Architecture::ALL {
            let mut model = build_model(&small(arch), &e, 12).unwrap();
            let refs: Vec<&str> = seqs.iter().map(String::as_str).collect();
            let all = predict_tokens(&mut model, &refs).unwrap();
            assert_eq!(all, predict_tokens(&mut model, &refs).unwrap());
            for (i, s) in refs.iter().enumerate().step_by(37) {
                let one = predict_tokens(&mut model, &[s]).unwrap()[0];
                assert!((one - all[i]).abs() < 1e-12, "{arch:?} row {i}");
            }
            assert!(all.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
