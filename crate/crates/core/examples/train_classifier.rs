//! One holdout split: FastText FT(3) embedding on the training side, a BiLSTM on top,
//! loss curve and test metrics.

use acpclass::embed::train_embedding;
use acpclass::eval::{confusion, metrics, roc_auc, EmbeddingSpec, THRESHOLD};
use acpclass::models::{build_model, predict, train, Architecture, LabeledData, ModelConfig, TrainConfig};
use acpclass::seqdata::{split_holdout, tokenize_lenient, Dataset};
use acpclass::synth::{peptide_dataset, SynthConfig};

fn main() -> acpclass::Result<()> {
    let data = peptide_dataset(&SynthConfig {
        signal: 0.3,
        ..SynthConfig::default()
    });
    let (fit_set, test_set) = split_holdout(&data, 0.2, 0)?;
    let spec = EmbeddingSpec::Ft(3);
    let tok = |d: &Dataset| -> Vec<Vec<String>> { d.sequences().iter().map(|s| tokenize_lenient(s, spec.k())).collect() };
    let fit_tokens = tok(&fit_set);

    let mut emb_cfg = spec.apply(&Default::default());
    emb_cfg.dim = 32;
    let emb = train_embedding(&fit_tokens, &emb_cfg)?;
    let cfg = ModelConfig {
        architecture: Architecture::BiLstm,
        ..ModelConfig::default()
    };
    let longest = fit_tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut model = build_model(&cfg, &emb, cfg.resolve_max_len(longest))?;
    let fit = LabeledData::from_tokens(&model, &fit_tokens, fit_set.labels())?;
    let history = train(&mut model, &fit, &TrainConfig::default())?;
    for (e, (t, v)) in history.train_loss.iter().zip(&history.val_loss).enumerate() {
        println!("epoch {:>2}  train {t:.4}  val {v:.4}", e + 1);
    }
    println!("best epoch {}, early stop {}", history.best_epoch, history.early_stopped);

    let test = LabeledData::from_tokens(&model, &tok(&test_set), test_set.labels())?;
    let scores = predict(&mut model, &test.indices)?;
    let m = metrics(&confusion(&scores, &test.labels, THRESHOLD)?)?;
    let auc = roc_auc(&scores, &test.labels)?.auc;
    println!(
        "test: ACC {:.3} SEN {:.3} SPE {:.3} MCC {:.3} AUC {auc:.3}",
        m.acc, m.sen, m.spe, m.mcc
    );
    Ok(())
}
