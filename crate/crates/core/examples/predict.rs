//! Train, save, reload and score new sequences with a persisted classifier.

use acpclass::embed::train_embedding;
use acpclass::eval::EmbeddingSpec;
use acpclass::models::{build_model, predict_tokens, train, Architecture, Classifier, LabeledData, ModelConfig, TrainConfig};
use acpclass::seqdata::tokenize_lenient;
use acpclass::synth::{peptide_dataset, SynthConfig};

fn main() -> acpclass::Result<()> {
    let data = peptide_dataset(&SynthConfig::default());
    let spec = EmbeddingSpec::Ft(2);
    let tokens: Vec<Vec<String>> = data.sequences().iter().map(|s| tokenize_lenient(s, spec.k())).collect();
    let emb = train_embedding(&tokens, &spec.apply(&Default::default()))?;
    let cfg = ModelConfig {
        architecture: Architecture::Cnn,
        ..ModelConfig::default()
    };
    let longest = tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut model = build_model(&cfg, &emb, longest)?;
    let fit = LabeledData::from_tokens(&model, &tokens, data.labels())?;
    train(&mut model, &fit, &TrainConfig::default())?;

    let path = std::env::temp_dir().join("acpclass-example-model").join("cnn.acpm");
    model.save(&path)?;
    let mut loaded = Classifier::load(&path)?;
    let queries = ["KLARFWKLKKLAK", "DESNQGPTEDESN", "GLFDIVKKVVGALGSL"];
    let a = predict_tokens(&mut model, &queries)?;
    let b = predict_tokens(&mut loaded, &queries)?;
    for ((q, p), r) in queries.iter().zip(&a).zip(&b) {
        println!("{q:<18} p(ACP) = {p:.4}  reloaded {r:.4}");
    }
    Ok(())
}
