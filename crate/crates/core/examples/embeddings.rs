//! Skip-gram, CBOW and FastText on a corpus with planted context groups, then a
//! save/load round trip of the FastText vectors.

use acpclass::embed::io::{load_embedding, save_embedding};
use acpclass::embed::{cosine, train_embedding, EmbeddingConfig, EmbeddingMode};
use acpclass::synth::cooccurrence_corpus;

fn main() -> acpclass::Result<()> {
    let corpus = cooccurrence_corpus(6, 200, 1);
    for mode in [EmbeddingMode::SkipGram, EmbeddingMode::Cbow, EmbeddingMode::FastText] {
        let cfg = EmbeddingConfig {
            mode,
            dim: 20,
            window: 2,
            epochs: 20,
            minn: 2,
            maxn: 3,
            ..EmbeddingConfig::default()
        };
        let emb = train_embedding(&corpus.sentences, &cfg)?;
        let sim = |a: &str, b: &str| cosine(emb.vector(a).as_slice().unwrap(), emb.vector(b).as_slice().unwrap());
        let triples = corpus.triples();
        let wins = triples.iter().filter(|(a, s, o)| sim(a, s) > sim(a, o)).count();
        let (a, s, o) = &triples[0];
        println!(
            "{:<9} vocab {:>3}  cos({a},{s}) = {:+.3}  cos({a},{o}) = {:+.3}  same-group wins {wins}/{}",
            mode.as_str(),
            emb.matrix.len(),
            sim(a, s),
            sim(a, o),
            triples.len()
        );
        if mode == EmbeddingMode::FastText {
            let dir = std::env::temp_dir().join("acpclass-example-embedding");
            let path = dir.join("fasttext.txt");
            save_embedding(&path, &emb)?;
            let back = load_embedding(&path)?;
            println!("reloaded from {}: identical vector = {}", path.display(), back.vector(a) == emb.vector(a));
        }
    }
    Ok(())
}
