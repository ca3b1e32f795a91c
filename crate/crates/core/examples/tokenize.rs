//! Overlapping k-mer tokens, a vocabulary over them, and fixed-length encoding.

use acpclass::seqdata::{decode, encode, tokenize, Vocabulary};

fn main() -> acpclass::Result<()> {
    let peptides = ["GLFDIVKKVVGALGSL", "FLPLIGRVLSGIL", "KWKLFKKIEK"];
    for k in 1..=4 {
        let corpus: Vec<Vec<String>> = peptides
            .iter()
            .map(|p| tokenize(p, k, 1))
            .collect::<acpclass::Result<_>>()?;
        let vocab = Vocabulary::build(&corpus, 1, k)?;
        let enc = encode(&corpus[2], &vocab, 12);
        println!("k={k}: {} distinct tokens (plus PAD/UNK), first tokens {:?}", vocab.len() - 2, &corpus[2][..3]);
        println!("      encoded {:?}", enc.indices);
        assert_eq!(decode(&enc, &vocab), corpus[2][..corpus[2].len().min(12)]);
    }
    match tokenize("KW", 3, 1) {
        Err(e) => println!("short input: {e}"),
        Ok(t) => println!("unexpected tokens {t:?}"),
    }
    Ok(())
}
