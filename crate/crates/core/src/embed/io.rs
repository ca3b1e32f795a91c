//! Embedding files.
//!
//! Text part: a header `dim vocab_size mode minn maxn`, then one line per vocabulary
//! index (`<pad>` and `<unk>` included) holding the token and `dim` floats. Floats use
//! the shortest representation that parses back to the same bits.
//!
//! FastText also writes `<path>.buckets`, a little-endian binary file: magic `ACPB`,
//! `u32` version, `u32` dim, `u32` bucket count, `u32` minn, `u32` maxn, `u64` seed,
//! `u64` row count, then per stored bucket a `u32` id followed by `dim` `f64`s in
//! ascending id order. Buckets absent from the file keep their seeded initial value.
//!
//! Token counts and the context-side vectors are not persisted.

use std::fmt::Write as _;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use super::{EmbeddingMatrix, EmbeddingMode, SubwordIndex, TrainedEmbedding};
use crate::error::{Error, Result};
use crate::fsutil::{read_bytes, read_to_string, write_atomic};
use crate::seqdata::{Vocabulary, PAD_TOKEN, UNK_TOKEN};

pub const BUCKET_MAGIC: &[u8; 4] = b"ACPB";
pub const BUCKET_VERSION: u32 = 1;

pub fn bucket_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".buckets");
    path.with_file_name(name)
}

pub fn to_text(matrix: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        matrix.dim(),
        matrix.len(),
        matrix.mode.as_str(),
        matrix.minn,
        matrix.maxn
    );
    for (token, row) in matrix.vocab.tokens().iter().zip(matrix.input.rows()) {
        out.push_str(token);
        for v in row {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<EmbeddingMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Corrupt("embedding file is empty".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::Corrupt(format!(
            "embedding header needs 5 fields `dim vocab_size mode minn maxn`, found {}",
            fields.len()
        )));
    }
    let num = |i: usize, what: &str| -> Result<usize> {
        fields[i]
            .parse()
            .map_err(|_| Error::Corrupt(format!("bad {what} {:?} in embedding header", fields[i])))
    };
    let dim = num(0, "dim")?;
    let size = num(1, "vocab_size")?;
    let mode: EmbeddingMode = fields[2]
        .parse()
        .map_err(|_| Error::Corrupt(format!("bad mode {:?} in embedding header", fields[2])))?;
    let minn = num(3, "minn")?;
    let maxn = num(4, "maxn")?;
    if dim == 0 || size < 2 {
        return Err(Error::Corrupt(format!("degenerate embedding header: dim {dim}, vocab {size}")));
    }

    let mut input = Array2::zeros((size, dim));
    let mut tokens = Vec::with_capacity(size);
    for row in 0..size {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::Corrupt(format!("embedding file truncated: {row} of {size} rows")))?;
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line");
        let values = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Corrupt(format!("line {}: {e}", lineno + 1)))?;
        if values.len() != dim {
            return Err(Error::Corrupt(format!(
                "line {}: expected {dim} values, found {}",
                lineno + 1,
                values.len()
            )));
        }
        input.row_mut(row).assign(&Array1::from(values));
        tokens.push(token.to_string());
    }
    if lines.next().is_some() {
        return Err(Error::Corrupt(format!("embedding file has more than {size} rows")));
    }
    if tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
        return Err(Error::Corrupt("first two rows must be <pad> and <unk>".into()));
    }
    let k = tokens.get(2).map_or(0, |t| t.chars().count());
    let vocab = Vocabulary::from_tokens(tokens.into_iter().skip(2).map(|t| (t, 1)), k);
    if vocab.len() != size {
        return Err(Error::Corrupt("duplicate tokens in embedding file".into()));
    }
    Ok(EmbeddingMatrix {
        output: Array2::zeros((size, dim)),
        input,
        vocab,
        mode,
        minn,
        maxn,
        epoch_loss: Vec::new(),
    })
}

pub fn buckets_to_bytes(index: &SubwordIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(BUCKET_MAGIC);
    let header = [
        BUCKET_VERSION,
        index.dim as u32,
        index.bucket_count,
        index.minn as u32,
        index.maxn as u32,
    ];
    for v in header {
        buf.write_u32::<LittleEndian>(v).expect("vec write");
    }
    buf.write_u64::<LittleEndian>(index.seed).expect("vec write");
    buf.write_u64::<LittleEndian>(index.materialized_len() as u64)
        .expect("vec write");
    for (bucket, row) in index.materialized() {
        buf.write_u32::<LittleEndian>(bucket).expect("vec write");
        for &v in row {
            buf.write_f64::<LittleEndian>(v).expect("vec write");
        }
    }
    buf
}

pub fn buckets_from_bytes(bytes: &[u8]) -> Result<SubwordIndex> {
    let truncated = |_| Error::Corrupt("bucket file truncated".into());
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic).map_err(truncated)?;
    if &magic != BUCKET_MAGIC {
        return Err(Error::Corrupt("bucket file has wrong magic".into()));
    }
    let version = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != BUCKET_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: BUCKET_VERSION,
        });
    }
    let dim = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let bucket_count = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    let minn = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let maxn = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let seed = cur.read_u64::<LittleEndian>().map_err(truncated)?;
    let rows = cur.read_u64::<LittleEndian>().map_err(truncated)?;
    if dim == 0 || bucket_count == 0 {
        return Err(Error::Corrupt("bucket file has zero dim or bucket count".into()));
    }
    let expected = rows
        .checked_mul(4 + 8 * dim as u64)
        .ok_or_else(|| Error::Corrupt("bucket row count overflows".into()))?;
    if (bytes.len() as u64 - cur.position()) != expected {
        return Err(Error::Corrupt(format!(
            "bucket file holds {} payload bytes, header implies {expected}",
            bytes.len() as u64 - cur.position()
        )));
    }
    let mut index = SubwordIndex::new(dim, bucket_count, minn, maxn, seed);
    let mut previous = None;
    for _ in 0..rows {
        let bucket = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        if bucket >= bucket_count || previous.is_some_and(|p| p >= bucket) {
            return Err(Error::Corrupt(format!("bucket id {bucket} out of order or range")));
        }
        previous = Some(bucket);
        let mut row = Array1::zeros(dim);
        for v in row.iter_mut() {
            *v = cur.read_f64::<LittleEndian>().map_err(truncated)?;
        }
        index.insert_row(bucket, row);
    }
    Ok(index)
}

pub fn save_embedding(path: &Path, embedding: &TrainedEmbedding) -> Result<()> {
    write_atomic(path, to_text(&embedding.matrix).as_bytes())?;
    if let Some(index) = &embedding.subwords {
        write_atomic(&bucket_path(path), &buckets_to_bytes(index))?;
    }
    Ok(())
}

pub fn load_embedding(path: &Path) -> Result<TrainedEmbedding> {
    let matrix = from_text(&read_to_string(path)?)?;
    let subwords = if matrix.mode == EmbeddingMode::FastText {
        let index = buckets_from_bytes(&read_bytes(&bucket_path(path))?)?;
        if index.dim != matrix.dim() || index.minn != matrix.minn || index.maxn != matrix.maxn {
            return Err(Error::Corrupt("bucket file does not match embedding header".into()));
        }
        Some(index)
    } else {
        None
    };
    Ok(TrainedEmbedding { matrix, subwords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{train_embedding, EmbeddingConfig};

    fn corpus() -> Vec<Vec<String>> {
        ["KLAK LAKL AKLA", "GIGK IGKF", "KLAK GIGK"]
            .iter()
            .map(|s| s.split(' ').map(String::from).collect())
            .collect()
    }

    fn trained(mode: EmbeddingMode) -> TrainedEmbedding {
        let cfg = EmbeddingConfig {
            dim: 5,
            epochs: 2,
            mode,
            minn: 2,
            maxn: 4,
            bucket_count: 1000,
            ..Default::default()
        };
        train_embedding(&corpus(), &cfg).unwrap()
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let t = trained(EmbeddingMode::Cbow);
        let back = from_text(&to_text(&t.matrix)).unwrap();
        assert_eq!(back.input, t.matrix.input);
        assert_eq!(back.vocab.tokens(), t.matrix.vocab.tokens());
        assert_eq!(back.mode, EmbeddingMode::Cbow);
    }

    #[test]
    fn fasttext_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.vec");
        let t = trained(EmbeddingMode::FastText);
        save_embedding(&path, &t).unwrap();
        assert!(bucket_path(&path).exists());
        let back = load_embedding(&path).unwrap();
        assert_eq!(back.subwords, t.subwords);
        for token in ["KLAK", "GIGK", "WWWW", PAD_TOKEN] {
            assert_eq!(back.vector(token), t.vector(token), "{token}");
        }
    }

    #[test]
    fn header_is_documented_shape() {
        let t = trained(EmbeddingMode::SkipGram);
        let text = to_text(&t.matrix);
        let header = text.lines().next().unwrap();
        assert_eq!(header, format!("5 {} skipgram 2 4", t.matrix.len()));
        assert!(text.lines().nth(1).unwrap().starts_with("<pad> 0 0 0 0 0"));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let t = trained(EmbeddingMode::SkipGram);
        let text = to_text(&t.matrix);
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(from_text(&truncated), Err(Error::Corrupt(_))));
        assert!(from_text("5 3 skipgram 2").is_err());
        assert!(from_text(&text.replacen(" ", " x", 1)).is_err());

        let t = trained(EmbeddingMode::FastText);
        let bytes = buckets_to_bytes(t.subwords.as_ref().unwrap());
        assert!(matches!(buckets_from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Corrupt(_))));
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(matches!(
            buckets_from_bytes(&wrong),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
        assert!(buckets_from_bytes(b"NOPE").is_err());
    }
}
