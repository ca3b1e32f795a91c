use std::collections::BTreeMap;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BOW: char = '<';
pub const EOW: char = '>';

/// 32-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a_32(s: &str) -> u32 {
    let mut hash: u32 = 0x811c_9dc5;
    for &byte in s.as_bytes() {
        hash ^= byte as u32;
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

/// Character n-grams (lengths `minn..=maxn`) of `<token>`, followed by `<token>` itself
/// unless it already appeared as an n-gram.
pub fn subword_strings(token: &str, minn: usize, maxn: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once(BOW)
        .chain(token.chars())
        .chain(std::iter::once(EOW))
        .collect();
    let mut grams = Vec::new();
    for n in minn.max(1)..=maxn {
        if n > wrapped.len() {
            break;
        }
        for start in 0..=wrapped.len() - n {
            grams.push(wrapped[start..start + n].iter().collect::<String>());
        }
    }
    if !(minn..=maxn).contains(&wrapped.len()) {
        grams.push(wrapped.iter().collect());
    }
    grams
}

/// Bucket ids of [`subword_strings`].
pub fn extract_subwords(token: &str, minn: usize, maxn: usize, bucket_count: u32) -> Vec<u32> {
    subword_strings(token, minn, maxn)
        .iter()
        .map(|g| fnv1a_32(g) % bucket_count)
        .collect()
}

/// Hashed subword vectors. Conceptually a `bucket_count × dim` matrix; only buckets
/// that have been touched are stored, every other row equals its deterministic
/// initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordIndex {
    pub dim: usize,
    pub bucket_count: u32,
    pub minn: usize,
    pub maxn: usize,
    pub seed: u64,
    rows: BTreeMap<u32, Array1<f64>>,
}

impl SubwordIndex {
    pub const HASH: &'static str = "fnv1a32";

    pub fn new(dim: usize, bucket_count: u32, minn: usize, maxn: usize, seed: u64) -> Self {
        Self {
            dim,
            bucket_count: bucket_count.max(1),
            minn,
            maxn,
            seed,
            rows: BTreeMap::new(),
        }
    }

    pub fn subwords(&self, token: &str) -> Vec<u32> {
        extract_subwords(token, self.minn, self.maxn, self.bucket_count)
    }

    /// Initial value of a bucket: uniform in `±0.5/dim`, drawn from a per-bucket stream.
    pub fn initial_row(&self, bucket: u32) -> Array1<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_b0c4);
        rng.set_stream(bucket as u64);
        let limit = 0.5 / self.dim as f64;
        Array1::from_shape_simple_fn(self.dim, || rng.gen_range(-limit..limit))
    }

    pub fn row(&self, bucket: u32) -> Array1<f64> {
        self.rows
            .get(&bucket)
            .cloned()
            .unwrap_or_else(|| self.initial_row(bucket))
    }

    /// Mutable access, materializing the bucket on first use.
    pub fn row_mut(&mut self, bucket: u32) -> &mut Array1<f64> {
        if !self.rows.contains_key(&bucket) {
            let init = self.initial_row(bucket);
            self.rows.insert(bucket, init);
        }
        self.rows.get_mut(&bucket).expect("just inserted")
    }

    pub fn materialized(&self) -> impl Iterator<Item = (u32, &Array1<f64>)> {
        self.rows.iter().map(|(k, v)| (*k, v))
    }

    pub fn materialized_len(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn insert_row(&mut self, bucket: u32, row: Array1<f64>) {
        self.rows.insert(bucket, row);
    }
}
