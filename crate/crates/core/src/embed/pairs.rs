use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which side of the window is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    SkipGram,
    Cbow,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instance {
    /// Center token predicts one context token.
    SkipGram { center: usize, context: usize },
    /// The averaged context predicts the center token.
    Cbow { context: Vec<usize>, center: usize },
}

/// Context windows around each position. The radius for every center is drawn
/// uniformly from `1..=window`; windows clip at the sentence edges.
pub fn generate_pairs<R: Rng>(tokens: &[usize], window: usize, mode: PairMode, rng: &mut R) -> Vec<Instance> {
    let mut out = Vec::new();
    for_each_window(tokens.len(), window, rng, |center, lo, hi| match mode {
        PairMode::SkipGram => {
            for j in lo..hi {
                if j != center {
                    out.push(Instance::SkipGram {
                        center: tokens[center],
                        context: tokens[j],
                    });
                }
            }
        }
        PairMode::Cbow => {
            let context: Vec<usize> = (lo..hi).filter(|&j| j != center).map(|j| tokens[j]).collect();
            if !context.is_empty() {
                out.push(Instance::Cbow {
                    context,
                    center: tokens[center],
                });
            }
        }
    });
    out
}

/// Calls `f(center, lo, hi)` for each position with the clipped window `[lo, hi)`.
/// Draws exactly one radius per position, in order.
pub(crate) fn for_each_window<R: Rng>(
    len: usize,
    window: usize,
    rng: &mut R,
    mut f: impl FnMut(usize, usize, usize),
) {
    for center in 0..len {
        let (lo, hi) = draw_window(center, len, window, rng);
        f(center, lo, hi);
    }
}

/// Draws the radius for `center` and returns the clipped window `[lo, hi)`.
pub(crate) fn draw_window<R: Rng>(center: usize, len: usize, window: usize, rng: &mut R) -> (usize, usize) {
    let radius = rng.gen_range(1..=window.max(1));
    (center.saturating_sub(radius), (center + radius + 1).min(len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn sg(c: usize, o: usize) -> Instance {
        Instance::SkipGram { center: c, context: o }
    }

    #[test]
    fn window_one_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = generate_pairs(&[0, 1, 2], 1, PairMode::SkipGram, &mut rng);
        assert_eq!(p, vec![sg(0, 1), sg(1, 0), sg(1, 2), sg(2, 1)]);
    }

    #[test]
    fn single_token_has_no_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_pairs(&[7], 5, PairMode::SkipGram, &mut rng).is_empty());
        assert!(generate_pairs(&[7], 5, PairMode::Cbow, &mut rng).is_empty());
    }

    /// Independent enumeration: replay the radius draws and list every pair by
    /// distance, then compare multisets.
    #[test]
    fn matches_brute_force_enumeration() {
        let tokens = [10usize, 11, 12, 13];
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut got = generate_pairs(&tokens, 2, PairMode::SkipGram, &mut rng);
            got.sort();

            let mut replay = ChaCha8Rng::seed_from_u64(seed);
            let radii: Vec<usize> = (0..tokens.len()).map(|_| replay.gen_range(1..=2)).collect();
            let mut expected = Vec::new();
            for (i, &r) in radii.iter().enumerate() {
                for (j, &t) in tokens.iter().enumerate() {
                    let d = (i as isize - j as isize).unsigned_abs();
                    if d >= 1 && d <= r {
                        expected.push(sg(tokens[i], t));
                    }
                }
            }
            expected.sort();
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    #[test]
    fn all_radii_are_eventually_drawn() {
        let tokens = [0usize, 1, 2, 3];
        let mut seen = BTreeSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            seen.extend(generate_pairs(&tokens, 2, PairMode::SkipGram, &mut rng));
        }
        // every ordered pair at distance 1 or 2
        let full: BTreeSet<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j): &(usize, usize)| i != j && i.abs_diff(j) <= 2)
            .map(|(i, j)| sg(i, j))
            .collect();
        assert_eq!(seen, full);
    }

    #[test]
    fn cbow_uses_same_windows() {
        let tokens = [0usize, 1, 2, 3, 4];
        let mut a = ChaCha8Rng::seed_from_u64(8);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        let cbow = generate_pairs(&tokens, 3, PairMode::Cbow, &mut a);
        let sk = generate_pairs(&tokens, 3, PairMode::SkipGram, &mut b);
        let from_cbow: usize = cbow
            .iter()
            .map(|i| match i {
                Instance::Cbow { context, .. } => context.len(),
                _ => unreachable!(),
            })
            .sum();
        assert_eq!(from_cbow, sk.len());
    }
}
