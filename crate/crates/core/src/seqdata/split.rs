use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Stratified holdout split. Each class is shuffled independently with a generator
/// seeded from `seed` and `round(test_fraction * class_size)` records go to the test
/// side. Both halves keep the original record order.
pub fn split_holdout(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "test fraction {test_fraction} not in (0, 1)"
        )));
    }
    if dataset.positive_count() == 0 || dataset.negative_count() == 0 {
        return Err(Error::InvalidSplit(format!(
            "dataset {} needs both classes ({} positive, {} negative)",
            dataset.name,
            dataset.positive_count(),
            dataset.negative_count()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; dataset.len()];
    for class in [Label::Positive, Label::Negative] {
        let mut members: Vec<usize> = dataset
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        for &i in &members[..n_test] {
            in_test[i] = true;
        }
    }

    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| in_test[i]);
    if test_idx.is_empty() || train_idx.is_empty() {
        return Err(Error::InvalidSplit(format!(
            "fraction {test_fraction} leaves an empty side ({} train, {} test)",
            train_idx.len(),
            test_idx.len()
        )));
    }
    Ok((
        dataset.subset(format!("{}-train", dataset.name), &train_idx),
        dataset.subset(format!("{}-test", dataset.name), &test_idx),
    ))
}

/// The `n_runs` splits of the repeated holdout protocol, seeded `seed_base + r`.
pub fn repeated_holdout(
    dataset: &Dataset,
    test_fraction: f64,
    n_runs: usize,
    seed_base: u64,
) -> Result<Vec<(Dataset, Dataset)>> {
    (0..n_runs as u64)
        .map(|r| split_holdout(dataset, test_fraction, seed_base + r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::PeptideRecord;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn balanced(pos: usize, neg: usize) -> Dataset {
        let mut records = Vec::new();
        for i in 0..pos + neg {
            let label = if i < pos { Label::Positive } else { Label::Negative };
            records.push(PeptideRecord::new(i + 1, "KWKLAK", label).unwrap());
        }
        Dataset::new("balanced", records)
    }

    #[test]
    fn table_one_arithmetic() {
        // 250/250 at 0.2: 50 per class held out.
        let (train, test) = split_holdout(&balanced(250, 250), 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (400, 100));
        assert_eq!((train.positive_count(), train.negative_count()), (200, 200));
        assert_eq!((test.positive_count(), test.negative_count()), (50, 50));

        let (train, test) = split_holdout(&balanced(150, 150), 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (240, 60));
    }

    #[test]
    fn deterministic_for_seed() {
        let ds = balanced(30, 20);
        let a = split_holdout(&ds, 0.3, 42).unwrap();
        let b = split_holdout(&ds, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let c = split_holdout(&ds, 0.3, 43).unwrap();
        assert_ne!(a.1.records(), c.1.records());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(split_holdout(&balanced(5, 0), 0.2, 1).is_err());
        assert!(split_holdout(&balanced(5, 5), 0.0, 1).is_err());
        assert!(split_holdout(&balanced(5, 5), 1.0, 1).is_err());
        // 0.01 of 5 rounds to 0 in each class
        assert!(split_holdout(&balanced(5, 5), 0.01, 1).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_ratio(pos in 1usize..60, neg in 1usize..60, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let ds = balanced(pos, neg);
            if let Ok((train, test)) = split_holdout(&ds, frac, seed) {
                let tr: HashSet<usize> = train.records().iter().map(|r| r.id).collect();
                let te: HashSet<usize> = test.records().iter().map(|r| r.id).collect();
                prop_assert!(tr.is_disjoint(&te));
                prop_assert_eq!(tr.len() + te.len(), ds.len());
                let exp_pos = frac * pos as f64;
                let exp_neg = frac * neg as f64;
                prop_assert!((test.positive_count() as f64 - exp_pos).abs() <= 1.0);
                prop_assert!((test.negative_count() as f64 - exp_neg).abs() <= 1.0);
            }
        }
    }
}
