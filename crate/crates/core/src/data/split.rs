//! Seeded train / validation / test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{invalid, Result};

pub const TEST_FRACTION: f64 = 0.2;
pub const VALIDATION_FRACTION: f64 = 0.2;
pub const MIN_ROWS: usize = 10;

/// Disjoint row indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Holds out `floor(fraction * n)` rows; returns `(kept, held_out)`.
pub fn train_test_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return invalid(format!("hold-out fraction {fraction} outside [0, 1)"));
    }
    let idx = shuffled(n, seed);
    let held = (fraction * n as f64).floor() as usize;
    Ok((idx[held..].to_vec(), idx[..held].to_vec()))
}

/// 80/20 train/test, then 80/20 of the remainder into train/validation.
pub fn split_indices(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < MIN_ROWS {
        return invalid(format!("need at least {MIN_ROWS} rows to split, got {n}"));
    }
    let idx = shuffled(n, seed);
    let n_test = (TEST_FRACTION * n as f64).floor() as usize;
    let rest = n - n_test;
    let n_val = (VALIDATION_FRACTION * rest as f64).floor() as usize;
    Ok(SplitIndices {
        test: idx[..n_test].to_vec(),
        val: idx[n_test..n_test + n_val].to_vec(),
        train: idx[n_test + n_val..].to_vec(),
    })
}

/// Splits a dataset into `(train, val, test)`.
pub fn split_dataset(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let s = split_indices(ds.len(), seed)?;
    Ok((ds.subset(&s.train), ds.subset(&s.val), ds.subset(&s.test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hundred_rows() {
        let s = split_indices(100, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (64, 16, 20));
        assert_eq!(s, split_indices(100, 3).unwrap());
        assert_ne!(s, split_indices(100, 4).unwrap());
        assert!(split_indices(9, 0).is_err());
    }

    #[test]
    fn hold_out() {
        let (kept, held) = train_test_split(10, 0.25, 1).unwrap();
        assert_eq!((kept.len(), held.len()), (8, 2));
        assert!(train_test_split(10, 1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn partition(n in 10usize..500, seed in any::<u64>()) {
            let s = split_indices(n, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.test.len(), n / 5);
            prop_assert_eq!(s.val.len(), (n - n / 5) / 5);
        }
    }
}
