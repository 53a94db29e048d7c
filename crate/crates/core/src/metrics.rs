//! Classification and ranking metrics.

use crate::error::{invalid, Result};

/// Unweighted mean of per-class F1. A class with no predictions and no
/// positives scores 0.
pub fn macro_f1(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return invalid("macro F1 needs equal, non-empty prediction and label lists");
    }
    if n_classes == 0 || predictions.iter().chain(labels).any(|&l| l >= n_classes) {
        return invalid(format!("labels must lie in 0..{n_classes}"));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let total: f64 = (0..n_classes)
        .map(|k| {
            let denom = 2 * tp[k] + fp[k] + fn_[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / n_classes as f64)
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return invalid("accuracy needs equal, non-empty prediction and label lists");
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Competition ranks (1 = best, ties share the lower rank) of `scores`,
/// higher is better.
pub fn competition_ranks(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|&s| 1 + scores.iter().filter(|&&o| o > s).count())
        .collect()
}

/// Mean of `1 / rank`.
pub fn mean_reciprocal_rank(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return invalid("mean reciprocal rank of an empty list");
    }
    if ranks.contains(&0) {
        return invalid("ranks start at 1");
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap(), 1.0);
        // one hit and one miss per class
        assert_eq!(macro_f1(&[0, 1, 1, 0], &[0, 0, 1, 1], 2).unwrap(), 0.5);
        // everything predicted as class 0 on a balanced set
        let f = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
        // absent class counts as 0
        assert_eq!(macro_f1(&[0, 0], &[0, 0], 2).unwrap(), 0.5);
        assert!(macro_f1(&[], &[], 2).is_err());
        assert!(macro_f1(&[2], &[0], 2).is_err());
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mean_reciprocal_rank(&[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(mean_reciprocal_rank(&[1, 2]).unwrap(), 0.75);
        assert_eq!(mean_reciprocal_rank(&[2, 4]).unwrap(), 0.375);
        assert!(mean_reciprocal_rank(&[]).is_err());
        assert_eq!(competition_ranks(&[0.9, 0.8, 0.9, 0.7]), vec![1, 3, 1, 4]);
    }

    /// Per-class F1 computed from explicit confusion counts.
    fn f1_oracle(p: &[usize], l: &[usize], c: usize) -> f64 {
        (0..c)
            .map(|k| {
                let tp = p.iter().zip(l).filter(|&(&a, &b)| a == k && b == k).count() as f64;
                let pp = p.iter().filter(|&&a| a == k).count() as f64;
                let ap = l.iter().filter(|&&b| b == k).count() as f64;
                if pp + ap == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (pp + ap)
                }
            })
            .sum::<f64>()
            / c as f64
    }

    proptest! {
        #[test]
        fn f1_matches_oracle_and_relabeling(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..80),
            shift in 0usize..4,
        ) {
            let p: Vec<usize> = pairs.iter().map(|x| x.0).collect();
            let l: Vec<usize> = pairs.iter().map(|x| x.1).collect();
            let f = macro_f1(&p, &l, 4).unwrap();
            prop_assert!((f - f1_oracle(&p, &l, 4)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f));
            let rp: Vec<usize> = p.iter().map(|&x| (x + shift) % 4).collect();
            let rl: Vec<usize> = l.iter().map(|&x| (x + shift) % 4).collect();
            prop_assert!((macro_f1(&rp, &rl, 4).unwrap() - f).abs() < 1e-12);
        }

        #[test]
        fn mrr_in_unit_interval(scores in prop::collection::vec(0.0f64..1.0, 1..10)) {
            let ranks = competition_ranks(&scores);
            prop_assert!(ranks.iter().all(|&r| r >= 1 && r <= scores.len()));
            let m = mean_reciprocal_rank(&ranks).unwrap();
            prop_assert!(m > 0.0 && m <= 1.0);
        }
    }
}
