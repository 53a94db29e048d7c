//! Synthetic minority oversampling in the transformed feature space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{GdtError, Result};

pub const SMOTE_K: usize = 5;

/// True when the rarest present class holds less than `25 / (c - 1)` percent
/// of the rows.
pub fn needs_rebalance(ds: &Dataset) -> bool {
    if ds.n_classes < 2 || ds.is_empty() {
        return false;
    }
    let counts = ds.class_counts();
    let Some(&min) = counts.iter().filter(|&&c| c > 0).min() else {
        return false;
    };
    let share = min as f64 / ds.len() as f64;
    share < 0.25 / (ds.n_classes - 1) as f64
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Oversamples every present class up to the largest class count.
///
/// Each synthetic row is `x + u (nn - x)` with `x` a random member of the
/// class, `nn` one of its `k` nearest same-class neighbours and `u ~ U(0, 1)`.
pub fn smote_rebalance(ds: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(GdtError::InvalidArgument("SMOTE needs k >= 1".into()));
    }
    let counts = ds.class_counts();
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();

    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == target {
            continue;
        }
        if count < 2 {
            return Err(GdtError::InsufficientMinority { class, count });
        }
        let members: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == class).collect();
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(ds.x.row(i), ds.x.row(j)), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in count..target {
            let m = rng.gen_range(0..members.len());
            let nn = neighbours[m][rng.gen_range(0..neighbours[m].len())];
            let u: f64 = rng.gen();
            let x = ds.x.row(members[m]);
            let row: Vec<f64> = x
                .iter()
                .zip(ds.x.row(nn))
                .map(|(a, b)| a + u * (b - a))
                .collect();
            out.x.push_row(&row)?;
            out.y.push(class);
        }
    }
    Ok(out)
}

/// Applies [`smote_rebalance`] only when [`needs_rebalance`] holds.
pub fn rebalance_if_needed(ds: &Dataset, seed: u64) -> Result<Dataset> {
    if needs_rebalance(ds) {
        smote_rebalance(ds, SMOTE_K, seed)
    } else {
        Ok(ds.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RealMatrix;

    fn dataset(rows: &[[f64; 2]], y: Vec<usize>, c: usize) -> Dataset {
        Dataset::new(RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(), y, c).unwrap()
    }

    #[test]
    fn trigger_threshold() {
        let rows: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, 0.0]).collect();
        let mut y = vec![0; 100];
        for l in y.iter_mut().take(25) {
            *l = 1;
        }
        assert!(!needs_rebalance(&dataset(&rows, y.clone(), 2)));
        y[24] = 0;
        assert!(needs_rebalance(&dataset(&rows, y, 2)));
        // three classes: threshold is 12.5 %
        let mut y3 = vec![0; 100];
        for (i, l) in y3.iter_mut().enumerate() {
            *l = if i < 13 { 2 } else if i < 50 { 1 } else { 0 };
        }
        assert!(!needs_rebalance(&dataset(&rows, y3.clone(), 3)));
        y3[12] = 1;
        assert!(needs_rebalance(&dataset(&rows, y3, 3)));
    }

    #[test]
    fn two_point_minority_stays_on_segment() {
        let mut rows = vec![[1.0, 1.0], [3.0, 2.0]];
        rows.extend((0..10).map(|i| [-(i as f64), 5.0]));
        let mut y = vec![1, 1];
        y.extend(vec![0; 10]);
        let out = smote_rebalance(&dataset(&rows, y, 2), SMOTE_K, 7).unwrap();
        assert_eq!(out.class_counts(), vec![10, 10]);
        for i in 12..out.len() {
            let r = out.x.row(i);
            // on the line through (1,1) and (3,2), between the endpoints
            assert!(((r[0] - 1.0) * 1.0 - (r[1] - 1.0) * 2.0).abs() < 1e-12);
            assert!((1.0..=3.0).contains(&r[0]));
        }
    }

    #[test]
    fn singleton_minority_errors() {
        let rows = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]];
        let err = smote_rebalance(&dataset(&rows, vec![0, 0, 0, 0, 1], 2), SMOTE_K, 0).unwrap_err();
        assert!(matches!(err, GdtError::InsufficientMinority { class: 1, count: 1 }));
    }

    #[test]
    fn deterministic_and_balanced() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [(i * 7 % 11) as f64, (i * 3 % 5) as f64]).collect();
        let y: Vec<usize> = (0..40).map(|i| if i < 4 { 2 } else if i < 12 { 1 } else { 0 }).collect();
        let ds = dataset(&rows, y, 3);
        let a = rebalance_if_needed(&ds, 1).unwrap();
        assert_eq!(a.class_counts(), vec![28, 28, 28]);
        assert_eq!(a, rebalance_if_needed(&ds, 1).unwrap());
        // original rows are kept in place
        assert_eq!(a.subset(&(0..40).collect::<Vec<_>>()), ds);
    }
}
