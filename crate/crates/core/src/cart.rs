//! Greedy CART baseline producing a [`VanillaTree`].

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::vanilla::{Leaf, NodeRef, SplitNode, VanillaTree};

/// Gains at or below this are treated as zero.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartConfig {
    pub max_depth: usize,
    pub criterion: Criterion,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            max_depth: 5,
            criterion: Criterion::Gini,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl CartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 || self.min_samples_split < 2 {
            return invalid("CART needs max_depth >= 1, min_samples_leaf >= 1, min_samples_split >= 2");
        }
        Ok(())
    }
}

/// Gini `1 - sum p^2` or entropy `-sum p log2 p` of a class histogram.
pub fn impurity(counts: &[usize], criterion: Criterion) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return invalid("impurity of an empty node");
    }
    Ok(impurity_unchecked(counts, total, criterion))
}

fn impurity_unchecked(counts: &[usize], total: usize, criterion: Criterion) -> f64 {
    let t = total as f64;
    match criterion {
        Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>(),
        Criterion::Entropy => -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / t;
                p * p.log2()
            })
            .sum::<f64>(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best midpoint split of `rows`, or `None` if no split has positive gain
/// while leaving `min_samples_leaf` rows on each side.
///
/// Ties go to the lower feature index, then the lower threshold.
pub fn best_split(ds: &Dataset, rows: &[usize], cfg: &CartConfig) -> Option<Split> {
    let n = rows.len();
    if n < cfg.min_samples_split.max(2) {
        return None;
    }
    let c = ds.n_classes;
    let mut parent = vec![0usize; c];
    for &r in rows {
        parent[ds.y[r]] += 1;
    }
    let parent_imp = impurity_unchecked(&parent, n, cfg.criterion);
    if parent_imp <= 0.0 {
        return None;
    }

    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut below = vec![0usize; c];
    let mut above = vec![0usize; c];
    for f in 0..ds.n_features() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (ds.x.get(r, f), ds.y[r])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        below.fill(0);
        above.copy_from_slice(&parent);
        // `below` holds rows sorted[..i], which go right (x < threshold)
        for i in 1..n {
            let (prev, label) = sorted[i - 1];
            below[label] += 1;
            above[label] -= 1;
            let next = sorted[i].0;
            if next <= prev || i < cfg.min_samples_leaf || n - i < cfg.min_samples_leaf {
                continue;
            }
            let weighted = (i as f64 * impurity_unchecked(&below, i, cfg.criterion)
                + (n - i) as f64 * impurity_unchecked(&above, n - i, cfg.criterion))
                / n as f64;
            let gain = parent_imp - weighted;
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(prev, next),
                    gain,
                });
            }
        }
    }
    best
}

/// Midpoint that still separates `a < b` under `x >= threshold`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a {
        m
    } else {
        b
    }
}

/// Grows a tree greedily from all rows of `ds`.
pub fn build(ds: &Dataset, cfg: &CartConfig) -> Result<VanillaTree> {
    cfg.validate()?;
    ds.validate()?;
    if ds.is_empty() {
        return invalid("CART needs at least one training row");
    }
    let rows: Vec<usize> = (0..ds.len()).collect();
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    let root = grow(ds, cfg, &rows, 0, &mut nodes, &mut leaves);
    VanillaTree::from_parts(ds.n_features(), ds.n_classes, root, nodes, leaves)
}

fn grow(
    ds: &Dataset,
    cfg: &CartConfig,
    rows: &[usize],
    depth: usize,
    nodes: &mut Vec<SplitNode>,
    leaves: &mut Vec<Leaf>,
) -> NodeRef {
    let split = if depth < cfg.max_depth {
        best_split(ds, rows, cfg)
    } else {
        None
    };
    let Some(s) = split else {
        let mut dist = vec![0.0; ds.n_classes];
        for &r in rows {
            dist[ds.y[r]] += 1.0;
        }
        let n = rows.len() as f64;
        dist.iter_mut().for_each(|p| *p /= n);
        leaves.push(Leaf { distribution: dist });
        return NodeRef::Leaf(leaves.len() - 1);
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| ds.x.get(r, s.feature) >= s.threshold);
    let slot = nodes.len();
    nodes.push(SplitNode {
        feature: s.feature,
        threshold: s.threshold,
        left: NodeRef::Leaf(usize::MAX),
        right: NodeRef::Leaf(usize::MAX),
    });
    let left = grow(ds, cfg, &left_rows, depth + 1, nodes, leaves);
    let right = grow(ds, cfg, &right_rows, depth + 1, nodes, leaves);
    nodes[slot].left = left;
    nodes[slot].right = right;
    NodeRef::Node(slot)
}
