#![allow(dead_code)]

use gdtree::diff::{entmax15, sigmoid, softmax, ForwardMode, GradTriple};
use gdtree::loss::{batch_loss, LossConfig};
use gdtree::matrix::RealMatrix;
use gdtree::tree::{tree_pass, DenseTreeParams};
use gdtree::vanilla::{NodeRef, VanillaTree};
use rand::Rng;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> RealMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
    RealMatrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_params<R: Rng>(rng: &mut R, d: usize, n: usize, c: usize) -> DenseTreeParams {
    let internal = (1 << d) - 1;
    DenseTreeParams::new(
        d,
        n,
        c,
        random_matrix(rng, internal, n, 2.0),
        random_matrix(rng, internal, n, 1.5),
        random_matrix(rng, 1 << d, c, 3.0),
    )
    .unwrap()
}

/// Leaf reached by `x`, by plain recursion over the pointer tree.
pub fn oracle_leaf(tree: &VanillaTree, at: NodeRef, x: &[f64]) -> usize {
    match at {
        NodeRef::Leaf(i) => i,
        NodeRef::Node(i) => {
            let n = &tree.nodes[i];
            let next = if x[n.feature] >= n.threshold { n.left } else { n.right };
            oracle_leaf(tree, next, x)
        }
    }
}

pub fn params_loss(p: &DenseTreeParams, x: &RealMatrix, y: &[usize], mode: ForwardMode, loss: &LossConfig) -> f64 {
    batch_loss(&tree_pass(p, x, mode).unwrap(), y, loss).unwrap()
}

/// Gradient of the mean loss by the chain rule written out per sample,
/// leaf and node, with explicit products instead of prefix/suffix sweeps.
pub fn naive_gradient(
    p: &DenseTreeParams,
    x: &RealMatrix,
    y: &[usize],
    mode: ForwardMode,
    loss: &LossConfig,
) -> GradTriple {
    let (d, n, c) = (p.depth, p.n_features, p.n_classes);
    let internal = (1 << d) - 1;
    let leaves = 1 << d;
    let mut g = GradTriple::zeros_like(&p.index, &p.threshold, &p.leaf);
    let weights: Vec<Vec<f64>> = (0..internal).map(|k| entmax15(p.index.row(k)).unwrap()).collect();
    let select: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| match mode {
            ForwardMode::Soft => w.clone(),
            ForwardMode::Hard => {
                let mut best = 0;
                for i in 1..w.len() {
                    if w[i] > w[best] {
                        best = i;
                    }
                }
                (0..w.len()).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
            }
        })
        .collect();
    let mut d_select = vec![vec![0.0; n]; internal];
    let b_count = x.rows() as f64;

    for b in 0..x.rows() {
        let xb = x.row(b);
        let z: Vec<f64> = (0..internal)
            .map(|k| (0..n).map(|i| select[k][i] * xb[i]).sum::<f64>() - (0..n).map(|i| select[k][i] * p.threshold.get(k, i)).sum::<f64>())
            .collect();
        let soft: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let used: Vec<f64> = match mode {
            ForwardMode::Soft => soft.clone(),
            ForwardMode::Hard => z.iter().map(|&v| if v >= 0.0 { 1.0 } else { 0.0 }).collect(),
        };
        // path of leaf l: node at level j and whether it takes the S branch
        let path = |l: usize| -> Vec<(usize, bool)> {
            (1..=d)
                .map(|j| {
                    let node = (1 << (j - 1)) + (l >> (d - j + 1)) - 1;
                    let bit = (l >> (d - j)) & 1;
                    (node, bit == 0)
                })
                .collect()
        };
        let factor = |k: usize, takes_s: bool| if takes_s { used[k] } else { 1.0 - used[k] };
        let mut logits = vec![0.0; c];
        let mut leaf_p = vec![0.0; leaves];
        for l in 0..leaves {
            leaf_p[l] = path(l).iter().map(|&(k, s)| factor(k, s)).product();
            for cc in 0..c {
                logits[cc] += leaf_p[l] * p.leaf.get(l, cc);
            }
        }
        let probs = softmax(&logits);
        let pt = probs[y[b]];
        let dl_dp = loss.dloss_dp(pt) / b_count;
        // softmax backward for an upstream that is non-zero only at the label
        let dlogits: Vec<f64> = (0..c)
            .map(|cc| dl_dp * pt * (if cc == y[b] { 1.0 } else { 0.0 } - probs[cc]))
            .collect();
        let mut d_used = vec![0.0; internal];
        for l in 0..leaves {
            let dp_l: f64 = (0..c).map(|cc| dlogits[cc] * p.leaf.get(l, cc)).sum();
            for cc in 0..c {
                g.d_leaf.set(l, cc, g.d_leaf.get(l, cc) + dlogits[cc] * leaf_p[l]);
            }
            let pl = path(l);
            for (j, &(k, s)) in pl.iter().enumerate() {
                let others: f64 = pl
                    .iter()
                    .enumerate()
                    .filter(|&(jj, _)| jj != j)
                    .map(|(_, &(kk, ss))| factor(kk, ss))
                    .product();
                d_used[k] += dp_l * others * if s { 1.0 } else { -1.0 };
            }
        }
        for k in 0..internal {
            let dz = d_used[k] * soft[k] * (1.0 - soft[k]);
            for i in 0..n {
                d_select[k][i] += dz * (xb[i] - p.threshold.get(k, i));
                g.d_threshold.set(k, i, g.d_threshold.get(k, i) - dz * select[k][i]);
            }
        }
    }
    // entmax Jacobian, built explicitly
    for k in 0..internal {
        let s: Vec<f64> = weights[k].iter().map(|&w| if w > 0.0 { w.sqrt() } else { 0.0 }).collect();
        let total: f64 = s.iter().sum();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                let jac = if i == j { s[i] } else { 0.0 } - s[i] * s[j] / total;
                acc += jac * d_select[k][j];
            }
            g.d_index.set(k, i, acc);
        }
    }
    g
}

/// True when every entmax row keeps its support under `±h` on any logit.
pub fn entmax_support_stable(p: &DenseTreeParams, h: f64) -> bool {
    (0..p.index.rows()).all(|k| {
        let row = p.index.row(k).to_vec();
        let base: Vec<bool> = entmax15(&row).unwrap().iter().map(|&v| v > 0.0).collect();
        (0..row.len()).all(|i| {
            [h, -h].iter().all(|&dh| {
                let mut r = row.clone();
                r[i] += dh;
                entmax15(&r).unwrap().iter().map(|&v| v > 0.0).collect::<Vec<_>>() == base
            })
        })
    })
}

pub struct GradCheck {
    pub checked: usize,
    pub worst_rel: f64,
    pub worst_abs_small: f64,
}

/// Central differences of the soft-mode loss against an analytic gradient.
pub fn finite_difference_check(
    p: &DenseTreeParams,
    x: &RealMatrix,
    y: &[usize],
    loss: &LossConfig,
    analytic: &GradTriple,
    h: f64,
) -> GradCheck {
    let mut out = GradCheck {
        checked: 0,
        worst_rel: 0.0,
        worst_abs_small: 0.0,
    };
    let f = |q: &DenseTreeParams| params_loss(q, x, y, ForwardMode::Soft, loss);
    for which in 0..3 {
        let (rows, cols) = match which {
            0 => p.index.shape(),
            1 => p.threshold.shape(),
            _ => p.leaf.shape(),
        };
        for r in 0..rows {
            for col in 0..cols {
                let bump = |delta: f64| {
                    let mut q = p.clone();
                    let m = match which {
                        0 => &mut q.index,
                        1 => &mut q.threshold,
                        _ => &mut q.leaf,
                    };
                    m.set(r, col, m.get(r, col) + delta);
                    f(&q)
                };
                let numeric = (bump(h) - bump(-h)) / (2.0 * h);
                let a = match which {
                    0 => analytic.d_index.get(r, col),
                    1 => analytic.d_threshold.get(r, col),
                    _ => analytic.d_leaf.get(r, col),
                };
                if a.abs() < 1e-8 {
                    out.worst_abs_small = out.worst_abs_small.max((a - numeric).abs());
                } else {
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
                    out.worst_rel = out.worst_rel.max(rel);
                }
                out.checked += 1;
            }
        }
    }
    out
}
