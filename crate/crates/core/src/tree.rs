//! Dense balanced-tree representation and the batched tree pass.
//!
//! Internal nodes are numbered breadth-first from the root (`0`), so node `k`
//! has children `2k + 1` and `2k + 2`. Leaves are numbered left to right.
//! A split value of `1` (feature `>=` threshold) selects the *left* child,
//! i.e. the lower-numbered leaves.

use serde::{Deserialize, Serialize};

use crate::diff::{
    argmax, entmax15_into, entmax15_vjp_into, sigmoid, sigmoid_grad, softmax_inplace,
    softmax_vjp, st_backward, ForwardMode, GradTriple,
};
use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;

pub const MAX_DEPTH: usize = 12;

/// Trainable parameters of a depth-`d` tree.
///
/// * `index`: `(2^d - 1) x n` feature-selection logits, one row per internal node
/// * `threshold`: `(2^d - 1) x n` per-feature split thresholds
/// * `leaf`: `2^d x c` leaf class logits
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTreeParams {
    pub depth: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub index: RealMatrix,
    pub threshold: RealMatrix,
    pub leaf: RealMatrix,
}

fn check_dims(depth: usize, n_features: usize, n_classes: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return invalid(format!("depth must be in 1..={MAX_DEPTH}, got {depth}"));
    }
    if n_features == 0 {
        return invalid("tree needs at least one feature");
    }
    if n_classes < 2 {
        return invalid(format!("tree needs at least two classes, got {n_classes}"));
    }
    Ok(())
}

impl DenseTreeParams {
    pub fn new(
        depth: usize,
        n_features: usize,
        n_classes: usize,
        index: RealMatrix,
        threshold: RealMatrix,
        leaf: RealMatrix,
    ) -> Result<Self> {
        let p = Self {
            depth,
            n_features,
            n_classes,
            index,
            threshold,
            leaf,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(depth: usize, n_features: usize, n_classes: usize) -> Result<Self> {
        check_dims(depth, n_features, n_classes)?;
        let internal = (1 << depth) - 1;
        Ok(Self {
            depth,
            n_features,
            n_classes,
            index: RealMatrix::zeros(internal, n_features),
            threshold: RealMatrix::zeros(internal, n_features),
            leaf: RealMatrix::zeros(1 << depth, n_classes),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(self.depth, self.n_features, self.n_classes)?;
        let internal = self.n_internal();
        let expect = [
            ("index", &self.index, (internal, self.n_features)),
            ("threshold", &self.threshold, (internal, self.n_features)),
            ("leaf", &self.leaf, (self.n_leaves(), self.n_classes)),
        ];
        for (name, m, shape) in expect {
            if m.shape() != shape {
                return invalid(format!("{name} matrix is {:?}, expected {shape:?}", m.shape()));
            }
            if !m.is_finite() {
                return invalid(format!("{name} matrix has non-finite entries"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_internal(&self) -> usize {
        (1 << self.depth) - 1
    }

    #[inline]
    pub fn n_leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn is_finite(&self) -> bool {
        self.index.is_finite() && self.threshold.is_finite() && self.leaf.is_finite()
    }

    /// Entmax feature distribution for every internal node.
    pub fn feature_weights(&self) -> RealMatrix {
        let mut w = RealMatrix::zeros(self.n_internal(), self.n_features);
        for k in 0..self.n_internal() {
            entmax15_into(self.index.row(k), w.row_mut(k));
        }
        w
    }

    /// Hard feature index per internal node: the argmax of its entmax row.
    pub fn split_features(&self) -> Vec<usize> {
        let w = self.feature_weights();
        (0..self.n_internal()).map(|k| argmax(w.row(k))).collect()
    }
}

fn check_leaf_depth(l: usize, j: usize, d: usize) -> Result<()> {
    if d == 0 || d > MAX_DEPTH {
        return invalid(format!("depth {d} out of range"));
    }
    if l >= 1 << d {
        return invalid(format!("leaf {l} out of range for depth {d}"));
    }
    if j == 0 || j > d {
        return invalid(format!("level {j} out of range 1..={d}"));
    }
    Ok(())
}

/// Breadth-first id of the level-`j` ancestor of leaf `l` (levels start at 1).
pub fn node_index(l: usize, j: usize, d: usize) -> Result<usize> {
    check_leaf_depth(l, j, d)?;
    Ok((1 << (j - 1)) + (l >> (d - (j - 1))) - 1)
}

/// 0 when the path to leaf `l` takes the left branch at level `j`, 1 for right.
pub fn path_bit(l: usize, j: usize, d: usize) -> Result<u8> {
    check_leaf_depth(l, j, d)?;
    Ok(((l >> (d - j)) & 1) as u8)
}

/// Precomputed `node_index` / `path_bit` tables, `[leaf * depth + (level - 1)]`.
#[derive(Debug, Clone)]
pub struct LeafRouting {
    pub depth: usize,
    pub nodes: Vec<usize>,
    pub bits: Vec<u8>,
}

impl LeafRouting {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return invalid(format!("depth {depth} out of range"));
        }
        let leaves = 1usize << depth;
        let mut nodes = Vec::with_capacity(leaves * depth);
        let mut bits = Vec::with_capacity(leaves * depth);
        for l in 0..leaves {
            for j in 1..=depth {
                nodes.push(node_index(l, j, depth)?);
                bits.push(path_bit(l, j, depth)?);
            }
        }
        Ok(Self { depth, nodes, bits })
    }

    #[inline]
    pub fn path(&self, leaf: usize) -> (&[usize], &[u8]) {
        let s = leaf * self.depth;
        (&self.nodes[s..s + self.depth], &self.bits[s..s + self.depth])
    }
}

fn split_logit(x: &[f64], iota_row: &[f64], tau_row: &[f64]) -> Result<f64> {
    if x.len() != iota_row.len() || x.len() != tau_row.len() {
        return invalid(format!(
            "split: lengths x={}, iota={}, tau={} differ",
            x.len(),
            iota_row.len(),
            tau_row.len()
        ));
    }
    let sx: f64 = iota_row.iter().zip(x).map(|(a, b)| a * b).sum();
    let st: f64 = iota_row.iter().zip(tau_row).map(|(a, b)| a * b).sum();
    Ok(sx - st)
}

/// Logistic split `S(<iota, x> - <iota, tau>)`.
pub fn split_soft(x: &[f64], iota_row: &[f64], tau_row: &[f64]) -> Result<f64> {
    Ok(sigmoid(split_logit(x, iota_row, tau_row)?))
}

/// Rounded logistic split.
///
/// Rounding is evaluated on the logit (`S(z) >= 0.5` exactly when `z >= 0`)
/// so that a one-hot `iota_row` reproduces `x_i >= tau_i` bit for bit, even
/// where `S(z)` itself would round to `0.5` in floating point.
pub fn split_hard(x: &[f64], iota_row: &[f64], tau_row: &[f64]) -> Result<f64> {
    Ok(hard_from_logit(split_logit(x, iota_row, tau_row)?))
}

#[inline]
fn hard_from_logit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Membership of a single sample in leaf `l`: the product of the split
/// factors along the leaf's path.
pub fn leaf_indicator(
    x: &[f64],
    l: usize,
    params: &DenseTreeParams,
    mode: ForwardMode,
) -> Result<f64> {
    if l >= params.n_leaves() {
        return invalid(format!("leaf {l} out of range (tree has {})", params.n_leaves()));
    }
    if x.len() != params.n_features {
        return invalid(format!("sample has {} features, tree expects {}", x.len(), params.n_features));
    }
    let select = node_selection(params, mode);
    let mut p = 1.0;
    for j in 1..=params.depth {
        let k = node_index(l, j, params.depth)?;
        let z = split_logit(x, select.row(k), params.threshold.row(k))?;
        let s = match mode {
            ForwardMode::Hard => hard_from_logit(z),
            ForwardMode::Soft => sigmoid(z),
        };
        p *= if path_bit(l, j, params.depth)? == 0 { s } else { 1.0 - s };
    }
    Ok(p)
}

/// Forward feature-selection weights: entmax rows, hardened in `Hard` mode.
fn node_selection(params: &DenseTreeParams, mode: ForwardMode) -> RealMatrix {
    let mut w = params.feature_weights();
    if mode == ForwardMode::Hard {
        for k in 0..w.rows() {
            let row = w.row_mut(k);
            let best = argmax(row);
            row.fill(0.0);
            row[best] = 1.0;
        }
    }
    w
}

/// Activations of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct PassCache {
    pub mode: ForwardMode,
    /// entmax output per internal node
    pub weights: RealMatrix,
    /// forward selection (one-hot in `Hard` mode)
    pub select: RealMatrix,
    /// logistic split values, `batch x internal`
    pub soft_splits: RealMatrix,
    /// split values used in the forward pass, `batch x internal`
    pub splits: RealMatrix,
    /// leaf indicators, `batch x leaves`
    pub leaf_weights: RealMatrix,
    /// class probabilities, `batch x classes`
    pub probs: RealMatrix,
}

fn check_batch(params: &DenseTreeParams, x: &RealMatrix) -> Result<()> {
    if x.cols() != params.n_features {
        return invalid(format!(
            "batch has {} features, tree expects {}",
            x.cols(),
            params.n_features
        ));
    }
    if !x.is_finite() {
        return invalid("batch contains non-finite values");
    }
    Ok(())
}

/// Class probabilities for every row of `x`.
pub fn tree_pass(params: &DenseTreeParams, x: &RealMatrix, mode: ForwardMode) -> Result<RealMatrix> {
    Ok(forward(params, x, mode)?.probs)
}

/// Full forward pass over a batch.
pub fn forward(params: &DenseTreeParams, x: &RealMatrix, mode: ForwardMode) -> Result<PassCache> {
    check_batch(params, x)?;
    let routing = LeafRouting::new(params.depth)?;
    Ok(forward_with(params, &routing, x, mode))
}

pub(crate) fn forward_with(
    params: &DenseTreeParams,
    routing: &LeafRouting,
    x: &RealMatrix,
    mode: ForwardMode,
) -> PassCache {
    let internal = params.n_internal();
    let leaves = params.n_leaves();
    let c = params.n_classes;
    let d = params.depth;
    let batch = x.rows();

    let weights = params.feature_weights();
    let select = match mode {
        ForwardMode::Soft => weights.clone(),
        ForwardMode::Hard => {
            let mut s = weights.clone();
            for k in 0..internal {
                let row = s.row_mut(k);
                let best = argmax(row);
                row.fill(0.0);
                row[best] = 1.0;
            }
            s
        }
    };
    // <iota_k, tau_k> per node
    let offsets: Vec<f64> = (0..internal)
        .map(|k| dot(select.row(k), params.threshold.row(k)))
        .collect();

    let mut soft_splits = RealMatrix::zeros(batch, internal);
    let mut splits = RealMatrix::zeros(batch, internal);
    let mut leaf_weights = RealMatrix::zeros(batch, leaves);
    let mut probs = RealMatrix::zeros(batch, c);

    for b in 0..batch {
        let xb = x.row(b);
        let ss = soft_splits.row_mut(b);
        for k in 0..internal {
            ss[k] = dot(select.row(k), xb) - offsets[k];
        }
        let hs = splits.row_mut(b);
        for k in 0..internal {
            let z = ss[k];
            ss[k] = sigmoid(z);
            hs[k] = match mode {
                ForwardMode::Hard => hard_from_logit(z),
                ForwardMode::Soft => ss[k],
            };
        }
        let hs = splits.row(b);
        let lw = leaf_weights.row_mut(b);
        let yb = probs.row_mut(b);
        for l in 0..leaves {
            let (nodes, bits) = routing.path(l);
            let mut p = 1.0;
            for j in 0..d {
                let h = hs[nodes[j]];
                p *= if bits[j] == 0 { h } else { 1.0 - h };
            }
            lw[l] = p;
            for (y, &v) in yb.iter_mut().zip(params.leaf.row(l)) {
                *y += v * p;
            }
        }
        softmax_inplace(yb);
    }

    PassCache {
        mode,
        weights,
        select,
        soft_splits,
        splits,
        leaf_weights,
        probs,
    }
}

/// Backward pass: gradients of `sum_b <dprobs_b, probs_b>` w.r.t. the parameters.
///
/// The ST operators pass gradients straight through, so this is the soft
/// chain rule evaluated at whatever activations the forward pass produced.
pub fn backward(
    params: &DenseTreeParams,
    x: &RealMatrix,
    cache: &PassCache,
    dprobs: &RealMatrix,
) -> Result<GradTriple> {
    check_batch(params, x)?;
    if dprobs.shape() != cache.probs.shape() {
        return invalid("upstream gradient shape does not match the forward pass");
    }
    let routing = LeafRouting::new(params.depth)?;
    Ok(backward_with(params, &routing, x, cache, dprobs))
}

pub(crate) fn backward_with(
    params: &DenseTreeParams,
    routing: &LeafRouting,
    x: &RealMatrix,
    cache: &PassCache,
    dprobs: &RealMatrix,
) -> GradTriple {
    let internal = params.n_internal();
    let leaves = params.n_leaves();
    let n = params.n_features;
    let d = params.depth;

    let mut grads = GradTriple::zeros_like(&params.index, &params.threshold, &params.leaf);
    // gradient w.r.t. the forward selection weights
    let mut d_select = RealMatrix::zeros(internal, n);
    let mut d_split = vec![0.0; internal];
    let mut prefix = vec![0.0; d + 1];
    let mut suffix = vec![0.0; d + 1];
    let mut factors = vec![0.0; d];

    for b in 0..x.rows() {
        let dy = softmax_vjp(cache.probs.row(b), dprobs.row(b));
        let lw = cache.leaf_weights.row(b);
        let hs = cache.splits.row(b);
        d_split.fill(0.0);

        for l in 0..leaves {
            let p = lw[l];
            let leaf_row = params.leaf.row(l);
            let mut dp = 0.0;
            let dl = grads.d_leaf.row_mut(l);
            for ((g, &dyc), &v) in dl.iter_mut().zip(&dy).zip(leaf_row) {
                *g += dyc * p;
                dp += dyc * v;
            }
            if dp == 0.0 {
                continue;
            }
            let (nodes, bits) = routing.path(l);
            for j in 0..d {
                let h = hs[nodes[j]];
                factors[j] = if bits[j] == 0 { h } else { 1.0 - h };
            }
            prefix[0] = 1.0;
            for j in 0..d {
                prefix[j + 1] = prefix[j] * factors[j];
            }
            suffix[d] = 1.0;
            for j in (0..d).rev() {
                suffix[j] = suffix[j + 1] * factors[j];
            }
            for j in 0..d {
                let others = prefix[j] * suffix[j + 1];
                let sign = if bits[j] == 0 { 1.0 } else { -1.0 };
                d_split[nodes[j]] += dp * others * sign;
            }
        }

        let xb = x.row(b);
        let ss = cache.soft_splits.row(b);
        for k in 0..internal {
            if d_split[k] == 0.0 {
                continue;
            }
            // rounding is straight-through, then the logistic derivative
            let dz = st_backward(d_split[k]) * sigmoid_grad(ss[k]);
            let sel = cache.select.row(k);
            let tau = params.threshold.row(k);
            let ds = d_select.row_mut(k);
            for i in 0..n {
                ds[i] += dz * (xb[i] - tau[i]);
            }
            let dt = grads.d_threshold.row_mut(k);
            for i in 0..n {
                dt[i] -= dz * sel[i];
            }
        }
    }

    // hardmax is straight-through; then back through entmax
    for k in 0..internal {
        let upstream: Vec<f64> = d_select.row(k).iter().map(|&g| st_backward(g)).collect();
        entmax15_vjp_into(cache.weights.row(k), &upstream, grads.d_index.row_mut(k));
    }
    grads
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
