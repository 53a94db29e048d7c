//! Pointer-style decision trees: the interpretable form of a trained model
//! and the output format of the CART baseline.

use serde::{Deserialize, Serialize};

use crate::diff::{argmax, softmax};
use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;
use crate::tree::DenseTreeParams;

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum NodeRef {
    Node(usize),
    Leaf(usize),
}

/// Axis-aligned test. Samples with `x[feature] >= threshold` go `left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: NodeRef,
    pub right: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanillaTree {
    pub format_version: u32,
    pub depth: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub root: NodeRef,
    pub nodes: Vec<SplitNode>,
    pub leaves: Vec<Leaf>,
}

impl VanillaTree {
    /// Builds a tree from arena parts, computing its depth and checking every
    /// reference.
    pub fn from_parts(
        n_features: usize,
        n_classes: usize,
        root: NodeRef,
        nodes: Vec<SplitNode>,
        leaves: Vec<Leaf>,
    ) -> Result<Self> {
        let mut t = Self {
            format_version: TREE_FORMAT_VERSION,
            depth: 0,
            n_features,
            n_classes,
            root,
            nodes,
            leaves,
        };
        t.depth = t.validate_structure()?;
        Ok(t)
    }

    /// A single-leaf tree.
    pub fn leaf(n_features: usize, distribution: Vec<f64>) -> Result<Self> {
        let c = distribution.len();
        Self::from_parts(n_features, c, NodeRef::Leaf(0), vec![], vec![Leaf { distribution }])
    }

    /// Checks references, leaf distributions and the recorded depth.
    pub fn validate(&self) -> Result<()> {
        let depth = self.validate_structure()?;
        if depth != self.depth {
            return invalid(format!("recorded depth {} but the tree has depth {depth}", self.depth));
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<usize> {
        if self.format_version != TREE_FORMAT_VERSION {
            return invalid(format!("unsupported tree format version {}", self.format_version));
        }
        let mut seen_nodes = vec![false; self.nodes.len()];
        let mut seen_leaves = vec![false; self.leaves.len()];
        let mut max_depth = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((r, depth)) = stack.pop() {
            match r {
                NodeRef::Leaf(i) => {
                    let Some(leaf) = self.leaves.get(i) else {
                        return invalid(format!("leaf reference {i} out of range"));
                    };
                    if std::mem::replace(&mut seen_leaves[i], true) {
                        return invalid(format!("leaf {i} referenced twice"));
                    }
                    if leaf.distribution.len() != self.n_classes {
                        return invalid(format!("leaf {i} has {} classes", leaf.distribution.len()));
                    }
                    let sum: f64 = leaf.distribution.iter().sum();
                    if leaf.distribution.iter().any(|p| !p.is_finite() || *p < 0.0)
                        || (sum - 1.0).abs() > 1e-9
                    {
                        return invalid(format!("leaf {i} distribution is not on the simplex"));
                    }
                    max_depth = max_depth.max(depth);
                }
                NodeRef::Node(i) => {
                    let Some(node) = self.nodes.get(i) else {
                        return invalid(format!("node reference {i} out of range"));
                    };
                    if std::mem::replace(&mut seen_nodes[i], true) {
                        return invalid(format!("node {i} referenced twice"));
                    }
                    if node.feature >= self.n_features || !node.threshold.is_finite() {
                        return invalid(format!("node {i} has an invalid split"));
                    }
                    stack.push((node.left, depth + 1));
                    stack.push((node.right, depth + 1));
                }
            }
        }
        Ok(max_depth)
    }

    /// Leaf reached by `x`.
    pub fn route(&self, x: &[f64]) -> usize {
        let mut r = self.root;
        loop {
            match r {
                NodeRef::Leaf(i) => return i,
                NodeRef::Node(i) => {
                    let n = &self.nodes[i];
                    r = if x[n.feature] >= n.threshold { n.left } else { n.right };
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> &[f64] {
        &self.leaves[self.route(x)].distribution
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(self.predict_proba(x))
    }

    pub fn predict_batch(&self, x: &RealMatrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    pub fn predict_proba_batch(&self, x: &RealMatrix) -> RealMatrix {
        let mut out = RealMatrix::zeros(x.rows(), self.n_classes);
        for (b, r) in x.iter_rows().enumerate() {
            out.row_mut(b).copy_from_slice(self.predict_proba(r));
        }
        out
    }

    /// Total number of nodes reachable from the root, internal plus leaves.
    pub fn count_nodes(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self.root];
        while let Some(r) = stack.pop() {
            count += 1;
            if let NodeRef::Node(i) = r {
                stack.push(self.nodes[i].left);
                stack.push(self.nodes[i].right);
            }
        }
        count
    }

    /// Replaces every split that sends no training sample down one branch by
    /// the other branch, bottom-up.
    pub fn prune_zero_branches(&self, x_train: &RealMatrix) -> Result<VanillaTree> {
        if x_train.rows() == 0 {
            return invalid("pruning needs at least one training sample");
        }
        if x_train.cols() != self.n_features {
            return invalid(format!(
                "pruning data has {} features, tree expects {}",
                x_train.cols(),
                self.n_features
            ));
        }
        let mut node_hits = vec![0usize; self.nodes.len()];
        let mut leaf_hits = vec![0usize; self.leaves.len()];
        for x in x_train.iter_rows() {
            let mut r = self.root;
            loop {
                match r {
                    NodeRef::Leaf(i) => {
                        leaf_hits[i] += 1;
                        break;
                    }
                    NodeRef::Node(i) => {
                        node_hits[i] += 1;
                        let n = &self.nodes[i];
                        r = if x[n.feature] >= n.threshold { n.left } else { n.right };
                    }
                }
            }
        }
        let hits = |r: NodeRef| match r {
            NodeRef::Node(i) => node_hits[i],
            NodeRef::Leaf(i) => leaf_hits[i],
        };

        let mut nodes = Vec::new();
        let mut leaves = Vec::new();
        let root = self.rebuild(self.root, &hits, &mut nodes, &mut leaves);
        VanillaTree::from_parts(self.n_features, self.n_classes, root, nodes, leaves)
    }

    fn rebuild(
        &self,
        r: NodeRef,
        hits: &dyn Fn(NodeRef) -> usize,
        nodes: &mut Vec<SplitNode>,
        leaves: &mut Vec<Leaf>,
    ) -> NodeRef {
        match r {
            NodeRef::Leaf(i) => {
                leaves.push(self.leaves[i].clone());
                NodeRef::Leaf(leaves.len() - 1)
            }
            NodeRef::Node(i) => {
                let n = &self.nodes[i];
                if hits(n.left) == 0 {
                    return self.rebuild(n.right, hits, nodes, leaves);
                }
                if hits(n.right) == 0 {
                    return self.rebuild(n.left, hits, nodes, leaves);
                }
                let slot = nodes.len();
                nodes.push(SplitNode {
                    feature: n.feature,
                    threshold: n.threshold,
                    left: NodeRef::Leaf(usize::MAX),
                    right: NodeRef::Leaf(usize::MAX),
                });
                let left = self.rebuild(n.left, hits, nodes, leaves);
                let right = self.rebuild(n.right, hits, nodes, leaves);
                nodes[slot].left = left;
                nodes[slot].right = right;
                NodeRef::Node(slot)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut t: VanillaTree = serde_json::from_str(s)?;
        let depth = t.validate_structure()?;
        t.depth = depth;
        Ok(t)
    }
}

/// Hardens dense parameters: each internal node keeps the argmax feature of
/// its entmax row and that feature's threshold; leaves keep `softmax(L_l)`.
pub fn to_vanilla(params: &DenseTreeParams) -> VanillaTree {
    let internal = params.n_internal();
    let features = params.split_features();
    let child = |k: usize| {
        if k < internal {
            NodeRef::Node(k)
        } else {
            NodeRef::Leaf(k - internal)
        }
    };
    let nodes = (0..internal)
        .map(|k| SplitNode {
            feature: features[k],
            threshold: params.threshold.get(k, features[k]),
            left: child(2 * k + 1),
            right: child(2 * k + 2),
        })
        .collect();
    let leaves = (0..params.n_leaves())
        .map(|l| Leaf {
            distribution: softmax(params.leaf.row(l)),
        })
        .collect();
    VanillaTree {
        format_version: TREE_FORMAT_VERSION,
        depth: params.depth,
        n_features: params.n_features,
        n_classes: params.n_classes,
        root: NodeRef::Node(0),
        nodes,
        leaves,
    }
}
