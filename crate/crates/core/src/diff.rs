//! Differentiation primitives for the tree pass.
//!
//! Everything here is a pure function of its inputs. Backward rules are
//! written by hand for the fixed graph used by [`crate::tree`]; there is no
//! general tape. The two straight-through (ST) operators, [`hardmax_st`] and
//! [`round_st`], return hard values in the forward pass and have identity
//! backward rules.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;

/// Absolute tolerance on the entmax threshold during bisection.
pub const ENTMAX_TOL: f64 = 1e-8;
/// Iteration cap for the entmax bisection.
pub const ENTMAX_MAX_ITER: usize = 60;
/// Probabilities are clamped into `[PROB_FLOOR, 1 - PROB_FLOOR]` before logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Whether the ST corrections are applied during the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForwardMode {
    /// Hardmax over the feature distribution and rounded splits.
    Hard,
    /// The fully differentiable surrogate: entmax weights and logistic splits.
    Soft,
}

/// Gradients of a scalar loss with respect to the three parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GradTriple {
    pub d_index: RealMatrix,
    pub d_threshold: RealMatrix,
    pub d_leaf: RealMatrix,
}

impl GradTriple {
    pub fn zeros_like(index: &RealMatrix, threshold: &RealMatrix, leaf: &RealMatrix) -> Self {
        Self {
            d_index: RealMatrix::zeros(index.rows(), index.cols()),
            d_threshold: RealMatrix::zeros(threshold.rows(), threshold.cols()),
            d_leaf: RealMatrix::zeros(leaf.rows(), leaf.cols()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_index.is_finite() && self.d_threshold.is_finite() && self.d_leaf.is_finite()
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{what}: empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid(format!("{what}: non-finite entry"));
    }
    Ok(())
}

/// 1.5-entmax: `p_i = [z_i/2 - tau]_+^2` with `tau` chosen so that `p` sums to one.
///
/// `tau` is bracketed in `[max(z)/2 - 1, max(z)/2]` and bisected; once the
/// support is known it is re-solved in closed form, which is exact up to
/// rounding.
pub fn entmax15(logits: &[f64]) -> Result<Vec<f64>> {
    check_finite(logits, "entmax15")?;
    let mut out = vec![0.0; logits.len()];
    entmax15_into(logits, &mut out);
    Ok(out)
}

pub(crate) fn entmax15_into(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // shifted half-logits, all <= 0 with the maximum at exactly 0
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max) * 0.5;
    }
    let mass = |tau: f64, a: &[f64]| -> f64 {
        a.iter()
            .map(|&ai| {
                let d = ai - tau;
                if d > 0.0 {
                    d * d
                } else {
                    0.0
                }
            })
            .sum()
    };

    let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
    for _ in 0..ENTMAX_MAX_ITER {
        if hi - lo < ENTMAX_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mass(mid, out) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = 0.5 * (lo + hi);

    // closed-form threshold on the detected support
    let (mut k, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &a in out.iter() {
        if a > tau {
            k += 1.0;
            s1 += a;
            s2 += a * a;
        }
    }
    let disc = s1 * s1 - k * (s2 - 1.0);
    if k > 0.0 && disc >= 0.0 {
        let exact = (s1 - disc.sqrt()) / k;
        let consistent = out
            .iter()
            .all(|&a| if a > tau { a > exact } else { a <= exact });
        if consistent {
            tau = exact;
        }
    }

    let mut total = 0.0;
    for o in out.iter_mut() {
        let d = *o - tau;
        *o = if d > 0.0 { d * d } else { 0.0 };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Vector-Jacobian product of 1.5-entmax at output `p`.
///
/// With `s_i = sqrt(p_i)` on the support and zero elsewhere, the Jacobian is
/// `diag(s) - s s^T / sum(s)`; it is symmetric so `J^T g = J g`.
pub fn entmax15_vjp(output: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if output.len() != upstream.len() {
        return invalid(format!(
            "entmax15_vjp: output has length {}, upstream {}",
            output.len(),
            upstream.len()
        ));
    }
    let mut out = vec![0.0; output.len()];
    entmax15_vjp_into(output, upstream, &mut out);
    Ok(out)
}

pub(crate) fn entmax15_vjp_into(output: &[f64], upstream: &[f64], out: &mut [f64]) {
    let mut sum_s = 0.0;
    let mut dot = 0.0;
    for (&p, &g) in output.iter().zip(upstream) {
        if p > 0.0 {
            let s = p.sqrt();
            sum_s += s;
            dot += s * g;
        }
    }
    let ratio = if sum_s > 0.0 { dot / sum_s } else { 0.0 };
    for ((o, &p), &g) in out.iter_mut().zip(output).zip(upstream) {
        *o = if p > 0.0 {
            let s = p.sqrt();
            s * g - s * ratio
        } else {
            0.0
        };
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Forward pass of the hardmax ST operator: a one-hot vector at [`argmax`].
///
/// The backward rule is the identity, so callers route the upstream gradient
/// of the one-hot output straight to the input (see [`st_backward`]).
pub fn hardmax_st(v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v, "hardmax")?;
    let mut out = vec![0.0; v.len()];
    out[argmax(v)] = 1.0;
    Ok(out)
}

/// Forward pass of the rounding ST operator. Half rounds up.
pub fn round_st(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return invalid(format!("round_st: {s} is outside [0, 1]"));
    }
    Ok(if s >= 0.5 { 1.0 } else { 0.0 })
}

/// Backward rule shared by both ST operators.
#[inline]
pub fn st_backward(upstream: f64) -> f64 {
    upstream
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function given its output `y`.
#[inline]
pub fn sigmoid_grad(y: f64) -> f64 {
    y * (1.0 - y)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_inplace(&mut out);
    out
}

pub(crate) fn softmax_inplace(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// `J^T g` for softmax at output `p`: `p * (g - <g, p>)`.
pub fn softmax_vjp(p: &[f64], upstream: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(upstream).map(|(a, b)| a * b).sum();
    p.iter().zip(upstream).map(|(pi, gi)| pi * (gi - dot)).collect()
}
