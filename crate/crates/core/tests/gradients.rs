mod common;

use common::*;
use gdtree::diff::ForwardMode;
use gdtree::loss::{batch_loss_grad, LossConfig};
use gdtree::tree::{backward, forward};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn analytic(
    p: &gdtree::tree::DenseTreeParams,
    x: &gdtree::RealMatrix,
    y: &[usize],
    mode: ForwardMode,
    loss: &LossConfig,
) -> gdtree::diff::GradTriple {
    let cache = forward(p, x, mode).unwrap();
    let (_, dprobs) = batch_loss_grad(&cache.probs, y, loss).unwrap();
    backward(p, x, &cache, &dprobs).unwrap()
}

fn max_diff(a: &gdtree::diff::GradTriple, b: &gdtree::diff::GradTriple) -> f64 {
    [(&a.d_index, &b.d_index), (&a.d_threshold, &b.d_threshold), (&a.d_leaf, &b.d_leaf)]
        .iter()
        .flat_map(|(m, n)| m.as_slice().iter().zip(n.as_slice()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn backward_matches_naive_chain_rule_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let losses = [LossConfig::default(), LossConfig::focal(3.0), LossConfig::focal(2.0).with_poly(5.0)];
    for case in 0..60 {
        let (d, n, c) = (rng.gen_range(1..=4), rng.gen_range(1..=6), rng.gen_range(2..=4));
        let p = random_params(&mut rng, d, n, c);
        let x = random_matrix(&mut rng, 12, n, 2.0);
        let y: Vec<usize> = (0..12).map(|_| rng.gen_range(0..c)).collect();
        let loss = &losses[case % losses.len()];
        for mode in [ForwardMode::Hard, ForwardMode::Soft] {
            let fast = analytic(&p, &x, &y, mode, loss);
            let slow = naive_gradient(&p, &x, &y, mode, loss);
            assert!(max_diff(&fast, &slow) < 1e-12, "case {case} {mode:?}: {}", max_diff(&fast, &slow));
        }
    }
}

#[test]
fn soft_gradients_match_finite_differences_for_every_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let losses = [LossConfig::default(), LossConfig::focal(3.0), LossConfig::default().with_poly(2.0)];
    let mut trees = 0;
    while trees < 30 {
        let (d, n, c) = (rng.gen_range(1..=3), rng.gen_range(1..=5), rng.gen_range(2..=3));
        let p = random_params(&mut rng, d, n, c);
        if !entmax_support_stable(&p, 1e-4) {
            continue;
        }
        let x = random_matrix(&mut rng, 6, n, 2.0);
        let y: Vec<usize> = (0..6).map(|_| rng.gen_range(0..c)).collect();
        let loss = &losses[trees % losses.len()];
        let g = analytic(&p, &x, &y, ForwardMode::Soft, loss);
        let chk = finite_difference_check(&p, &x, &y, loss, &g, 1e-4);
        assert!(chk.worst_rel <= 1e-4, "tree {trees}: relative error {}", chk.worst_rel);
        assert!(chk.worst_abs_small <= 1e-8, "tree {trees}: absolute error {}", chk.worst_abs_small);
        trees += 1;
    }
}

#[test]
fn hard_gradient_is_soft_chain_rule_at_hard_activations() {
    // a fully decided tree: one-hot-like entmax rows and far-away thresholds
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut p = random_params(&mut rng, 2, 3, 2);
    for k in 0..3 {
        for i in 0..3 {
            p.index.set(k, i, if i == k { 10.0 } else { 0.0 });
        }
    }
    let x = random_matrix(&mut rng, 8, 3, 1.0);
    let y: Vec<usize> = (0..8).map(|i| i % 2).collect();
    let hard = analytic(&p, &x, &y, ForwardMode::Hard, &LossConfig::default());
    assert!(hard.is_finite());
    // leaf gradients only flow into reached leaves
    let cache = forward(&p, &x, ForwardMode::Hard).unwrap();
    for l in 0..4 {
        let reached = (0..8).any(|b| cache.leaf_weights.get(b, l) == 1.0);
        let nonzero = hard.d_leaf.row(l).iter().any(|&g| g != 0.0);
        assert_eq!(reached, nonzero, "leaf {l}");
    }
}
