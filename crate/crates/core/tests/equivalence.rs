mod common;

use common::*;
use gdtree::diff::{argmax, ForwardMode};
use gdtree::matrix::RealMatrix;
use gdtree::tree::tree_pass;
use gdtree::vanilla::{to_vanilla, VanillaTree};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random inputs, a quarter of which sit exactly on some node's threshold.
fn inputs_with_ties(rng: &mut ChaCha8Rng, tree: &VanillaTree, rows: usize, n: usize) -> RealMatrix {
    let mut x = random_matrix(rng, rows, n, 3.0);
    for r in 0..rows {
        if r % 4 == 0 && !tree.nodes.is_empty() {
            let node = &tree.nodes[rng.gen_range(0..tree.nodes.len())];
            x.set(r, node.feature, node.threshold);
        }
    }
    x
}

#[test]
fn hard_pass_equals_pointer_tree_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let (d, n, c) = (rng.gen_range(1..=6), rng.gen_range(2..=20), rng.gen_range(2..=5));
        let p = random_params(&mut rng, d, n, c);
        let tree = to_vanilla(&p);
        let x = inputs_with_ties(&mut rng, &tree, 300, n);
        let dense = tree_pass(&p, &x, ForwardMode::Hard).unwrap();
        for r in 0..x.rows() {
            let leaf = oracle_leaf(&tree, tree.root, x.row(r));
            let expect = &tree.leaves[leaf].distribution;
            assert_eq!(dense.row(r), expect.as_slice());
            assert_eq!(argmax(dense.row(r)), tree.predict(x.row(r)));
        }
    }
}

#[test]
fn pruning_keeps_predictions_and_never_grows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let (d, n, c) = (rng.gen_range(1..=6), rng.gen_range(1..=5), rng.gen_range(2..=4));
        let tree = to_vanilla(&random_params(&mut rng, d, n, c));
        let rows = rng.gen_range(1..60);
        let x = random_matrix(&mut rng, rows, n, 2.0);
        let pruned = tree.prune_zero_branches(&x).unwrap();
        assert!(pruned.count_nodes() <= tree.count_nodes());
        assert_eq!(pruned.predict_batch(&x), tree.predict_batch(&x));
        assert_eq!(pruned.predict_proba_batch(&x), tree.predict_proba_batch(&x));
        // every remaining split sends training rows both ways
        let again = pruned.prune_zero_branches(&x).unwrap();
        assert_eq!(again, pruned);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity_in_hard_mode(seed in any::<u64>(), d in 1usize..6, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng, d, n, 2);
        let x = random_matrix(&mut rng, 16, n, 3.0);
        let cache = gdtree::tree::forward(&p, &x, ForwardMode::Hard).unwrap();
        for b in 0..16 {
            let row = cache.leaf_weights.row(b);
            prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn soft_leaf_weights_sum_to_one(seed in any::<u64>(), d in 1usize..6, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng, d, n, 3);
        let x = random_matrix(&mut rng, 8, n, 3.0);
        let cache = gdtree::tree::forward(&p, &x, ForwardMode::Soft).unwrap();
        for b in 0..8 {
            let s: f64 = cache.leaf_weights.row(b).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = to_vanilla(&random_params(&mut rng, d, 3, 2));
        let back = VanillaTree::from_json(&tree.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &tree);
    }
}
