//! Oversample the minority class with interpolated neighbours.

use gdtree::data::{needs_rebalance, smote_rebalance, Dataset, SMOTE_K};
use gdtree::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gdtree::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..110 {
        let class = usize::from(i >= 100);
        rows.push(vec![rng.gen_range(0.0..1.0) + class as f64, rng.gen_range(0.0..1.0)]);
        y.push(class);
    }
    let ds = Dataset::new(RealMatrix::from_rows(&rows)?, y, 2)?;
    println!("before: {:?}, rebalance needed: {}", ds.class_counts(), needs_rebalance(&ds));

    let out = smote_rebalance(&ds, SMOTE_K, 7)?;
    println!("after:  {:?}", out.class_counts());
    for r in ds.len()..ds.len() + 3 {
        println!("  synthetic minority row {:.3?}", out.x.row(r));
    }
    Ok(())
}
