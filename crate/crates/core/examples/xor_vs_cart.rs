//! On the XOR grid every single split is useless, so greedy CART stalls at
//! chance while a depth-2 tree trained jointly by gradient descent is exact.

use gdtree::cart::{self, CartConfig};
use gdtree::data::{load_csv, PreprocessModel};
use gdtree::{fit, TrainConfig};

fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

fn main() -> gdtree::Result<()> {
    let raw = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/xor_grid.csv"), "label")?;
    let rows: Vec<usize> = (0..raw.n_rows()).collect();
    let (_, ds) = PreprocessModel::fit(&raw, &rows)?;

    for depth in [1, 2] {
        let tree = cart::build(&ds, &CartConfig { max_depth: depth, ..CartConfig::default() })?;
        println!("CART depth {depth}: accuracy {:.3}", accuracy(&tree.predict_batch(&ds.x), &ds.y));
    }
    let report = fit(&ds, &TrainConfig { depth: 2, ..TrainConfig::default() })?;
    println!(
        "GDT  depth 2: accuracy {:.3}, {} nodes after pruning, best restart {}",
        accuracy(&report.tree.predict_batch(&ds.x), &ds.y),
        report.tree.count_nodes(),
        report.best_restart
    );
    Ok(())
}
