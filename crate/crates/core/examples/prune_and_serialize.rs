//! Convert dense parameters to a pointer tree, drop branches no training row
//! reaches, and round-trip the result through JSON.

use gdtree::data::xor_grid;
use gdtree::vanilla::{to_vanilla, VanillaTree};
use gdtree::{fit, TrainConfig};

fn main() -> gdtree::Result<()> {
    let ds = xor_grid(20);
    let report = fit(&ds, &TrainConfig { depth: 4, epochs: 200, ..TrainConfig::default() })?;

    let full = to_vanilla(&report.params);
    let pruned = full.prune_zero_branches(&ds.x)?;
    assert_eq!(full.predict_batch(&ds.x), pruned.predict_batch(&ds.x));
    println!("nodes: {} complete, {} pruned", full.count_nodes(), pruned.count_nodes());

    let json = pruned.to_json()?;
    let back = VanillaTree::from_json(&json)?;
    assert_eq!(back, pruned);
    println!("JSON round trip: {} bytes, identical tree", json.len());
    for node in &back.nodes {
        println!("  split: x{} >= {:.4}", node.feature, node.threshold);
    }
    Ok(())
}
