//! Train from a CSV file the way the `gdt train` command does and report the
//! fit. Usage: `cargo run --example train_csv -- [path] [target]`.

use gdtree::cli::train_model;
use gdtree::data::load_csv;
use gdtree::TrainConfig;

fn main() -> gdtree::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/xor_grid.csv").into());
    let target = args.next().unwrap_or_else(|| "label".into());

    let raw = load_csv(&path, &target)?;
    let cfg = TrainConfig { depth: 3, epochs: 300, patience: 50, ..TrainConfig::default() };
    let model = train_model(&raw, &cfg)?;
    let s = &model.summary;
    println!("{} rows, classes {:?}", raw.n_rows(), model.class_names);
    println!("nodes: {} before pruning, {} after", s.unpruned_nodes, s.pruned_nodes);
    println!("macro F1: train {:.3}, validation {:.3}", s.train_macro_f1, s.val_macro_f1);
    if let Some(t) = s.test_macro_f1 {
        println!("macro F1: test {t:.3}");
    }
    Ok(())
}
