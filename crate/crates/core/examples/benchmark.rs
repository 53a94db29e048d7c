//! Repeated-split comparison of GDT and CART with ranks and mean reciprocal
//! rank, on the XOR grid and a noisy copy of it.

use gdtree::bench::{aggregate, run_trials, BenchDataset, Learner};
use gdtree::cart::CartConfig;
use gdtree::data::{load_csv, RawColumn};
use gdtree::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gdtree::Result<()> {
    let clean = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/xor_grid.csv"), "label")?;
    let mut noisy = clean.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cells: Vec<Option<String>> = (0..noisy.n_rows()).map(|_| Some(rng.gen::<f64>().to_string())).collect();
    noisy.table.columns.push(RawColumn::new("noise", cells));

    let gdt = TrainConfig { depth: 2, epochs: 300, patience: 50, restarts: 2, ..TrainConfig::default() };
    let cart = CartConfig { max_depth: 2, ..CartConfig::default() };
    let datasets = vec![
        BenchDataset { name: "xor".into(), raw: clean, gdt: gdt.clone(), cart },
        BenchDataset { name: "xor-noise".into(), raw: noisy, gdt, cart },
    ];
    let results = run_trials(&datasets, &[Learner::Gdt, Learner::Cart], 3, 0)?;
    print!("{}", aggregate(&results)?.to_text());
    Ok(())
}
