//! The `gdt` command line: train, predict, evaluate, benchmark.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::bench::{aggregate, run_trials, trials_to_jsonl, DatasetList, Learner};
use crate::data::{load_csv, load_table, prepare_split, RawDataset};
use crate::error::{invalid, GdtError, Result};
use crate::loss::LossKind;
use crate::metrics::{accuracy, macro_f1};
use crate::model::{FitSummary, ModelFile, MODEL_FORMAT_VERSION};
use crate::presets::gdt_preset;
use crate::trainer::{train, TrainConfig};

/// Environment variable holding the log filter, e.g. `GDT_LOG=info`.
pub const LOG_ENV: &str = "GDT_LOG";

#[derive(Debug, Parser)]
#[command(name = "gdt", version, about = "Gradient-trained axis-aligned decision trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a tree on a CSV file and write a model file
    Train(TrainArgs),
    /// Predict classes for every row of a CSV file
    Predict(PredictArgs),
    /// Score a model on a labelled CSV file
    Evaluate(EvaluateArgs),
    /// Compare learners over repeated random splits
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Ce,
    Focal,
}

/// Training hyperparameters; unset flags keep the preset / config / default value.
#[derive(Debug, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub lr_index: Option<f64>,
    #[arg(long)]
    pub lr_values: Option<f64>,
    #[arg(long)]
    pub lr_leaf: Option<f64>,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub focal_gamma: Option<f64>,
    /// Enables the polynomial loss term with this coefficient
    #[arg(long)]
    pub poly_epsilon: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

impl HyperArgs {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(depth, lr_index, lr_values, lr_leaf, batch_size, epochs, patience, restarts);
        if let Some(l) = self.loss {
            cfg.loss.kind = match l {
                LossArg::Ce => LossKind::CrossEntropy,
                LossArg::Focal => LossKind::FocalCrossEntropy,
            };
        }
        if let Some(g) = self.focal_gamma {
            cfg.loss.focal_gamma = g;
        }
        if let Some(e) = self.poly_epsilon {
            cfg.loss.poly_enabled = true;
            cfg.loss.poly_epsilon = e;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    /// Output model file
    #[arg(long)]
    pub model: PathBuf,
    /// Start from a published per-dataset configuration
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML file with training configuration fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    /// Write the scores as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// TOML dataset list
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "gdt,cart", value_parser = parse_learner)]
    pub learners: Vec<Learner>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.csv, report.txt and trials.jsonl
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

fn parse_learner(s: &str) -> std::result::Result<Learner, String> {
    s.parse().map_err(|e: GdtError| e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
    }
}

fn read_config(path: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(path).map_err(|e| GdtError::Data {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| GdtError::Config(format!("{}: {e}", path.display())))
}

/// Default, then preset, then config file, then flags.
pub fn resolve_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &a.preset {
        Some(name) => match gdt_preset(name) {
            Some(c) => c,
            None => return invalid(format!("no preset named '{name}'")),
        },
        None => TrainConfig::default(),
    };
    if let Some(path) = &a.config {
        cfg = read_config(path)?;
    }
    a.hyper.apply(&mut cfg);
    cfg.seed = a.seed;
    cfg.validate()?;
    Ok(cfg)
}

/// Trains on a seeded split of a raw dataset and packages the model file.
pub fn train_model(raw: &RawDataset, cfg: &TrainConfig) -> Result<ModelFile> {
    let split = prepare_split(raw, cfg.seed)?;
    let report = train(&split.train, &split.val, cfg)?;
    let c = raw.n_classes();
    let original = split.original_train();
    let f1 = |x, y: &[usize]| macro_f1(&report.tree.predict_batch(x), y, c);
    let train_f1 = f1(&original.x, &original.y)?;
    let val_f1 = f1(&split.val.x, &split.val.y)?;
    let test_f1 = if split.test.is_empty() {
        None
    } else {
        Some(f1(&split.test.x, &split.test.y)?)
    };
    Ok(ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        target: raw.target.clone(),
        class_names: raw.class_names.clone(),
        config: cfg.clone(),
        preprocess: split.preprocess,
        summary: FitSummary::new(&report, train_f1, val_f1, test_f1),
        params: report.params,
        tree: report.tree,
    })
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let raw = load_csv(&a.data, &a.target)?;
    info!("loaded {} rows, {} classes", raw.n_rows(), raw.n_classes());
    let model = train_model(&raw, &cfg)?;
    model.save(&a.model)?;
    let s = &model.summary;
    println!("model written to {}", a.model.display());
    println!(
        "tree: {} nodes after pruning ({} before)",
        s.pruned_nodes, s.unpruned_nodes
    );
    println!("train macro F1: {:.4}", s.train_macro_f1);
    println!("validation macro F1: {:.4}", s.val_macro_f1);
    if let Some(t) = s.test_macro_f1 {
        println!("test macro F1: {t:.4}");
    }
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let table = load_table(&a.data)?;
    let (pred, proba) = model.predict_table(&table)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["prediction".to_string()];
    header.extend(model.class_names.iter().map(|c| format!("p_{c}")));
    w.write_record(&header)?;
    for (r, &p) in pred.iter().enumerate() {
        let mut rec = vec![model.class_names[p].clone()];
        rec.extend(proba.row(r).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| GdtError::Io(e.into_error()))?;
    match &a.out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

/// Maps the labels of `raw` onto the class ids of `model`.
fn model_labels(model: &ModelFile, raw: &RawDataset) -> Result<Vec<usize>> {
    let map: Vec<Option<usize>> = raw
        .class_names
        .iter()
        .map(|n| model.class_names.iter().position(|m| m == n))
        .collect();
    raw.labels
        .iter()
        .map(|&l| {
            map[l].ok_or_else(|| {
                GdtError::InvalidArgument(format!(
                    "class '{}' was not seen during training",
                    raw.class_names[l]
                ))
            })
        })
        .collect()
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let raw = load_csv(&a.data, &a.target)?;
    let labels = model_labels(&model, &raw)?;
    let (pred, _) = model.predict_table(&raw.table)?;
    let f1 = macro_f1(&pred, &labels, model.class_names.len())?;
    let acc = accuracy(&pred, &labels)?;
    println!("rows: {}", labels.len());
    println!("macro F1: {f1:.4}");
    println!("accuracy: {acc:.4}");
    if let Some(path) = &a.out {
        let doc = serde_json::json!({ "rows": labels.len(), "macro_f1": f1, "accuracy": acc });
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    Ok(())
}

fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let list = DatasetList::load(&a.data)?;
    let mut datasets = list.load_datasets()?;
    for d in &mut datasets {
        a.hyper.apply(&mut d.gdt);
        d.gdt.validate()?;
    }
    let mut learners = a.learners.clone();
    learners.sort();
    learners.dedup();
    let results = run_trials(&datasets, &learners, a.trials, a.seed)?;
    let report = aggregate(&results)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), report.to_csv()?)?;
        fs::write(dir.join("report.txt"), &text)?;
        fs::write(dir.join("trials.jsonl"), trials_to_jsonl(&results)?)?;
        println!("reports written to {}", dir.display());
    }
    Ok(())
}
