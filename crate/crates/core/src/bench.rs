//! Repeated-split comparison of learners across datasets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::cart::{self, CartConfig};
use crate::data::{load_csv, prepare_split, PreparedSplit, RawDataset};
use crate::error::{invalid, GdtError, Result};
use crate::metrics::{accuracy, competition_ranks, macro_f1, mean_reciprocal_rank};
use crate::presets::{cart_preset, gdt_preset};
use crate::trainer::{self, FitReport, TrainConfig};
use crate::vanilla::VanillaTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Gdt,
    Cart,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Gdt => "gdt",
            Learner::Cart => "cart",
        }
    }
}

impl FromStr for Learner {
    type Err = GdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gdt" => Ok(Learner::Gdt),
            "cart" => Ok(Learner::Cart),
            other => invalid(format!("unknown learner '{other}' (expected gdt or cart)")),
        }
    }
}

/// A loaded dataset with the configuration each learner uses on it.
#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub name: String,
    pub raw: RawDataset,
    pub gdt: TrainConfig,
    pub cart: CartConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub learner: Learner,
    pub dataset: String,
    pub trial: usize,
    pub seed: u64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub tree_size: usize,
    pub train_macro_f1: f64,
    pub fit_seconds: f64,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// What a learner produced on one trial, for callers that inspect models.
#[derive(Debug, Clone)]
pub enum Fitted {
    Gdt(Box<FitReport>),
    Cart(VanillaTree),
}

impl Fitted {
    pub fn tree(&self) -> &VanillaTree {
        match self {
            Fitted::Gdt(r) => &r.tree,
            Fitted::Cart(t) => t,
        }
    }
}

/// Fits `learner` on a prepared split and scores it on the test rows.
pub fn fit_and_score(
    learner: Learner,
    ds: &BenchDataset,
    split: &PreparedSplit,
    trial: usize,
    seed: u64,
) -> Result<(TrialResult, Fitted)> {
    let start = Instant::now();
    let fitted = match learner {
        Learner::Gdt => {
            let cfg = TrainConfig {
                seed,
                ..ds.gdt.clone()
            };
            Fitted::Gdt(Box::new(trainer::train(&split.train, &split.val, &cfg)?))
        }
        Learner::Cart => Fitted::Cart(cart::build(&split.train, &ds.cart)?),
    };
    let fit_seconds = start.elapsed().as_secs_f64();
    let tree = fitted.tree();
    let n_classes = ds.raw.n_classes();
    let test_pred = tree.predict_batch(&split.test.x);
    let original = split.original_train();
    let train_pred = tree.predict_batch(&original.x);
    let result = TrialResult {
        learner,
        dataset: ds.name.clone(),
        trial,
        seed,
        macro_f1: macro_f1(&test_pred, &split.test.y, n_classes)?,
        accuracy: accuracy(&test_pred, &split.test.y)?,
        tree_size: tree.count_nodes(),
        train_macro_f1: macro_f1(&train_pred, &original.y, n_classes)?,
        fit_seconds,
        error: None,
    };
    Ok((result, fitted))
}

fn failed(learner: Learner, dataset: &str, trial: usize, seed: u64, e: &GdtError) -> TrialResult {
    warn!("{} on {dataset}, trial {trial}: {e}", learner.name());
    TrialResult {
        learner,
        dataset: dataset.to_string(),
        trial,
        seed,
        macro_f1: f64::NAN,
        accuracy: f64::NAN,
        tree_size: 0,
        train_macro_f1: f64::NAN,
        fit_seconds: 0.0,
        error: Some(e.to_string()),
    }
}

/// Runs every learner on `trials` fresh splits of every dataset.
///
/// Trial `t` uses seed `seed + t` for the split, rebalancing and training.
/// Failures are recorded in the results and never abort the run.
pub fn run_trials(
    datasets: &[BenchDataset],
    learners: &[Learner],
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialResult>> {
    if trials == 0 || learners.is_empty() || datasets.is_empty() {
        return invalid("benchmark needs at least one dataset, learner and trial");
    }
    let mut results = Vec::new();
    for ds in datasets {
        for trial in 0..trials {
            let trial_seed = seed.wrapping_add(trial as u64);
            let split = prepare_split(&ds.raw, trial_seed);
            for &learner in learners {
                let r = match &split {
                    Ok(split) => fit_and_score(learner, ds, split, trial, trial_seed)
                        .map(|(r, _)| r)
                        .unwrap_or_else(|e| failed(learner, &ds.name, trial, trial_seed, &e)),
                    Err(e) => failed(learner, &ds.name, trial, trial_seed, e),
                };
                results.push(r);
            }
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub learner: Learner,
    pub dataset: String,
    pub trials: usize,
    pub failures: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub train_f1_mean: f64,
    /// train minus test macro F1
    pub gap_mean: f64,
    pub tree_size_mean: f64,
    pub fit_seconds_mean: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub learner: Learner,
    pub f1_mean: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub cells: Vec<CellSummary>,
    pub learners: Vec<LearnerSummary>,
}

/// `(mean, sample standard deviation)`; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregates trial results. Cells are ordered by dataset name, then
/// learner; a cell whose trials all failed has NaN means and ranks last.
pub fn aggregate(results: &[TrialResult]) -> Result<BenchmarkReport> {
    if results.is_empty() {
        return invalid("no trial results to aggregate");
    }
    let mut groups: BTreeMap<(String, Learner), Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.dataset.clone(), r.learner)).or_default().push(r);
    }
    let mut cells = Vec::new();
    for ((dataset, learner), rs) in &groups {
        let ok: Vec<&&TrialResult> = rs.iter().filter(|r| r.ok()).collect();
        let col = |f: fn(&TrialResult) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let (f1_mean, f1_std) = mean_std(&col(|r| r.macro_f1));
        let (accuracy_mean, accuracy_std) = mean_std(&col(|r| r.accuracy));
        let (train_f1_mean, _) = mean_std(&col(|r| r.train_macro_f1));
        let (gap_mean, _) = mean_std(&col(|r| r.train_macro_f1 - r.macro_f1));
        let (tree_size_mean, _) = mean_std(&col(|r| r.tree_size as f64));
        let (fit_seconds_mean, _) = mean_std(&col(|r| r.fit_seconds));
        cells.push(CellSummary {
            learner: *learner,
            dataset: dataset.clone(),
            trials: rs.len(),
            failures: rs.len() - ok.len(),
            f1_mean,
            f1_std,
            accuracy_mean,
            accuracy_std,
            train_f1_mean,
            gap_mean,
            tree_size_mean,
            fit_seconds_mean,
            rank: 0,
        });
    }

    let mut datasets: Vec<String> = cells.iter().map(|c| c.dataset.clone()).collect();
    datasets.dedup();
    let mut ranks_by_learner: BTreeMap<Learner, Vec<usize>> = BTreeMap::new();
    let mut f1_by_learner: BTreeMap<Learner, Vec<f64>> = BTreeMap::new();
    for d in &datasets {
        let idx: Vec<usize> = (0..cells.len()).filter(|&i| &cells[i].dataset == d).collect();
        let scores: Vec<f64> = idx
            .iter()
            .map(|&i| if cells[i].f1_mean.is_nan() { f64::NEG_INFINITY } else { cells[i].f1_mean })
            .collect();
        for (&i, rank) in idx.iter().zip(competition_ranks(&scores)) {
            cells[i].rank = rank;
            ranks_by_learner.entry(cells[i].learner).or_default().push(rank);
            if !cells[i].f1_mean.is_nan() {
                f1_by_learner.entry(cells[i].learner).or_default().push(cells[i].f1_mean);
            }
        }
    }
    let learners = ranks_by_learner
        .iter()
        .map(|(&learner, ranks)| {
            Ok(LearnerSummary {
                learner,
                f1_mean: f1_by_learner.get(&learner).map_or(f64::NAN, |v| mean_std(v).0),
                mrr: mean_reciprocal_rank(ranks)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport { cells, learners })
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "learner",
            "trials",
            "failures",
            "f1_mean",
            "f1_std",
            "accuracy_mean",
            "accuracy_std",
            "train_f1_mean",
            "gap_mean",
            "tree_size_mean",
            "fit_seconds_mean",
            "rank",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.dataset.clone(),
                c.learner.name().to_string(),
                c.trials.to_string(),
                c.failures.to_string(),
                format!("{:.6}", c.f1_mean),
                format!("{:.6}", c.f1_std),
                format!("{:.6}", c.accuracy_mean),
                format!("{:.6}", c.accuracy_std),
                format!("{:.6}", c.train_f1_mean),
                format!("{:.6}", c.gap_mean),
                format!("{:.2}", c.tree_size_mean),
                format!("{:.3}", c.fit_seconds_mean),
                c.rank.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| GdtError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned plain-text table followed by per-learner summaries.
    pub fn to_text(&self) -> String {
        let header = ["dataset", "learner", "macro F1", "train-test", "size", "rank", "fail"];
        let rows: Vec<[String; 7]> = self
            .cells
            .iter()
            .map(|c| {
                [
                    c.dataset.clone(),
                    c.learner.name().to_string(),
                    format!("{:.3} ± {:.3}", c.f1_mean, c.f1_std),
                    format!("{:.3}", c.gap_mean),
                    format!("{:.1}", c.tree_size_mean),
                    c.rank.to_string(),
                    c.failures.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| {
                    let pad = w - c.chars().count();
                    if i < 2 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header.map(String::from), &mut out);
        for r in &rows {
            line(r, &mut out);
        }
        out.push('\n');
        for l in &self.learners {
            let _ = writeln!(out, "{}: mean macro F1 {:.3}, MRR {:.3}", l.learner.name(), l.f1_mean, l.mrr);
        }
        out
    }
}

/// One JSON object per line.
pub fn trials_to_jsonl(results: &[TrialResult]) -> Result<String> {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Entry of a dataset list file.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    pub target: String,
    /// preset key; defaults to `name`
    pub preset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct DatasetList {
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
}

impl DatasetList {
    /// Parses a TOML list; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut list: DatasetList = toml::from_str(text).map_err(|e| GdtError::Config(e.to_string()))?;
        for d in &mut list.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        Ok(list)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GdtError::Data {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads every CSV and attaches presets (defaults where none exist).
    pub fn load_datasets(&self) -> Result<Vec<BenchDataset>> {
        self.datasets
            .iter()
            .map(|e| {
                let key = e.preset.as_deref().unwrap_or(&e.name);
                Ok(BenchDataset {
                    name: e.name.clone(),
                    raw: load_csv(&e.path, &e.target)?,
                    gdt: gdt_preset(key).unwrap_or_default(),
                    cart: cart_preset(key).unwrap_or_default(),
                })
            })
            .collect()
    }
}
