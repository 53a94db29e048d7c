//! Self-contained model files: preprocessing, parameters, the pruned tree
//! and a training summary in one JSON document.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{PreprocessModel, RawTable};
use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;
use crate::trainer::{FitReport, TrainConfig};
use crate::tree::DenseTreeParams;
use crate::vanilla::VanillaTree;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Training outcome without wall-clock data, so files are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub best_restart: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_per_restart: Vec<usize>,
    pub unpruned_nodes: usize,
    pub pruned_nodes: usize,
    pub train_macro_f1: f64,
    pub val_macro_f1: f64,
    pub test_macro_f1: Option<f64>,
}

impl FitSummary {
    pub fn new(report: &FitReport, train_f1: f64, val_f1: f64, test_f1: Option<f64>) -> Self {
        Self {
            best_restart: report.best_restart,
            best_epoch: report.best_epoch,
            best_val_loss: report.best_val_loss,
            epochs_per_restart: report.histories.iter().map(|h| h.epochs.len()).collect(),
            unpruned_nodes: report.unpruned_nodes,
            pruned_nodes: report.tree.count_nodes(),
            train_macro_f1: train_f1,
            val_macro_f1: val_f1,
            test_macro_f1: test_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub target: String,
    pub class_names: Vec<String>,
    pub config: TrainConfig,
    pub preprocess: PreprocessModel,
    pub params: DenseTreeParams,
    pub tree: VanillaTree,
    pub summary: FitSummary,
}

impl ModelFile {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return invalid(format!("unsupported model format version {}", self.format_version));
        }
        self.params.validate()?;
        self.tree.validate()?;
        let n_features = self.preprocess.columns.len();
        if self.tree.n_features != n_features || self.params.n_features != n_features {
            return invalid("model tree and preprocessing disagree on the feature count");
        }
        if self.tree.n_classes != self.class_names.len() {
            return invalid("model tree and class names disagree on the class count");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Schema-checks `table`, transforms it and returns the predicted class
    /// ids with the leaf distributions of the pruned tree.
    pub fn predict_table(&self, table: &RawTable) -> Result<(Vec<usize>, RealMatrix)> {
        self.preprocess.check_schema(table, &[self.target.as_str()])?;
        let x = self.preprocess.transform_table(table)?;
        Ok((self.tree.predict_batch(&x), self.tree.predict_proba_batch(&x)))
    }
}
