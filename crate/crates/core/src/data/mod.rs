//! Tabular data: CSV ingestion, preprocessing, splitting and rebalancing.

mod csv_io;
pub mod pipeline;
pub mod preprocess;
pub mod smote;
pub mod split;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;

pub use pipeline::{prepare_split, PreparedSplit};
pub use csv_io::{load_csv, load_table, RawColumn, RawDataset, RawTable};
pub use preprocess::{inverse_normal_cdf, LooEncoding, PreprocessModel, QuantileNormal};
pub use smote::{needs_rebalance, rebalance_if_needed, smote_rebalance, SMOTE_K};
pub use split::{split_dataset, split_indices, train_test_split, SplitIndices};
pub use synthetic::xor_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
}

/// Numeric feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: RealMatrix,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub columns: Vec<ColumnMeta>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset with anonymous numeric columns and classes `0..n_classes`.
    pub fn new(x: RealMatrix, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        let columns = (0..x.cols())
            .map(|i| ColumnMeta {
                name: format!("x{i}"),
                kind: ColumnKind::Numeric,
            })
            .collect();
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        let ds = Self {
            x,
            y,
            n_classes,
            columns,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.rows() != self.y.len() {
            return invalid(format!("{} rows but {} labels", self.x.rows(), self.y.len()));
        }
        if self.columns.len() != self.x.cols() {
            return invalid("column metadata does not match the feature matrix");
        }
        if let Some(&bad) = self.y.iter().find(|&&l| l >= self.n_classes) {
            return invalid(format!("label {bad} out of range for {} classes", self.n_classes));
        }
        if !self.x.is_finite() {
            return invalid("dataset contains non-finite values");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
            columns: self.columns.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }
}
