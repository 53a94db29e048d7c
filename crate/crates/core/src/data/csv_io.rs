use std::collections::BTreeSet;
use std::path::Path;

use crate::data::ColumnKind;
use crate::error::{GdtError, Result};

const MISSING: &[&str] = &["", "NA", "N/A", "NaN", "nan", "?", "null", "NULL", "None"];

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell)
}

/// One input column as read from disk. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub cells: Vec<Option<String>>,
}

impl RawColumn {
    pub fn new(name: impl Into<String>, cells: Vec<Option<String>>) -> Self {
        let kind = infer_kind(&cells);
        Self {
            name: name.into(),
            kind,
            cells,
        }
    }

    /// Cells parsed as numbers; unparseable cells count as missing.
    pub fn numeric(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.as_deref().and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()))
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }
}

fn infer_kind(cells: &[Option<String>]) -> ColumnKind {
    let numeric = cells
        .iter()
        .flatten()
        .all(|s| s.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false));
    if numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

/// Feature columns without labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub n_rows: usize,
    pub columns: Vec<RawColumn>,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Option<&RawColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// Feature table plus integer labels decoded from the target column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub table: RawTable,
    pub target: String,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl RawDataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// Splits a target column off a table.
    pub fn from_table(mut table: RawTable, target: &str) -> Result<Self> {
        let pos = table
            .columns
            .iter()
            .position(|c| c.name == target)
            .ok_or_else(|| GdtError::Data {
                path: String::new(),
                message: format!("target column '{target}' not found"),
            })?;
        let col = table.columns.remove(pos);
        let mut values = Vec::with_capacity(col.cells.len());
        for (i, cell) in col.cells.iter().enumerate() {
            match cell {
                Some(v) => values.push(v.clone()),
                None => {
                    return Err(GdtError::Data {
                        path: String::new(),
                        message: format!("row {} has no value in target column '{target}'", i + 1),
                    })
                }
            }
        }
        let class_names = sorted_classes(&values, col.kind);
        let labels = values
            .iter()
            .map(|v| class_names.iter().position(|c| c == v).expect("class collected above"))
            .collect();
        Ok(Self {
            table,
            target: target.to_string(),
            labels,
            class_names,
        })
    }
}

fn sorted_classes(values: &[String], kind: ColumnKind) -> Vec<String> {
    let distinct: BTreeSet<&String> = values.iter().collect();
    let mut classes: Vec<String> = distinct.into_iter().cloned().collect();
    if kind == ColumnKind::Numeric {
        classes.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    }
    classes
}

/// Reads a headered CSV file into raw columns.
pub fn load_table(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let data_err = |message: String| GdtError::Data {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(data_err("missing header row".into()));
    }
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); header.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(format!("row {}: {e}", i + 2)))?;
        for (col, value) in cells.iter_mut().zip(record.iter()) {
            col.push((!is_missing(value)).then(|| value.to_string()));
        }
    }
    let n_rows = cells.first().map_or(0, Vec::len);
    let columns = header
        .into_iter()
        .zip(cells)
        .map(|(name, cells)| RawColumn::new(name, cells))
        .collect();
    Ok(RawTable { n_rows, columns })
}

/// Reads a headered CSV and decodes `target_column` into class ids.
///
/// Classes are numbered in numeric order when every label parses as a
/// number, lexicographically otherwise.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<RawDataset> {
    let path = path.as_ref();
    let table = load_table(path)?;
    RawDataset::from_table(table, target_column).map_err(|e| match e {
        GdtError::Data { message, .. } => GdtError::Data {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}
