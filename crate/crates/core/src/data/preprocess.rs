//! Preprocessing fitted on training rows only: median/mode imputation,
//! leave-one-out target encoding of categorical columns, and a quantile
//! transform that maps every column onto a standard normal.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnMeta, Dataset, RawColumn, RawDataset, RawTable};
use crate::error::{invalid, GdtError, Result};
use crate::matrix::RealMatrix;

/// Quantiles are clipped into `[QUANTILE_CLIP, 1 - QUANTILE_CLIP]` before inversion.
pub const QUANTILE_CLIP: f64 = 1e-7;

/// Inverse of the standard normal CDF.
///
/// Rational approximation of P. J. Acklam; relative error below 1.15e-9
/// over the open unit interval.
pub fn inverse_normal_cdf(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;

    if q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if q >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |p: f64| {
        let r = (-2.0 * p.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if q < LOW {
        tail(q)
    } else if q > 1.0 - LOW {
        -tail(1.0 - q)
    } else {
        let r = q - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    }
}

/// Empirical-quantile to standard-normal mapping for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileNormal {
    /// sorted training values
    pub references: Vec<f64>,
}

impl QuantileNormal {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return invalid("quantile transform needs at least one value");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("quantile transform got non-finite values");
        }
        let mut references = values.to_vec();
        references.sort_by(f64::total_cmp);
        Ok(Self { references })
    }

    fn is_constant(&self) -> bool {
        self.references.first() == self.references.last()
    }

    /// Position of `v` in the training distribution, in `[0, 1]`.
    ///
    /// Values equal to one or more references get the midpoint of their
    /// rank range; values between references are interpolated linearly.
    pub fn quantile(&self, v: f64) -> f64 {
        let r = &self.references;
        let n = r.len();
        if n == 1 || self.is_constant() {
            return 0.5;
        }
        let last = (n - 1) as f64;
        if v <= r[0] {
            return if v < r[0] { 0.0 } else { upper_rank(r, v) as f64 / 2.0 / last };
        }
        if v >= r[n - 1] {
            return if v > r[n - 1] {
                1.0
            } else {
                (lower_rank(r, v) + n - 1) as f64 / 2.0 / last
            };
        }
        let lo = lower_rank(r, v);
        if r[lo] == v {
            let hi = upper_rank(r, v);
            (lo + hi) as f64 / 2.0 / last
        } else {
            // r[lo - 1] < v < r[lo]
            let (a, b) = (r[lo - 1], r[lo]);
            ((lo - 1) as f64 + (v - a) / (b - a)) / last
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        let q = self.quantile(v).clamp(QUANTILE_CLIP, 1.0 - QUANTILE_CLIP);
        inverse_normal_cdf(q)
    }
}

/// first index with `r[i] >= v`
fn lower_rank(r: &[f64], v: f64) -> usize {
    r.partition_point(|&x| x < v)
}

/// last index with `r[i] <= v`
fn upper_rank(r: &[f64], v: f64) -> usize {
    r.partition_point(|&x| x <= v) - 1
}

/// Leave-one-out target means per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooEncoding {
    /// category -> (sum of targets, count) over training rows
    pub table: BTreeMap<String, (f64, usize)>,
    pub global_mean: f64,
}

impl LooEncoding {
    /// Fits on training rows and returns their encoded values: each row gets
    /// the mean target of the *other* rows in its category, singletons get
    /// the global mean.
    pub fn fit(categories: &[String], targets: &[f64]) -> Result<(Self, Vec<f64>)> {
        if categories.len() != targets.len() || categories.is_empty() {
            return invalid("leave-one-out encoding needs matching, non-empty categories and targets");
        }
        let mut table: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (c, &t) in categories.iter().zip(targets) {
            let e = table.entry(c.clone()).or_insert((0.0, 0));
            e.0 += t;
            e.1 += 1;
        }
        let global_mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let encoded = categories
            .iter()
            .zip(targets)
            .map(|(c, &t)| {
                let (sum, count) = table[c];
                if count > 1 {
                    (sum - t) / (count - 1) as f64
                } else {
                    global_mean
                }
            })
            .collect();
        Ok((Self { table, global_mean }, encoded))
    }

    /// Encoding for rows outside the fitting set.
    pub fn apply(&self, category: &str) -> f64 {
        match self.table.get(category) {
            Some(&(sum, count)) if count > 1 => sum / count as f64,
            _ => self.global_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    Numeric(f64),
    Category(String),
}

/// Median of the present numeric values, `None` if all are missing.
pub fn fit_numeric_imputer(values: &[Option<f64>]) -> Option<f64> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    present.sort_by(f64::total_cmp);
    let n = present.len();
    Some(if n % 2 == 1 {
        present[n / 2]
    } else {
        0.5 * (present[n / 2 - 1] + present[n / 2])
    })
}

/// Most frequent category (ties: lexicographically first), `None` if all are missing.
pub fn fit_category_imputer(values: &[Option<String>]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values.iter().flatten() {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (k, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k.to_string())
}

pub fn impute_numeric(values: &[Option<f64>], fill: f64) -> Vec<f64> {
    values.iter().map(|v| v.unwrap_or(fill)).collect()
}

pub fn impute_categories(values: &[Option<String>], fill: &str) -> Vec<String> {
    values
        .iter()
        .map(|v| v.clone().unwrap_or_else(|| fill.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub imputation: Imputation,
    pub encoding: Option<LooEncoding>,
    pub quantiles: QuantileNormal,
}

impl FittedColumn {
    fn raw_values(&self, col: &RawColumn, rows: &[usize]) -> Vec<f64> {
        match (&self.imputation, &self.encoding) {
            (Imputation::Numeric(fill), _) => {
                let num = col.numeric();
                rows.iter().map(|&r| num[r].unwrap_or(*fill)).collect()
            }
            (Imputation::Category(fill), Some(enc)) => rows
                .iter()
                .map(|&r| enc.apply(col.cells[r].as_deref().unwrap_or(fill)))
                .collect(),
            (Imputation::Category(_), None) => unreachable!("categorical column without encoding"),
        }
    }
}

/// Every statistic needed to turn raw columns into model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessModel {
    pub columns: Vec<FittedColumn>,
    /// columns with no value in any training row
    pub dropped: Vec<String>,
}

impl PreprocessModel {
    /// Fits on `train_rows` of `raw` and returns the transformed training rows.
    pub fn fit(raw: &RawDataset, train_rows: &[usize]) -> Result<(Self, Dataset)> {
        if train_rows.is_empty() {
            return invalid("preprocessing needs at least one training row");
        }
        let targets: Vec<f64> = train_rows.iter().map(|&r| raw.labels[r] as f64).collect();
        let mut columns = Vec::new();
        let mut dropped = Vec::new();
        let mut transformed: Vec<Vec<f64>> = Vec::new();

        for col in &raw.table.columns {
            let (imputation, encoding, values) = match col.kind {
                ColumnKind::Numeric => {
                    let num = col.numeric();
                    let train: Vec<Option<f64>> = train_rows.iter().map(|&r| num[r]).collect();
                    match fit_numeric_imputer(&train) {
                        Some(fill) => (Imputation::Numeric(fill), None, impute_numeric(&train, fill)),
                        None => {
                            warn!("dropping column '{}': no values in the training rows", col.name);
                            dropped.push(col.name.clone());
                            continue;
                        }
                    }
                }
                ColumnKind::Categorical => {
                    let train: Vec<Option<String>> =
                        train_rows.iter().map(|&r| col.cells[r].clone()).collect();
                    match fit_category_imputer(&train) {
                        Some(fill) => {
                            let cats = impute_categories(&train, &fill);
                            let (enc, values) = LooEncoding::fit(&cats, &targets)?;
                            (Imputation::Category(fill), Some(enc), values)
                        }
                        None => {
                            warn!("dropping column '{}': no values in the training rows", col.name);
                            dropped.push(col.name.clone());
                            continue;
                        }
                    }
                }
            };
            let quantiles = QuantileNormal::fit(&values)?;
            transformed.push(values.iter().map(|&v| quantiles.apply(v)).collect());
            columns.push(FittedColumn {
                name: col.name.clone(),
                kind: col.kind,
                imputation,
                encoding,
                quantiles,
            });
        }
        if columns.is_empty() {
            return invalid("no usable feature columns");
        }
        let model = Self { columns, dropped };
        let x = columns_to_matrix(&transformed, train_rows.len())?;
        let ds = model.wrap(raw, x, train_rows)?;
        Ok((model, ds))
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_meta(&self) -> Vec<ColumnMeta> {
        self.columns
            .iter()
            .map(|c| ColumnMeta {
                name: c.name.clone(),
                kind: c.kind,
            })
            .collect()
    }

    /// Checks that `table` carries exactly the fitted columns; `ignore` lists
    /// names that may be present without being features (e.g. the target).
    pub fn check_schema(&self, table: &RawTable, ignore: &[&str]) -> Result<()> {
        let missing: Vec<String> = self
            .columns
            .iter()
            .filter(|c| table.column(&c.name).is_none())
            .map(|c| c.name.clone())
            .collect();
        let extra: Vec<String> = table
            .columns
            .iter()
            .filter(|c| {
                !self.columns.iter().any(|f| f.name == c.name)
                    && !self.dropped.contains(&c.name)
                    && !ignore.contains(&c.name.as_str())
            })
            .map(|c| c.name.clone())
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(GdtError::Schema { missing, extra })
        }
    }

    /// Transforms selected rows of a table, matching columns by name.
    pub fn transform_rows(&self, table: &RawTable, rows: &[usize]) -> Result<RealMatrix> {
        let mut transformed = Vec::with_capacity(self.columns.len());
        for fc in &self.columns {
            let col = table.column(&fc.name).ok_or_else(|| GdtError::Schema {
                missing: vec![fc.name.clone()],
                extra: vec![],
            })?;
            if let Some(&r) = rows.iter().find(|&&r| r >= col.cells.len()) {
                return invalid(format!("row {r} out of range"));
            }
            let raw = fc.raw_values(col, rows);
            transformed.push(raw.iter().map(|&v| fc.quantiles.apply(v)).collect());
        }
        columns_to_matrix(&transformed, rows.len())
    }

    pub fn transform_table(&self, table: &RawTable) -> Result<RealMatrix> {
        let rows: Vec<usize> = (0..table.n_rows).collect();
        self.transform_rows(table, &rows)
    }

    /// Transforms rows of a labelled dataset that were not used for fitting.
    pub fn transform(&self, raw: &RawDataset, rows: &[usize]) -> Result<Dataset> {
        let x = self.transform_rows(&raw.table, rows)?;
        self.wrap(raw, x, rows)
    }

    fn wrap(&self, raw: &RawDataset, x: RealMatrix, rows: &[usize]) -> Result<Dataset> {
        let ds = Dataset {
            x,
            y: rows.iter().map(|&r| raw.labels[r]).collect(),
            n_classes: raw.n_classes(),
            columns: self.column_meta(),
            class_names: raw.class_names.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }
}

fn columns_to_matrix(cols: &[Vec<f64>], n_rows: usize) -> Result<RealMatrix> {
    let mut data = Vec::with_capacity(n_rows * cols.len());
    for r in 0..n_rows {
        for c in cols {
            data.push(c[r]);
        }
    }
    RealMatrix::from_vec(n_rows, cols.len(), data)
}
