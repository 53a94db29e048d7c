//! Published per-dataset hyperparameters for both learners.

use crate::cart::{CartConfig, Criterion};
use crate::loss::{LossConfig, LossKind};
use crate::trainer::TrainConfig;

pub const FOCAL_GAMMA: f64 = 3.0;

/// `(name, depth, lr_index, lr_values, lr_leaf, focal, poly, poly_epsilon)`
const GDT_ROWS: &[(&str, usize, f64, f64, f64, bool, bool, f64)] = &[
    ("Blood Transfusion", 8, 0.01, 0.1, 0.01, false, false, 2.0),
    ("Banknote Authentication", 7, 0.05, 0.05, 0.1, true, true, 2.0),
    ("Titanic", 10, 0.005, 0.01, 0.01, false, false, 2.0),
    ("Raisins", 10, 0.005, 0.005, 0.1, false, true, 5.0),
    ("Rice", 7, 0.05, 0.01, 0.01, false, false, 2.0),
    ("Echocardiogram", 8, 0.01, 0.05, 0.1, false, true, 5.0),
    ("Wisconsin Diagnostic Breast Cancer", 10, 0.05, 0.01, 0.1, false, true, 2.0),
    ("Loan House", 8, 0.005, 0.1, 0.01, true, false, 2.0),
    ("Heart Failure", 10, 0.005, 0.25, 0.1, false, false, 2.0),
    ("Heart Disease", 9, 0.01, 0.05, 0.005, true, false, 2.0),
    ("Adult", 8, 0.05, 0.005, 0.05, false, true, 5.0),
    ("Bank Marketing", 8, 0.25, 0.25, 0.05, false, false, 2.0),
    ("Cervical Cancer", 8, 0.005, 0.01, 0.1, false, true, 2.0),
    ("Congressional Voting", 10, 0.005, 0.05, 0.01, true, true, 5.0),
    ("Absenteeism", 10, 0.05, 0.01, 0.05, true, true, 5.0),
    ("Hepatitis", 10, 0.005, 0.05, 0.01, true, true, 5.0),
    ("German", 7, 0.005, 0.05, 0.01, false, true, 2.0),
    ("Mushroom", 9, 0.01, 0.01, 0.05, true, false, 2.0),
    ("Credit Card", 8, 0.05, 0.1, 0.01, true, false, 2.0),
    ("Horse Colic", 8, 0.25, 0.25, 0.01, true, false, 2.0),
    ("Thyroid", 8, 0.01, 0.01, 0.05, false, false, 2.0),
    ("Spambase", 10, 0.005, 0.01, 0.01, false, false, 2.0),
    ("Iris", 7, 0.005, 0.005, 0.05, false, false, 2.0),
    ("Balance Scale", 8, 0.05, 0.01, 0.1, false, true, 5.0),
    ("Car", 9, 0.01, 0.01, 0.01, true, false, 2.0),
    ("Glass", 10, 0.05, 0.05, 0.05, true, true, 5.0),
    ("Contraceptive", 7, 0.01, 0.05, 0.01, false, false, 2.0),
    ("Solar Flare", 8, 0.005, 0.01, 0.2, true, true, 2.0),
    ("Wine", 10, 0.01, 0.05, 0.01, true, false, 2.0),
    ("Zoo", 9, 0.05, 0.01, 0.1, true, true, 2.0),
    ("Lymphography", 8, 0.05, 0.01, 0.05, false, true, 2.0),
    ("Segment", 7, 0.005, 0.005, 0.05, false, false, 2.0),
    ("Dermatology", 7, 0.01, 0.01, 0.1, false, true, 2.0),
    ("Landsat", 8, 0.005, 0.01, 0.05, false, true, 5.0),
    ("Annealing", 10, 0.25, 0.05, 0.01, false, false, 2.0),
    ("Splice", 9, 0.01, 0.005, 0.05, false, false, 2.0),
];

/// `(name, max_depth, entropy, min_samples_leaf, min_samples_split)`
const CART_ROWS: &[(&str, usize, bool, usize, usize)] = &[
    ("Blood Transfusion", 9, true, 1, 5),
    ("Banknote Authentication", 9, false, 1, 5),
    ("Titanic", 7, true, 1, 50),
    ("Raisins", 8, false, 5, 2),
    ("Rice", 8, false, 5, 2),
    ("Echocardiogram", 9, true, 1, 5),
    ("Wisconsin Diagnostic Breast Cancer", 7, true, 5, 2),
    ("Loan House", 10, true, 10, 2),
    ("Heart Failure", 9, false, 5, 50),
    ("Heart Disease", 8, true, 5, 10),
    ("Adult", 10, true, 10, 2),
    ("Bank Marketing", 8, true, 5, 10),
    ("Cervical Cancer", 9, true, 1, 5),
    ("Congressional Voting", 10, false, 1, 2),
    ("Absenteeism", 7, true, 1, 10),
    ("Hepatitis", 9, true, 1, 5),
    ("German", 7, true, 1, 10),
    ("Mushroom", 9, true, 1, 5),
    ("Credit Card", 9, false, 1, 5),
    ("Horse Colic", 10, true, 10, 2),
    ("Thyroid", 10, true, 10, 2),
    ("Spambase", 10, false, 1, 2),
    ("Iris", 8, true, 5, 10),
    ("Balance Scale", 9, true, 1, 5),
    ("Car", 9, false, 1, 5),
    ("Glass", 9, false, 1, 5),
    ("Contraceptive", 9, true, 1, 5),
    ("Solar Flare", 7, true, 1, 50),
    ("Wine", 9, false, 1, 5),
    ("Zoo", 10, false, 1, 2),
    ("Lymphography", 7, true, 1, 10),
    ("Segment", 9, true, 1, 5),
    ("Dermatology", 9, false, 1, 5),
    ("Landsat", 10, false, 1, 2),
    ("Annealing", 9, false, 1, 5),
    ("Splice", 9, false, 1, 5),
];

/// Lowercase, non-alphanumerics collapsed to `-`: "Blood Transfusion" -> "blood-transfusion".
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

fn matches(row_name: &str, query: &str) -> bool {
    slug(row_name) == slug(query)
}

pub fn dataset_names() -> Vec<&'static str> {
    GDT_ROWS.iter().map(|r| r.0).collect()
}

/// Training configuration for a named dataset; `epochs`, `batch_size`,
/// `patience`, `restarts`, `swa_window` and `seed` keep their defaults.
pub fn gdt_preset(name: &str) -> Option<TrainConfig> {
    let &(_, depth, lr_index, lr_values, lr_leaf, focal, poly, eps) =
        GDT_ROWS.iter().find(|r| matches(r.0, name))?;
    let loss = LossConfig {
        kind: if focal {
            LossKind::FocalCrossEntropy
        } else {
            LossKind::CrossEntropy
        },
        focal_gamma: FOCAL_GAMMA,
        poly_enabled: poly,
        poly_epsilon: eps,
    };
    Some(TrainConfig {
        depth,
        lr_index,
        lr_values,
        lr_leaf,
        loss,
        ..TrainConfig::default()
    })
}

pub fn cart_preset(name: &str) -> Option<CartConfig> {
    let &(_, max_depth, entropy, min_samples_leaf, min_samples_split) =
        CART_ROWS.iter().find(|r| matches(r.0, name))?;
    Some(CartConfig {
        max_depth,
        criterion: if entropy { Criterion::Entropy } else { Criterion::Gini },
        min_samples_leaf,
        min_samples_split,
    })
}
