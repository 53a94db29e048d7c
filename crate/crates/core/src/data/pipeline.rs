//! Raw table to model-ready train / validation / test sets.

use crate::data::{
    rebalance_if_needed, split_indices, Dataset, PreprocessModel, RawDataset, SplitIndices,
};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub indices: SplitIndices,
    pub preprocess: PreprocessModel,
    /// transformed training rows, rebalanced when the class trigger fires;
    /// original rows come first
    pub train: Dataset,
    pub n_original_train: usize,
    pub val: Dataset,
    pub test: Dataset,
}

impl PreparedSplit {
    pub fn rebalanced(&self) -> bool {
        self.train.len() > self.n_original_train
    }

    /// Training rows without synthetic samples.
    pub fn original_train(&self) -> Dataset {
        self.train.subset(&(0..self.n_original_train).collect::<Vec<_>>())
    }
}

/// Splits, fits preprocessing on the training rows, transforms all three
/// parts and rebalances the training part. Deterministic in `seed`.
pub fn prepare_split(raw: &RawDataset, seed: u64) -> Result<PreparedSplit> {
    let indices = split_indices(raw.n_rows(), seed)?;
    let (preprocess, train) = PreprocessModel::fit(raw, &indices.train)?;
    let val = preprocess.transform(raw, &indices.val)?;
    let test = preprocess.transform(raw, &indices.test)?;
    let n_original_train = train.len();
    let train = rebalance_if_needed(&train, seed)?;
    Ok(PreparedSplit {
        indices,
        preprocess,
        train,
        n_original_train,
        val,
        test,
    })
}
