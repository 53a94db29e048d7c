//! Mini-batch training with restarts, weight averaging and early stopping.

use std::collections::VecDeque;
use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{train_test_split, Dataset};
use crate::diff::ForwardMode;
use crate::error::{invalid, GdtError, Result};
use crate::loss::{batch_loss, batch_loss_grad, LossConfig};
use crate::optim::{init_params, swa_average, AdamState, LearningRates};
use crate::tree::{backward_with, forward_with, DenseTreeParams, LeafRouting, MAX_DEPTH};
use crate::vanilla::{to_vanilla, VanillaTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub depth: usize,
    pub lr_index: f64,
    pub lr_values: f64,
    pub lr_leaf: f64,
    pub loss: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub restarts: usize,
    pub swa_window: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            depth: 6,
            lr_index: 0.05,
            lr_values: 0.05,
            lr_leaf: 0.05,
            loss: LossConfig::default(),
            epochs: 1000,
            batch_size: 64,
            patience: 200,
            restarts: 3,
            swa_window: 5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn learning_rates(&self) -> LearningRates {
        LearningRates {
            index: self.lr_index,
            values: self.lr_values,
            leaf: self.lr_leaf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return invalid(format!("depth must be in 1..={MAX_DEPTH}, got {}", self.depth));
        }
        for (name, lr) in [
            ("lr_index", self.lr_index),
            ("lr_values", self.lr_values),
            ("lr_leaf", self.lr_leaf),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return invalid(format!("{name} must be a positive finite number, got {lr}"));
            }
        }
        if self.epochs == 0 || self.batch_size == 0 || self.restarts == 0 || self.swa_window == 0 {
            return invalid("epochs, batch_size, restarts and swa_window must be at least 1");
        }
        if self.patience > self.epochs {
            return invalid(format!(
                "patience ({}) exceeds epochs ({})",
                self.patience, self.epochs
            ));
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
}

/// One restart: per-epoch losses and its best (averaged) parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartHistory {
    pub restart: usize,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    #[serde(skip)]
    pub best_params: Option<DenseTreeParams>,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub histories: Vec<RestartHistory>,
    pub best_restart: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// averaged parameters of the selected restart/epoch
    pub params: DenseTreeParams,
    /// hard tree of `params` with branches no training row reaches removed
    pub tree: VanillaTree,
    pub unpruned_nodes: usize,
    pub seconds: f64,
}

impl FitReport {
    /// Equality of everything except wall-clock time.
    pub fn same_fit(&self, other: &FitReport) -> bool {
        self.histories == other.histories
            && self.best_restart == other.best_restart
            && self.best_epoch == other.best_epoch
            && self.best_val_loss.to_bits() == other.best_val_loss.to_bits()
            && self.params == other.params
            && self.tree == other.tree
    }
}

fn check_inputs(train: &Dataset, valid: &Dataset, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    train.validate()?;
    valid.validate()?;
    if train.is_empty() || valid.is_empty() {
        return invalid("training and validation sets must be non-empty");
    }
    if train.n_features() != valid.n_features() || train.n_classes != valid.n_classes {
        return invalid("training and validation sets disagree on features or classes");
    }
    if train.n_classes < 2 || train.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return invalid("training data must contain at least two classes");
    }
    Ok(())
}

/// Trains `cfg.restarts` trees and keeps the one with the lowest validation loss.
///
/// Validation loss is the hard-mode loss of the average of the last
/// `swa_window` epoch checkpoints. Restart `r` is seeded with `seed + r`.
pub fn train(train: &Dataset, valid: &Dataset, cfg: &TrainConfig) -> Result<FitReport> {
    check_inputs(train, valid, cfg)?;
    let start = Instant::now();
    let routing = LeafRouting::new(cfg.depth)?;

    let mut histories = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let h = train_restart(train, valid, cfg, &routing, r)?;
        info!(
            "restart {r}: best val loss {:.6} at epoch {} of {}",
            h.best_val_loss,
            h.best_epoch,
            h.epochs.len()
        );
        histories.push(h);
    }

    let mut best_restart = 0;
    for (r, h) in histories.iter().enumerate() {
        if h.best_val_loss < histories[best_restart].best_val_loss {
            best_restart = r;
        }
    }
    let params = histories[best_restart]
        .best_params
        .clone()
        .expect("every restart records its best parameters");
    let full = to_vanilla(&params);
    let unpruned_nodes = full.count_nodes();
    let tree = full.prune_zero_branches(&train.x)?;

    Ok(FitReport {
        best_restart,
        best_epoch: histories[best_restart].best_epoch,
        best_val_loss: histories[best_restart].best_val_loss,
        histories,
        params,
        tree,
        unpruned_nodes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn train_restart(
    train: &Dataset,
    valid: &Dataset,
    cfg: &TrainConfig,
    routing: &LeafRouting,
    restart: usize,
) -> Result<RestartHistory> {
    let seed = cfg.seed.wrapping_add(restart as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init_params(cfg.depth, train.n_features(), train.n_classes, &mut rng)?;
    let mut adam = AdamState::new(&params);
    let lrs = cfg.learning_rates();
    let diverged = |epoch| GdtError::Diverged { restart, epoch };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut window: VecDeque<DenseTreeParams> = VecDeque::with_capacity(cfg.swa_window + 1);
    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, DenseTreeParams)> = None;
    let mut since_improve = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train.subset(chunk);
            let cache = forward_with(&params, routing, &batch.x, ForwardMode::Hard);
            let (loss, dprobs) = batch_loss_grad(&cache.probs, &batch.y, &cfg.loss)?;
            if !loss.is_finite() {
                return Err(diverged(epoch));
            }
            loss_sum += loss * chunk.len() as f64;
            let grads = backward_with(&params, routing, &batch.x, &cache, &dprobs);
            if !grads.is_finite() {
                return Err(diverged(epoch));
            }
            adam.step(&mut params, &grads, &lrs)?;
            if !params.is_finite() {
                return Err(diverged(epoch));
            }
        }
        let train_loss = loss_sum / train.len() as f64;

        window.push_back(params.clone());
        if window.len() > cfg.swa_window {
            window.pop_front();
        }
        let averaged = swa_average(&window)?;
        let val = forward_with(&averaged, routing, &valid.x, ForwardMode::Hard);
        let val_loss = batch_loss(&val.probs, &valid.y, &cfg.loss)?;
        if !val_loss.is_finite() {
            return Err(diverged(epoch));
        }
        epochs.push(EpochRecord { train_loss, val_loss });
        debug!("restart {restart} epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");

        if best.as_ref().is_none_or(|(_, b, _)| val_loss < *b) {
            best = Some((epoch, val_loss, averaged));
            since_improve = 0;
        } else {
            since_improve += 1;
        }
        if since_improve >= cfg.patience {
            break;
        }
    }

    let (best_epoch, best_val_loss, best_params) = best.expect("at least one epoch runs");
    Ok(RestartHistory {
        restart,
        seed,
        epochs,
        best_epoch,
        best_val_loss,
        best_params: Some(best_params),
    })
}

/// Holds out a seeded 20% of `ds` for validation, then trains on the rest.
pub fn fit(ds: &Dataset, cfg: &TrainConfig) -> Result<FitReport> {
    let (train_idx, val_idx) = train_test_split(ds.len(), 0.2, cfg.seed)?;
    if val_idx.is_empty() {
        return invalid("dataset too small to hold out validation rows");
    }
    train(&ds.subset(&train_idx), &ds.subset(&val_idx), cfg)
}
