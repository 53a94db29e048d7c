//! Hard, axis-aligned decision trees whose split features, thresholds and
//! leaf distributions are learned jointly by gradient descent.
//!
//! The tree is stored densely (see [`tree::DenseTreeParams`]); training uses
//! straight-through hardmax and rounding so the forward pass is always the
//! hard tree. [`vanilla::VanillaTree`] is the pointer form used for
//! inference, pruning and serialization, and also the output of the
//! [`cart`] baseline.

pub mod bench;
pub mod cart;
pub mod cli;
pub mod data;
pub mod diff;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod presets;
pub mod trainer;
pub mod tree;
pub mod vanilla;

pub use error::{GdtError, Result};
pub use matrix::RealMatrix;
pub use trainer::{fit, train, FitReport, TrainConfig};
pub use vanilla::VanillaTree;
