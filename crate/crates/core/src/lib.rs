//! Benchmarking toolkit for tabular data augmentation on binary
//! classification tasks.

pub mod augment;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod generation;
pub mod harness;
pub mod neighbors;
pub mod net;
pub mod perturbation;
pub mod sampling;
pub mod seed;
pub mod stats;
pub mod util;

pub use data::TabularDataset;
pub use error::{Error, Result};
pub use seed::SeedStream;
