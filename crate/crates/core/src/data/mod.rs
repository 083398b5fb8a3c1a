//! Tabular data model, CSV ingestion, grouped folds and knowledge-tracing features.

mod bkt;
mod dataset;
mod folds;
mod io;
pub mod synthetic;

pub use bkt::{
    bkt_features, bkt_update, fit_bkt_grid, load_bkt_params, write_bkt_params, BktParams,
    ResponseLog,
};
pub use dataset::{TabularDataset, SYNTHETIC_GROUP};
pub use folds::{grouped_kfold, Fold, GroupedFolds};
pub use io::{load_csv, read_csv, write_csv};
