//! Context-only engagement prediction: sampling, feature engineering,
//! feature selection, learners, evaluation metrics and significance tests.

pub mod error;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod schema;
pub mod select;
pub mod stats;
pub mod synthgen;
pub mod table;

pub use error::{Error, Result};
pub use schema::{DatasetId, Source, Target, Technique};
pub use table::{Column, ColumnTable, ColumnType};
