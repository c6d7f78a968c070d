#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod analysis;
pub mod cli;
pub mod groundtruth;
pub mod ingest;
pub mod physiology;
pub mod podsim;
pub mod series;

pub use error::{Error, Result};
pub use series::{Sample, SensorSeries};
