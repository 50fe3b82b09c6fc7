pub mod cli;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod oracle;
pub mod relax;
pub mod rounding;
pub mod solver;
mod units;

pub use error::{Error, Result};
