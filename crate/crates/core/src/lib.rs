//! Audit and repair linear scoring functions for proportionally fair top-k
//! selection.

pub mod app;
pub mod control;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod ingest;
pub mod kinetic;
pub mod klevel;
pub mod lp;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod sweep;

pub use control::Control;
pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{
    fair_completion, fairness_interval, is_fair, score_of, top_k, Candidate, Dataset, FairnessSpec, Grid,
    TopKResult, WeightBox, WeightVector,
};
