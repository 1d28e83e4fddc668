//! Ranking of (sample, label) instances under a label hierarchy.
//!
//! Given per-instance local precision rates (LPRs) and a forest-shaped label
//! hierarchy, this crate produces the hierarchy-consistent ordering that
//! maximizes the early-call-driven area under the hit curve (eAUC), along
//! with the estimation, evaluation, DAG-splitting, and simulation machinery
//! around it.

pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod dag;
pub mod io;
pub mod lpr;
pub mod metrics;
pub mod ranker;
pub mod selftest;

pub use error::{Error, Result};
