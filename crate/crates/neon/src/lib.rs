//! File formats, experiment orchestration and reporting around
//! [`neon_core`].
//!
//! - [`model_file`]: binary container for trained networks
//! - [`problems`]: benchmark problem files and task sampling
//! - [`corpus_file`]: training corpora as rebuildable recipes
//! - [`runlog`]: JSON-lines logs of evolutionary runs
//! - [`experiment`]: resumable grids of runs on a thread pool
//! - [`report`]: success-rate and size tables

pub mod corpus_file;
pub mod experiment;
pub mod model_file;
pub mod problems;
pub mod report;
pub mod runlog;

pub use neon_core;
