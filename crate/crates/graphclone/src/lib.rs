//! File formats, corpus ingestion, parallel detection and the end-to-end
//! pipeline around `graphclone-core`.

pub mod audit;
pub mod config;
pub mod corpus;
pub mod formats;
pub mod logging;
pub mod parallel;
pub mod pipeline;
pub mod synth;

pub use graphclone_core as core;
