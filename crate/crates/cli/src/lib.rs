//! File formats and command-line front end for `scene-forecaster-core`.
//!
//! Maps and run configs are JSON documents, scene logs are JSONL with one
//! frame per line, and evaluation results are CSV.

pub mod app;
pub mod io;
pub mod output;

pub use scene_forecaster_core as core;
