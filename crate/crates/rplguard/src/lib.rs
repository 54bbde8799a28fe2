//! Host-side companion to `rplguard-core`: scenario and matrix files, the
//! parallel batch runner, CSV results and per-run exports.

pub mod config;
pub mod export;
pub mod matrix;
pub mod output;
