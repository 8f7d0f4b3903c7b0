//! Command layer of the `trisub` binary: configuration files, archives, the analysis
//! report and SVG output.

pub mod archive;
pub mod commands;
pub mod config;
pub mod render;
pub mod report;
