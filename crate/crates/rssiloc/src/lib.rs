//! Std companion to [`rssiloc_core`]: file formats, the synthetic testbed
//! configuration, comparison and sweep harnesses, C export, SVG charts and
//! the `rssiloc` command line.

pub mod artifacts;
pub mod cli;
pub mod dataset_csv;
mod error;
pub mod evalsuite;
pub mod export;
pub mod model_file;
pub mod plot;
pub mod report;
pub mod testbed;

pub use error::{Error, Result};
pub use rssiloc_core as core;
