//! Core library for synthetic typography probing: font registry, renderer,
//! sample and question generation, perturbations, a pixel-level reference
//! responder, answer parsing and scoring.

pub mod color;
pub mod dataset;
pub mod error;
pub mod export;
pub mod generator;
pub mod mcq;
pub mod metrics;
pub mod oracle;
pub mod parser;
pub mod perturb;
pub mod prompt;
pub mod registry;
pub mod render;
pub mod report;
pub mod rng;
pub mod runlog;

#[cfg(test)]
pub(crate) mod testutil;

use std::path::PathBuf;

pub use error::{Error, Result};

/// The `assets/` directory shipped with the workspace (registry, fonts, corpora).
pub fn assets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}
