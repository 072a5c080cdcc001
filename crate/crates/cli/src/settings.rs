use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Flat key-value configuration file. Every key is optional and every key
/// can be overridden by the matching command-line flag.
///
/// ```toml
/// seed = 42
/// out = "data/default"
/// registry = "assets/registry.toml"
/// corpus = "assets/corpus/eval.toml"
/// finetune_corpus = "assets/corpus/finetune.toml"
/// endpoints = "endpoints.toml"
/// runs_dir = "runs"
/// stroop_fraction = 0.0
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub finetune_corpus: Option<PathBuf>,
    pub endpoints: Option<PathBuf>,
    pub runs_dir: Option<PathBuf>,
    pub stroop_fraction: Option<f64>,
    pub count: Option<usize>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}
