use std::sync::OnceLock;

use crate::generator::TextCorpus;
use crate::registry::FontRegistry;

pub fn default_registry() -> FontRegistry {
    static REG: OnceLock<FontRegistry> = OnceLock::new();
    REG.get_or_init(|| FontRegistry::load(crate::assets_dir().join("registry.toml")).expect("bundled registry"))
        .clone()
}

pub fn default_corpus() -> TextCorpus {
    TextCorpus::load(crate::assets_dir().join("corpus/eval.toml")).expect("bundled corpus")
}
