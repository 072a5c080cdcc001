use std::collections::BTreeMap;
use std::time::Instant;

use typeprobe_core::dataset::build_dataset;
use typeprobe_core::generator::{Difficulty, GeneratorConfig, TextCorpus};
use typeprobe_core::mcq::Property;
use typeprobe_core::metrics::{aggregate, score, Grouping};
use typeprobe_core::oracle::{answer_manifest, OracleMode, PixelOracle};
use typeprobe_core::registry::FontRegistry;
use typeprobe_core::render::decode_png;
use typeprobe_core::{assets_dir, Result};

#[test]
fn informed_oracle_on_default_dataset() {
    let registry = FontRegistry::load(assets_dir().join("registry.toml")).unwrap();
    let corpus = TextCorpus::load(assets_dir().join("corpus/eval.toml")).unwrap();
    let t = Instant::now();
    let build = build_dataset(&GeneratorConfig::default(), &registry, &corpus).unwrap();
    eprintln!("generation: {:?}", t.elapsed());
    assert_eq!(build.samples.len(), 250);
    assert_eq!(build.questions.len(), 1000);

    let pngs: BTreeMap<String, Vec<u8>> = build
        .samples
        .iter()
        .zip(&build.images)
        .map(|(s, p)| (s.id.clone(), p.clone()))
        .collect();
    let load = |s: &typeprobe_core::generator::Sample| -> Result<_> { decode_png(&pngs[&s.id]) };
    let t = Instant::now();
    let oracle = PixelOracle { mode: OracleMode::Informed, seed: 0 };
    let log = answer_manifest(&build.questions, &build.samples, &load, &registry, &oracle, &build.hash());
    eprintln!("oracle: {:?}", t.elapsed());
    let records = score(&log, &build.questions).unwrap();
    for (k, c) in aggregate(&records, Grouping::PropertyDifficulty) {
        eprintln!("{k}: {}/{}", c.k, c.n);
    }
    for r in records.iter().filter(|r| !r.correct && r.property != Property::Family) {
        eprintln!("miss {} truth={} got={:?}", r.question_id, r.truth_label, r.predicted_label);
    }
    let acc = |p: Property, d: Option<Difficulty>| {
        let sel: Vec<_> = records.iter().filter(|r| r.property == p && d.is_none_or(|d| r.difficulty == d)).collect();
        sel.iter().filter(|r| r.correct).count() as f64 / sel.len() as f64
    };
    assert!(acc(Property::Color, None) >= 0.99);
    assert!(acc(Property::Size, None) >= 0.95);
    assert!(acc(Property::Style, None) >= 0.95);
    assert!(acc(Property::Family, Some(Difficulty::Easy)) >= 0.98);
}
