//! On-disk dataset layout: `samples.manifest` and `questions.manifest`
//! (one JSON record per line), `images/*.png`, `dataset.hash` and
//! `dataset.toml` metadata.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generator::{generate_samples, GeneratedSample, GeneratorConfig, Sample, TextCorpus};
use crate::mcq::{frb_style_family_question, questions_for_sample, Property, Question};
use crate::perturb::PerturbationSpec;
use crate::registry::{FontRegistry, Script};
use crate::render::{decode_image, encode_png, RasterImage};
use crate::rng::SeededRng;

pub const SAMPLES_MANIFEST: &str = "samples.manifest";
pub const QUESTIONS_MANIFEST: &str = "questions.manifest";
pub const HASH_FILE: &str = "dataset.hash";
pub const META_FILE: &str = "dataset.toml";
pub const IMAGES_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: GeneratorConfig,
    pub corpus_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
}

/// A dataset held in memory before it is written.
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub samples: Vec<Sample>,
    pub images: Vec<Vec<u8>>,
    pub questions: Vec<Question>,
    pub meta: DatasetMeta,
}

/// Questions for one generated sample, from the sample's own stream.
pub fn sample_questions(config: &GeneratorConfig, sample: &Sample, registry: &FontRegistry) -> Result<Vec<Question>> {
    let mut rng = SeededRng::derive(config.master_seed, sample.seed_index, "questions");
    let mut qs = questions_for_sample(sample, registry, &mut rng)?;
    if config.fifteen_way_family && sample.script == Script::Latin {
        let mut rng = SeededRng::derive(config.master_seed, sample.seed_index, "questions-15");
        let q = frb_style_family_question(sample, registry, &mut rng)?;
        if let Some(slot) = qs.iter_mut().find(|q| q.property == Property::Family) {
            *slot = q;
        }
    }
    Ok(qs)
}

pub fn build_dataset(config: &GeneratorConfig, registry: &FontRegistry, corpus: &TextCorpus) -> Result<DatasetBuild> {
    let generated = generate_samples(config, registry, corpus)?;
    let question_sets: Vec<Vec<Question>> = generated
        .par_iter()
        .map(|g| sample_questions(config, &g.sample, registry))
        .collect::<Result<_>>()?;
    let (samples, images): (Vec<Sample>, Vec<Vec<u8>>) =
        generated.into_iter().map(|GeneratedSample { sample, png, .. }| (sample, png)).unzip();
    Ok(DatasetBuild {
        samples,
        images,
        questions: question_sets.into_iter().flatten().collect(),
        meta: DatasetMeta {
            generator: config.clone(),
            corpus_version: corpus.version.clone(),
            perturbation: None,
            source_hash: None,
        },
    })
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1))))
        .collect()
}

/// SHA-256 over both manifests and every image, each prefixed by its name
/// and length so that moving bytes between files changes the hash.
pub fn compute_hash(samples_manifest: &[u8], questions_manifest: &[u8], images: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    let mut part = |name: &str, bytes: &[u8]| {
        h.update(name.as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    part(SAMPLES_MANIFEST, samples_manifest);
    part(QUESTIONS_MANIFEST, questions_manifest);
    let mut sorted: Vec<&(String, Vec<u8>)> = images.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, bytes) in sorted {
        part(name, bytes);
    }
    hex::encode(h.finalize())
}

impl DatasetBuild {
    pub fn hash(&self) -> String {
        let images: Vec<(String, Vec<u8>)> = self
            .samples
            .iter()
            .zip(&self.images)
            .map(|(s, png)| (s.image_path.clone(), png.clone()))
            .collect();
        compute_hash(to_jsonl(&self.samples).as_bytes(), to_jsonl(&self.questions).as_bytes(), &images)
    }

    /// Write to `dir`. A non-empty directory is refused unless `force`,
    /// in which case previous dataset files are removed first.
    pub fn write(&self, dir: &Path, force: bool) -> Result<Dataset> {
        prepare_output_dir(dir, force)?;
        let images_dir = dir.join(IMAGES_DIR);
        std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
        for (sample, png) in self.samples.iter().zip(&self.images) {
            let path = dir.join(&sample.image_path);
            std::fs::write(&path, png).map_err(|e| Error::io(&path, e))?;
        }
        let write = |name: &str, text: &str| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write(SAMPLES_MANIFEST, &to_jsonl(&self.samples))?;
        write(QUESTIONS_MANIFEST, &to_jsonl(&self.questions))?;
        let meta = toml::to_string(&self.meta).map_err(|e| Error::Dataset(e.to_string()))?;
        write(META_FILE, &meta)?;
        let hash = self.hash();
        write(HASH_FILE, &format!("{hash}\n"))?;
        Ok(Dataset {
            root: dir.to_path_buf(),
            samples: self.samples.clone(),
            questions: self.questions.clone(),
            meta: self.meta.clone(),
            hash,
        })
    }
}

/// Refuse to write into a non-empty directory unless `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if non_empty && !force {
            return Err(Error::Dataset(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        for name in [SAMPLES_MANIFEST, QUESTIONS_MANIFEST, HASH_FILE, META_FILE] {
            let p = dir.join(name);
            if p.exists() {
                std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        let images = dir.join(IMAGES_DIR);
        if images.exists() {
            std::fs::remove_dir_all(&images).map_err(|e| Error::io(&images, e))?;
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// A dataset directory loaded from disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub samples: Vec<Sample>,
    pub questions: Vec<Question>,
    pub meta: DatasetMeta,
    pub hash: String,
}

impl Dataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Dataset> {
        let root = dir.as_ref().to_path_buf();
        let samples = read_jsonl(&root.join(SAMPLES_MANIFEST))?;
        let questions = read_jsonl(&root.join(QUESTIONS_MANIFEST))?;
        let meta_path = root.join(META_FILE);
        let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta = toml::from_str(&meta_text).map_err(|e| Error::parse(&meta_path, e))?;
        let hash_path = root.join(HASH_FILE);
        let hash = std::fs::read_to_string(&hash_path)
            .map_err(|e| Error::io(&hash_path, e))?
            .trim()
            .to_string();
        Ok(Dataset {
            root,
            samples,
            questions,
            meta,
            hash,
        })
    }

    pub fn sample(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn image_bytes(&self, sample: &Sample) -> Result<Vec<u8>> {
        let path = self.root.join(&sample.image_path);
        std::fs::read(&path).map_err(|e| Error::io(&path, e))
    }

    pub fn load_image(&self, sample: &Sample) -> Result<RasterImage> {
        decode_image(&self.image_bytes(sample)?)
    }

    /// Recompute the hash from the files on disk.
    pub fn verify_hash(&self) -> Result<String> {
        let read = |name: &str| {
            let p = self.root.join(name);
            std::fs::read(&p).map_err(|e| Error::io(&p, e))
        };
        let images = self
            .samples
            .iter()
            .map(|s| Ok((s.image_path.clone(), self.image_bytes(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(compute_hash(&read(SAMPLES_MANIFEST)?, &read(QUESTIONS_MANIFEST)?, &images))
    }
}

/// Outcome of [`derive_dataset`]: the new dataset plus samples that failed.
#[derive(Debug)]
pub struct DeriveOutcome {
    pub dataset: Dataset,
    pub failures: Vec<(String, Error)>,
}

/// Apply `spec` to every image of `source` and write the result to `out`.
/// Labels are copied untouched; samples whose image cannot be processed are
/// reported and left out along with their questions.
pub fn derive_dataset(source: &Dataset, spec: &PerturbationSpec, out: &Path, force: bool) -> Result<DeriveOutcome> {
    spec.validate()?;
    let results: Vec<Result<Vec<u8>>> = source
        .samples
        .par_iter()
        .map(|s| {
            let image = source.load_image(s)?;
            let perturbed = spec.apply(&image, s.background_rgb, s.seed_index)?;
            Ok(encode_png(&perturbed))
        })
        .collect();
    let mut failures = Vec::new();
    let mut samples = Vec::new();
    let mut images = Vec::new();
    for (s, r) in source.samples.iter().zip(results) {
        match r {
            Ok(png) => {
                samples.push(s.clone());
                images.push(png);
            }
            Err(e) => failures.push((s.id.clone(), e)),
        }
    }
    let questions = source
        .questions
        .iter()
        .filter(|q| samples.iter().any(|s| s.id == q.sample_id))
        .cloned()
        .collect();
    let build = DatasetBuild {
        samples,
        images,
        questions,
        meta: DatasetMeta {
            perturbation: Some(*spec),
            source_hash: Some(source.hash.clone()),
            ..source.meta.clone()
        },
    };
    Ok(DeriveOutcome {
        dataset: build.write(out, force)?,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Quota;
    use crate::testutil::{default_corpus, default_registry};

    fn small_config() -> GeneratorConfig {
        GeneratorConfig {
            quota: Quota::reference().scaled_to(16),
            ..Default::default()
        }
    }

    #[test]
    fn write_open_and_verify() {
        let reg = default_registry();
        let build = build_dataset(&small_config(), &reg, &default_corpus()).unwrap();
        assert_eq!(build.questions.len(), 64);
        let dir = tempfile::tempdir().unwrap();
        let ds = build.write(dir.path(), true).unwrap();
        let reopened = Dataset::open(dir.path()).unwrap();
        assert_eq!(reopened.samples, build.samples);
        assert_eq!(reopened.questions, build.questions);
        assert_eq!(reopened.hash, ds.hash);
        assert_eq!(reopened.verify_hash().unwrap(), ds.hash);
        assert!(build.write(dir.path(), false).is_err());
    }

    #[test]
    fn hash_detects_image_drift() {
        let a = compute_hash(b"s", b"q", &[("images/a.png".into(), vec![1, 2])]);
        let b = compute_hash(b"s", b"q", &[("images/a.png".into(), vec![1, 3])]);
        assert_ne!(a, b);
    }

    #[test]
    fn derived_dataset_keeps_labels() {
        let reg = default_registry();
        let dir = tempfile::tempdir().unwrap();
        let src = build_dataset(&small_config(), &reg, &default_corpus())
            .unwrap()
            .write(&dir.path().join("src"), false)
            .unwrap();
        let spec = PerturbationSpec::Jpeg { quality: 75 };
        let out = derive_dataset(&src, &spec, &dir.path().join("jpeg"), false).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.dataset.samples, src.samples);
        assert_eq!(out.dataset.questions, src.questions);
        assert_eq!(out.dataset.meta.perturbation, Some(spec));
        assert_ne!(out.dataset.hash, src.hash);
    }

    #[test]
    fn fifteen_way_family_for_latin() {
        let reg = default_registry();
        let cfg = GeneratorConfig {
            quota: Quota::reference().only(Script::Latin).scaled_to(6),
            stroop_fraction: 1.0,
            fifteen_way_family: true,
            ..Default::default()
        };
        let build = build_dataset(&cfg, &reg, &default_corpus()).unwrap();
        for (s, q) in build.samples.iter().zip(build.questions.chunks(4)) {
            assert!(s.stroop);
            let fam = q.iter().find(|q| q.property == Property::Family).unwrap();
            assert_eq!(fam.options.len(), 15);
            assert!(fam.options.contains(s.conflicting_name.as_ref().unwrap()));
            assert!((fam.chance_baseline - 1.0 / 15.0).abs() < 1e-12);
        }
    }
}
