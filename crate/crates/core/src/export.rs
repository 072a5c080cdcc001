//! Instruction-tuning export: image/question/answer conversations built from
//! a dataset generated with its own seed and corpus, guarded against overlap
//! with the evaluation data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{build_dataset, prepare_output_dir, to_jsonl, IMAGES_DIR};
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, Quota, TextCorpus};
use crate::mcq::{Property, Question};
use crate::prompt::{build_prompt, option_letter};
use crate::registry::FontRegistry;

pub const DEFAULT_EXPORT_COUNT: usize = 3000;
pub const EXPORT_FILE: &str = "finetune.jsonl";
pub const EXPORT_META_FILE: &str = "finetune.meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneExportConfig {
    pub count: usize,
    pub master_seed: u64,
    /// Seed of the evaluation dataset; must differ from `master_seed`.
    pub eval_seed: u64,
    pub format: String,
}

impl Default for FinetuneExportConfig {
    fn default() -> Self {
        FinetuneExportConfig {
            count: DEFAULT_EXPORT_COUNT,
            master_seed: 1337,
            eval_seed: crate::generator::DEFAULT_SEED,
            format: "messages".into(),
        }
    }
}

/// Refuse a shared seed or any sentence that also appears in the evaluation corpus.
pub fn check_leakage(config: &FinetuneExportConfig, train: &TextCorpus, eval: &TextCorpus) -> Result<()> {
    if config.master_seed == config.eval_seed {
        return Err(Error::Leakage(format!(
            "export seed {} equals the evaluation seed",
            config.master_seed
        )));
    }
    let eval_texts: std::collections::HashSet<&String> = eval.all_sentences().collect();
    let shared: Vec<&String> = train.all_sentences().filter(|s| eval_texts.contains(s)).collect();
    if !shared.is_empty() {
        return Err(Error::Leakage(format!(
            "{} training sentences also appear in the evaluation corpus, first: {:?}",
            shared.len(),
            shared[0]
        )));
    }
    Ok(())
}

/// How one training example is laid out.
pub trait ConversationFormat: Send + Sync {
    fn name(&self) -> &'static str;
    fn record(&self, id: &str, image_path: &str, prompt: &str, answer: &str, question: &Question) -> Value;
}

/// Chat messages with an image part followed by the prompt text.
pub struct Messages;

/// `conversations` list with human/gpt turns and an `<image>` placeholder.
pub struct ShareGpt;

impl ConversationFormat for Messages {
    fn name(&self) -> &'static str {
        "messages"
    }

    fn record(&self, id: &str, image_path: &str, prompt: &str, answer: &str, q: &Question) -> Value {
        json!({
            "id": id,
            "image": image_path,
            "property": q.property,
            "messages": [
                {"role": "user", "content": [
                    {"type": "image", "image": image_path},
                    {"type": "text", "text": prompt}
                ]},
                {"role": "assistant", "content": answer}
            ]
        })
    }
}

impl ConversationFormat for ShareGpt {
    fn name(&self) -> &'static str {
        "sharegpt"
    }

    fn record(&self, id: &str, image_path: &str, prompt: &str, answer: &str, q: &Question) -> Value {
        json!({
            "id": id,
            "image": image_path,
            "property": q.property,
            "conversations": [
                {"from": "human", "value": format!("<image>\n{prompt}")},
                {"from": "gpt", "value": answer}
            ]
        })
    }
}

pub fn conversation_formats() -> Vec<Box<dyn ConversationFormat>> {
    vec![Box::new(Messages), Box::new(ShareGpt)]
}

pub fn conversation_format(name: &str) -> Result<Box<dyn ConversationFormat>> {
    let names: Vec<&str> = conversation_formats().iter().map(|f| f.name()).collect();
    conversation_formats()
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| Error::invalid("conversation format", format!("{name} (available: {})", names.join(", "))))
}

/// Adapter hyperparameters recorded for downstream trainers.
pub fn adapter_hyperparameters() -> Value {
    json!({
        "lora_config": {
            "r": 16,
            "lora_alpha": 32,
            "lora_dropout": 0.05,
            "target_modules": ["q_proj", "k_proj", "v_proj", "o_proj"],
            "task_type": "CAUSAL_LM"
        },
        "training_args": {
            "learning_rate": 2e-4,
            "num_epochs": 3,
            "batch_size": 1,
            "gradient_accumulation_steps": 16,
            "warmup_ratio": 0.05,
            "bf16": true,
            "gradient_checkpointing": true
        }
    })
}

/// Per-property record counts: an equal split, remainder to the earlier properties.
pub fn property_split(count: usize) -> [usize; 4] {
    let base = count / 4;
    let extra = count % 4;
    std::array::from_fn(|i| base + usize::from(i < extra))
}

#[derive(Debug, Clone)]
pub struct ExportSummary {
    pub records: usize,
    pub per_property: [usize; 4],
    pub samples: usize,
}

pub fn export_finetune(
    config: &FinetuneExportConfig,
    registry: &FontRegistry,
    train_corpus: &TextCorpus,
    eval_corpus: &TextCorpus,
    out: &Path,
    force: bool,
) -> Result<ExportSummary> {
    check_leakage(config, train_corpus, eval_corpus)?;
    let format = conversation_format(&config.format)?;
    let split = property_split(config.count);
    let n_samples = split[0];
    let gen = GeneratorConfig {
        master_seed: config.master_seed,
        quota: Quota::balanced(n_samples),
        ..Default::default()
    };
    gen.validate(registry, train_corpus)?;
    let build = build_dataset(&gen, registry, train_corpus)?;

    prepare_output_dir(out, force)?;
    let images_dir = out.join(IMAGES_DIR);
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let mut records: Vec<Value> = Vec::with_capacity(config.count);
    for (p, property) in Property::ALL.into_iter().enumerate() {
        let qs = build.questions.iter().filter(|q| q.property == property).take(split[p]);
        for q in qs {
            let sample = build.samples.iter().find(|s| s.id == q.sample_id).expect("own sample");
            let answer = option_letter(q.correct_index).to_string();
            records.push(format.record(&q.id, &sample.image_path, &build_prompt(q), &answer, q));
        }
    }
    for (sample, png) in build.samples.iter().zip(&build.images) {
        let path = out.join(&sample.image_path);
        std::fs::write(&path, png).map_err(|e| Error::io(&path, e))?;
    }
    let path = out.join(EXPORT_FILE);
    std::fs::write(&path, to_jsonl(&records)).map_err(|e| Error::io(&path, e))?;
    let meta = json!({
        "count": records.len(),
        "per_property": Property::ALL.iter().zip(split).map(|(p, n)| (p.as_str(), n)).collect::<std::collections::BTreeMap<_, _>>(),
        "format": format.name(),
        "master_seed": config.master_seed,
        "eval_seed": config.eval_seed,
        "corpus_version": train_corpus.version,
        "adapter": adapter_hyperparameters(),
    });
    let meta_path = out.join(EXPORT_META_FILE);
    let text = serde_json::to_string_pretty(&meta).expect("serializable") + "\n";
    std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    Ok(ExportSummary {
        records: records.len(),
        per_property: split,
        samples: build.samples.len(),
    })
}
