//! `typeprobe` command-line harness.

mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use typeprobe_client::{evaluate_manifest, Client, EndpointFile, EvalOptions};
use typeprobe_core::dataset::{build_dataset, derive_dataset, Dataset};
use typeprobe_core::export::{export_finetune, FinetuneExportConfig, DEFAULT_EXPORT_COUNT};
use typeprobe_core::generator::{AssignmentMode, GeneratorConfig, Quota, TextCorpus, DEFAULT_SEED};
use typeprobe_core::mcq::Property;
use typeprobe_core::metrics::{confusion_matrix, mcnemar, score, EvalRecord, Grouping};
use typeprobe_core::oracle::{answer_manifest, make_responder, responder_names};
use typeprobe_core::parser::PARSER_VERSION;
use typeprobe_core::perturb::preset;
use typeprobe_core::registry::{FontRegistry, Script};
use typeprobe_core::report::{format_by_name, grouping_table, main_table, Comparison, Report};
use typeprobe_core::runlog::{RunLog, TransportStatus};

pub use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "typeprobe", version, about = "Synthetic typography probes for multimodal models")]
pub struct Cli {
    /// Master seed (generation) or export seed (export-finetune).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory or file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render samples and write manifests, images and the dataset hash.
    Generate(GenerateArgs),
    /// Apply a named perturbation preset to every image of a dataset.
    Perturb(PerturbArgs),
    /// Answer a dataset's questions with a remote endpoint or a local responder.
    Evaluate(EvaluateArgs),
    /// Score run logs and print accuracy tables.
    Report(ReportArgs),
    /// Re-parse a run log's raw responses into scored records.
    Parse(ParseArgs),
    /// Write a leakage-checked instruction-tuning set.
    ExportFinetune(ExportArgs),
}

#[derive(Debug, Args)]
pub struct AssetArgs {
    /// Font registry file.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Text corpus file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub assets: AssetArgs,
    /// Total samples; the reference composition is rescaled proportionally.
    #[arg(long)]
    pub count: Option<usize>,
    /// Keep only one script's share of the composition.
    #[arg(long)]
    pub script: Option<String>,
    /// Fraction of Latin samples whose text names a different font.
    #[arg(long)]
    pub stroop_fraction: Option<f64>,
    /// Ask Latin family questions with fifteen options.
    #[arg(long)]
    pub fifteen_way: bool,
    /// Draw each sample's difficulty and script independently instead of
    /// filling exact quota counts.
    #[arg(long)]
    pub sampled: bool,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Source dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Preset name, e.g. jpeg-75 or rot-45.
    #[arg(long)]
    pub preset: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Endpoint name from the endpoints file.
    #[arg(long, conflicts_with = "oracle")]
    pub endpoint: Option<String>,
    /// Endpoints file with [[endpoint]] tables.
    #[arg(long)]
    pub endpoints: Option<PathBuf>,
    /// Local responder instead of a remote model: informed, blind or random.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Continue an interrupted run log.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many new requests.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Run log path; defaults to <runs_dir>/<run-id>.log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run logs to score.
    pub logs: Vec<PathBuf>,
    /// Dataset whose question manifest the logs answer.
    #[arg(long)]
    pub dataset: PathBuf,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    pub format: String,
    /// Extra breakdowns, e.g. size_bucket, property_difficulty.
    #[arg(long = "by")]
    pub by: Vec<String>,
    /// Paired McNemar test between two logs.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Confusion matrix for a property (plain table output).
    #[arg(long)]
    pub confusion: Option<String>,
    /// Accept logs bound to different dataset hashes.
    #[arg(long)]
    pub allow_mixed: bool,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub log: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub count: Option<usize>,
    /// Conversation format: messages or sharegpt.
    #[arg(long, default_value = "messages")]
    pub format: String,
    /// Seed of the evaluation dataset; read from --eval-dataset when given.
    #[arg(long)]
    pub eval_seed: Option<u64>,
    #[arg(long)]
    pub eval_dataset: Option<PathBuf>,
    /// Training corpus (must share no sentence with the evaluation corpus).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub eval_corpus: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

struct Ctx {
    seed: Option<u64>,
    out: Option<PathBuf>,
    force: bool,
    settings: Settings,
}

impl Ctx {
    fn registry_path(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone()
            .or_else(|| self.settings.registry.clone())
            .unwrap_or_else(|| typeprobe_core::assets_dir().join("registry.toml"))
    }

    fn load_registry(&self, flag: &Option<PathBuf>) -> Result<FontRegistry> {
        let path = self.registry_path(flag);
        settings::require_exists(&path, "registry")?;
        Ok(FontRegistry::load(&path)?)
    }

    fn corpus_path(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone()
            .or_else(|| self.settings.corpus.clone())
            .unwrap_or_else(|| typeprobe_core::assets_dir().join("corpus/eval.toml"))
    }

    fn runs_dir(&self) -> PathBuf {
        self.settings.runs_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(settings.seed),
        out: cli.out.clone().or_else(|| settings.out.clone()),
        force: cli.force,
        settings,
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(&ctx, &a),
        Command::Perturb(a) => cmd_perturb(&ctx, &a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, &a),
        Command::Report(a) => cmd_report(&ctx, &a),
        Command::Parse(a) => cmd_parse(&ctx, &a),
        Command::ExportFinetune(a) => cmd_export(&ctx, &a),
    }
}

fn cmd_generate(ctx: &Ctx, a: &GenerateArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let registry = ctx.load_registry(&a.assets.registry)?;
    let corpus_path = ctx.corpus_path(&a.assets.corpus);
    settings::require_exists(&corpus_path, "corpus")?;
    let corpus = TextCorpus::load(&corpus_path)?;

    let mut quota = Quota::reference();
    if let Some(s) = &a.script {
        quota = quota.only(Script::parse(s)?);
    }
    if let Some(n) = a.count.or(ctx.settings.count) {
        quota = quota.scaled_to(n);
    }
    let assignment = if a.sampled {
        let totals = |d| Script::ALL.iter().map(|s| Quota::reference().count(*s, d) as f64).sum::<f64>();
        use typeprobe_core::generator::Difficulty::*;
        AssignmentMode::Sampled {
            difficulty_weights: [totals(Easy), totals(Medium), totals(Hard)],
        }
    } else {
        AssignmentMode::Quota
    };
    let config = GeneratorConfig {
        master_seed: ctx.seed.unwrap_or(DEFAULT_SEED),
        quota,
        assignment,
        stroop_fraction: a.stroop_fraction.or(ctx.settings.stroop_fraction).unwrap_or(0.0),
        fifteen_way_family: a.fifteen_way,
    };
    config.validate(&registry, &corpus)?;
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("dataset"));
    refuse_non_empty(&out, ctx.force)?;

    let build = build_dataset(&config, &registry, &corpus)?;
    let ds = build.write(&out, ctx.force)?;
    println!(
        "wrote {} samples and {} questions to {} in {:.1}s",
        ds.samples.len(),
        ds.questions.len(),
        out.display(),
        start.elapsed().as_secs_f64()
    );
    println!("dataset hash {}", ds.hash);
    Ok(ExitCode::SUCCESS)
}

fn refuse_non_empty(dir: &Path, force: bool) -> Result<()> {
    if !force && dir.exists() && std::fs::read_dir(dir)?.next().is_some() {
        bail!("output directory {} is not empty; pass --force to overwrite", dir.display());
    }
    Ok(())
}

fn open_dataset(dir: &Path) -> Result<Dataset> {
    settings::require_exists(dir, "dataset")?;
    Dataset::open(dir).with_context(|| format!("opening dataset {}", dir.display()))
}

fn cmd_perturb(ctx: &Ctx, a: &PerturbArgs) -> Result<ExitCode> {
    let spec = preset(&a.preset)?;
    let source = open_dataset(&a.dataset)?;
    let name = a
        .dataset
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let parent = ctx
        .out
        .clone()
        .unwrap_or_else(|| a.dataset.parent().map(Path::to_path_buf).unwrap_or_default());
    let out = parent.join(format!("{name}-{}", a.preset));
    refuse_non_empty(&out, ctx.force)?;
    let outcome = derive_dataset(&source, &spec, &out, ctx.force)?;
    for (id, err) in &outcome.failures {
        eprintln!("sample {id} failed: {err}");
    }
    println!(
        "wrote {} perturbed samples ({spec}) to {}",
        outcome.dataset.samples.len(),
        out.display()
    );
    println!("dataset hash {}", outcome.dataset.hash);
    Ok(if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn default_log_path(ctx: &Ctx, name: &str, ds: &Dataset) -> PathBuf {
    let id = format!("{}-{}", name.replace('/', "-"), &ds.hash[..12.min(ds.hash.len())]);
    ctx.runs_dir().join(format!("{id}.log"))
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<ExitCode> {
    let ds = open_dataset(&a.dataset)?;
    if let Some(mode) = &a.oracle {
        let registry = ctx.load_registry(&a.registry)?;
        let responder = make_responder(mode, ctx.seed.unwrap_or(DEFAULT_SEED))
            .with_context(|| format!("available responders: {}", responder_names().join(", ")))?;
        let path = a.log.clone().unwrap_or_else(|| default_log_path(ctx, &responder.name(), &ds));
        if path.exists() && !ctx.force {
            bail!("run log {} exists; pass --force to overwrite", path.display());
        }
        let log = answer_manifest(&ds.questions, &ds.samples, &|s| ds.load_image(s), &registry, responder.as_ref(), &ds.hash);
        log.write(&path)?;
        println!("{} answered {} questions -> {}", responder.name(), log.records.len(), path.display());
        return Ok(exit_for(&log));
    }

    let Some(name) = &a.endpoint else {
        bail!("pass --endpoint NAME or --oracle MODE");
    };
    let endpoints_path = a
        .endpoints
        .clone()
        .or_else(|| ctx.settings.endpoints.clone())
        .unwrap_or_else(|| PathBuf::from("endpoints.toml"));
    settings::require_exists(&endpoints_path, "endpoints file")?;
    let config = EndpointFile::load(&endpoints_path)?.get(name)?.clone();
    let client = Client::new(config)?;
    let path = a.log.clone().unwrap_or_else(|| default_log_path(ctx, name, &ds));
    if path.exists() && !a.resume && !ctx.force {
        bail!("run log {} exists; pass --resume to continue it or --force to overwrite", path.display());
    }
    let options = EvalOptions {
        resume: a.resume,
        limit: a.limit,
        run_id: path.file_stem().map(|s| s.to_string_lossy().into_owned()),
    };
    let progress = |done: usize, total: usize| {
        if done.is_multiple_of(50) || done == total {
            eprintln!("{done}/{total}");
        }
    };
    let runtime = tokio::runtime::Runtime::new()?;
    let log = runtime.block_on(evaluate_manifest(&client, &ds, &path, &options, Some(&progress)))?;
    println!(
        "{}: {} answered, {} failed -> {}",
        name,
        log.answered(),
        log.failed(),
        path.display()
    );
    Ok(exit_for(&log))
}

fn exit_for(log: &RunLog) -> ExitCode {
    if log.records.iter().any(|r| r.status == TransportStatus::Failed) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn load_logs(paths: &[PathBuf], ds: &Dataset, allow_mixed: bool) -> Result<Vec<(String, RunLog)>> {
    let mut out: Vec<(String, RunLog)> = Vec::new();
    for p in paths {
        let log = RunLog::read(p).with_context(|| format!("reading run log {}", p.display()))?;
        if !allow_mixed && log.header.manifest_hash != ds.hash {
            bail!(
                "run log {} belongs to dataset {} but --dataset has hash {}; pass --allow-mixed to score anyway",
                p.display(),
                log.header.manifest_hash,
                ds.hash
            );
        }
        let mut name = log.header.model.clone();
        if out.iter().any(|(n, _)| *n == name) {
            name = format!("{name} ({})", p.file_stem().unwrap_or_default().to_string_lossy());
        }
        out.push((name, log));
    }
    Ok(out)
}

fn cmd_report(ctx: &Ctx, a: &ReportArgs) -> Result<ExitCode> {
    let ds = open_dataset(&a.dataset)?;
    let mut paths = a.logs.clone();
    if let Some(pair) = &a.compare {
        for p in pair {
            if !paths.contains(p) {
                paths.push(p.clone());
            }
        }
    }
    if paths.is_empty() {
        bail!("no run logs given");
    }
    let logs = load_logs(&paths, &ds, a.allow_mixed)?;
    let runs: Vec<(String, Vec<EvalRecord>)> = logs
        .iter()
        .map(|(name, log)| Ok((name.clone(), score(log, &ds.questions)?)))
        .collect::<Result<_>>()?;

    let mut tables = vec![main_table(&runs)];
    for g in &a.by {
        let grouping = Grouping::parse(g)?;
        tables.push(grouping_table(&format!("Accuracy by {} (%)", grouping.as_str()), grouping, &runs));
    }
    let mut comparisons = Vec::new();
    if let Some(pair) = &a.compare {
        let idx = |p: &PathBuf| paths.iter().position(|q| q == p).expect("added above");
        let (i, j) = (idx(&pair[0]), idx(&pair[1]));
        comparisons.push(Comparison {
            first: runs[i].0.clone(),
            second: runs[j].0.clone(),
            result: mcnemar(&runs[i].1, &runs[j].1)?,
        });
    }
    let report = Report::new(tables, comparisons);
    let mut text = format_by_name(&a.format)?.render(&report);
    if let Some(prop) = &a.confusion {
        let property = Property::parse(prop)?;
        for (name, recs) in &runs {
            text.push_str(&render_confusion(name, &confusion_matrix(recs, property)));
        }
    }
    write_output(ctx, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn render_confusion(name: &str, m: &typeprobe_core::metrics::ConfusionMatrix) -> String {
    let mut cols = m.labels.clone();
    cols.push(typeprobe_core::metrics::FAILED_LABEL.into());
    let w = cols.iter().map(|c| c.len()).max().unwrap_or(4).max(6);
    let mut s = format!("\n{} confusion for {name} (row = truth, proportions)\n{:w$}", m.property.label(), "");
    for c in &cols {
        s.push_str(&format!("  {c:>w$}"));
    }
    s.push('\n');
    for (label, row) in m.labels.iter().zip(&m.proportions) {
        s.push_str(&format!("{label:w$}"));
        for v in row {
            s.push_str(&format!("  {v:>w$.3}"));
        }
        s.push('\n');
    }
    s
}

fn write_output(ctx: &Ctx, text: &str) -> Result<()> {
    match &ctx.out {
        Some(path) => {
            if path.exists() && !ctx.force {
                bail!("{} exists; pass --force to overwrite", path.display());
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct VersionedRecord<'a> {
    parser_version: &'static str,
    #[serde(flatten)]
    record: &'a EvalRecord,
}

fn cmd_parse(ctx: &Ctx, a: &ParseArgs) -> Result<ExitCode> {
    let ds = open_dataset(&a.dataset)?;
    let log = load_logs(std::slice::from_ref(&a.log), &ds, false)?.remove(0).1;
    let records = score(&log, &ds.questions)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(&VersionedRecord {
            parser_version: PARSER_VERSION,
            record: r,
        })?);
        text.push('\n');
    }
    write_output(ctx, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(ctx: &Ctx, a: &ExportArgs) -> Result<ExitCode> {
    let registry = ctx.load_registry(&a.registry)?;
    let train_path = a
        .corpus
        .clone()
        .or_else(|| ctx.settings.finetune_corpus.clone())
        .unwrap_or_else(|| typeprobe_core::assets_dir().join("corpus/finetune.toml"));
    settings::require_exists(&train_path, "fine-tune corpus")?;
    let eval_path = ctx.corpus_path(&a.eval_corpus);
    settings::require_exists(&eval_path, "evaluation corpus")?;
    let eval_seed = match (&a.eval_seed, &a.eval_dataset) {
        (Some(s), _) => *s,
        (None, Some(dir)) => open_dataset(dir)?.meta.generator.master_seed,
        (None, None) => DEFAULT_SEED,
    };
    let config = FinetuneExportConfig {
        count: a.count.unwrap_or(DEFAULT_EXPORT_COUNT),
        master_seed: ctx.seed.unwrap_or(FinetuneExportConfig::default().master_seed),
        eval_seed,
        format: a.format.clone(),
    };
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("finetune"));
    refuse_non_empty(&out, ctx.force)?;
    let summary = export_finetune(
        &config,
        &registry,
        &TextCorpus::load(&train_path)?,
        &TextCorpus::load(&eval_path)?,
        &out,
        ctx.force,
    )?;
    println!(
        "wrote {} records ({} samples; family/size/style/color = {:?}) to {}",
        summary.records,
        summary.samples,
        summary.per_property,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
