use std::collections::{HashMap, HashSet};
use std::path::Path;

use futures::stream::{self, StreamExt};
use typeprobe_core::dataset::Dataset;
use typeprobe_core::prompt::build_prompt;
use typeprobe_core::runlog::{RunHeader, RunLog, RunLogWriter, RunRecord, TransportStatus};

use crate::endpoint::Client;
use crate::{ClientError, Result};

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Continue the log at the target path, skipping answered questions.
    pub resume: bool,
    /// Stop after this many new requests.
    pub limit: Option<usize>,
    pub run_id: Option<String>,
}

/// Ask every question of `dataset` and log the answers at `log_path`.
///
/// Records are appended as they complete, at most `max_in_flight` requests
/// are outstanding, and the finished log is rewritten in question order.
/// With `resume`, questions already answered successfully are skipped; a
/// log bound to a different dataset hash is refused before any request.
pub async fn evaluate_manifest(
    client: &Client,
    dataset: &Dataset,
    log_path: &Path,
    options: &EvalOptions,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<RunLog> {
    let total = dataset.questions.len();
    let mut done: HashSet<usize> = HashSet::new();
    let mut writer = if options.resume && log_path.exists() {
        let existing = RunLog::read(log_path)?;
        if existing.header.manifest_hash != dataset.hash {
            return Err(ClientError::ManifestMismatch {
                log: existing.header.manifest_hash,
                manifest: dataset.hash.clone(),
            });
        }
        for r in &existing.records {
            let same_question = dataset.questions.get(r.index).is_some_and(|q| q.id == r.question_id);
            if same_question && r.status == TransportStatus::Ok {
                done.insert(r.index);
            }
        }
        RunLogWriter::append(log_path)?
    } else {
        let run_id = options
            .run_id
            .clone()
            .unwrap_or_else(|| format!("{}-{}", client.config.name, typeprobe_core::runlog::now_ms()));
        let header = RunHeader::new(run_id, &client.config.name, &client.config.model, &dataset.hash, total);
        RunLogWriter::create(log_path, &header)?
    };

    let samples: HashMap<&str, &typeprobe_core::generator::Sample> =
        dataset.samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let pending: Vec<usize> = (0..total)
        .filter(|i| !done.contains(i))
        .take(options.limit.unwrap_or(usize::MAX))
        .collect();
    let complete_after = done.len() + pending.len() == total;

    let mut answers = stream::iter(pending)
        .map(|index| {
            let q = &dataset.questions[index];
            let samples = &samples;
            async move {
                let png = match samples.get(q.sample_id.as_str()) {
                    Some(s) => dataset.image_bytes(s).map_err(|e| e.to_string()),
                    None => Err(format!("unknown sample {}", q.sample_id)),
                };
                let (result, attempts, latency_ms, http_status) = match png {
                    Ok(png) => {
                        let out = client.ask(&png, &build_prompt(q)).await;
                        (out.result, out.attempts, out.latency_ms, out.http_status)
                    }
                    Err(e) => (Err(e), 0, 0, None),
                };
                let (raw_response, status, error) = match result {
                    Ok(text) => (Some(text), TransportStatus::Ok, None),
                    Err(e) => (None, TransportStatus::Failed, Some(e)),
                };
                RunRecord {
                    index,
                    question_id: q.id.clone(),
                    raw_response,
                    latency_ms,
                    status,
                    attempts,
                    http_status,
                    error,
                }
            }
        })
        .buffer_unordered(client.config.max_in_flight);

    let mut finished = done.len();
    while let Some(record) = answers.next().await {
        writer.record(&record)?;
        finished += 1;
        if let Some(report) = progress {
            report(finished, total);
        }
    }
    drop(writer);

    let mut log = RunLog::read(log_path)?;
    if complete_after {
        log.finish();
        log.write(log_path)?;
    }
    Ok(log)
}
