//! Line-delimited run logs: a header, one record per answered question, and
//! a footer written when the run completes. Raw responses are stored verbatim.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RUNLOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub format_version: u32,
    pub run_id: String,
    pub endpoint: String,
    pub model: String,
    /// Hash of the dataset whose question manifest was answered.
    pub manifest_hash: String,
    pub question_count: usize,
    pub started_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Position of the question in the manifest.
    pub index: usize,
    pub question_id: String,
    pub raw_response: Option<String>,
    pub latency_ms: u64,
    pub status: TransportStatus,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFooter {
    pub finished_at_ms: u64,
    pub answered: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(RunHeader),
    Record(RunRecord),
    Footer(RunFooter),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLog {
    pub header: RunHeader,
    pub records: Vec<RunRecord>,
    pub footer: Option<RunFooter>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunHeader {
    pub fn new(run_id: impl Into<String>, endpoint: impl Into<String>, model: impl Into<String>, manifest_hash: impl Into<String>, question_count: usize) -> Self {
        RunHeader {
            format_version: RUNLOG_FORMAT_VERSION,
            run_id: run_id.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            manifest_hash: manifest_hash.into(),
            question_count,
            started_at_ms: now_ms(),
        }
    }
}

impl RunLog {
    pub fn new(header: RunHeader) -> Self {
        RunLog {
            header,
            records: Vec::new(),
            footer: None,
        }
    }

    /// Read a log, tolerating a truncated final line from an interrupted run.
    /// Later records for the same question replace earlier ones.
    pub fn read(path: impl AsRef<Path>) -> Result<RunLog> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        let mut header = None;
        let mut records: Vec<RunRecord> = Vec::new();
        let mut footer = None;
        let last = lines.len().saturating_sub(1);
        for (n, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = match serde_json::from_str(line) {
                Ok(l) => l,
                Err(_) if n == last && header.is_some() => break,
                Err(e) => return Err(Error::parse(path, format!("line {}: {e}", n + 1))),
            };
            match parsed {
                Line::Header(h) => header = Some(h),
                Line::Record(r) => records.push(r),
                Line::Footer(f) => footer = Some(f),
            }
        }
        let header = header.ok_or_else(|| Error::parse(path, "missing run header"))?;
        let mut log = RunLog {
            header,
            records,
            footer,
        };
        log.normalize();
        Ok(log)
    }

    /// Keep the last record per index and sort by index.
    pub fn normalize(&mut self) {
        let mut by_index = std::collections::BTreeMap::new();
        for r in self.records.drain(..) {
            by_index.insert(r.index, r);
        }
        self.records = by_index.into_values().collect();
    }

    pub fn answered(&self) -> usize {
        self.records.iter().filter(|r| r.status == TransportStatus::Ok).count()
    }

    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.status == TransportStatus::Failed).count()
    }

    pub fn finish(&mut self) {
        self.normalize();
        self.footer = Some(RunFooter {
            finished_at_ms: now_ms(),
            answered: self.answered(),
            failed: self.failed(),
        });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: Line| {
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        };
        push(Line::Header(self.header.clone()));
        for r in &self.records {
            push(Line::Record(r.clone()));
        }
        if let Some(f) = &self.footer {
            push(Line::Footer(f.clone()));
        }
        out
    }

    /// Replace the file at `path` with this log (write then rename).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("log.tmp");
        std::fs::write(&tmp, self.to_jsonl()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

/// Appends records to a log file, flushing after each one.
pub struct RunLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RunLogWriter {
    /// Start a new log file containing only `header`.
    pub fn create(path: impl AsRef<Path>, header: &RunHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = RunLogWriter {
            path,
            out: BufWriter::new(file),
        };
        w.write_line(&Line::Header(header.clone()))?;
        Ok(w)
    }

    /// Continue an existing log. A partial trailing line is cut off first.
    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        let file = OpenOptions::new().write(true).open(&path).map_err(|e| Error::io(&path, e))?;
        file.set_len(keep as u64).map_err(|e| Error::io(&path, e))?;
        drop(file);
        let file = OpenOptions::new().append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RunLogWriter {
            path,
            out: BufWriter::new(file),
        })
    }

    fn write_line(&mut self, line: &Line) -> Result<()> {
        let text = serde_json::to_string(line).expect("serializable");
        writeln!(self.out, "{text}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn record(&mut self, record: &RunRecord) -> Result<()> {
        self.write_line(&Line::Record(record.clone()))
    }
}
