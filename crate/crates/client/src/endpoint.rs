use std::path::Path;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{ClientError, Result};

pub const TEMPERATURE: f64 = 0.0;
pub const MAX_TOKENS: u32 = 100;
pub const TOP_P: f64 = 1.0;

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}
fn default_backoff() -> u64 {
    500
}

/// One configured endpoint. The API key is read from `key_env` at startup
/// and never written to disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub name: String,
    /// Base URL; requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub key_env: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// First retry delay; doubled on every further attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(ClientError::Config("endpoint name is empty".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ClientError::Config(format!("{}: max_in_flight must be at least 1", self.name)));
        }
        if self.key_env.trim().is_empty() {
            return Err(ClientError::Config(format!("{}: key_env is empty", self.name)));
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// `[[endpoint]]` tables in a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointFile {
    #[serde(default)]
    pub endpoint: Vec<EndpointConfig>,
}

impl EndpointFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let err = |message: String| ClientError::ConfigFile {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let file: EndpointFile = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
        for e in &file.endpoint {
            e.validate().map_err(|e| err(e.to_string()))?;
        }
        Ok(file)
    }

    pub fn get(&self, name: &str) -> Result<&EndpointConfig> {
        self.endpoint
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| ClientError::UnknownEndpoint(name.to_string()))
    }
}

/// Chat-completions request body for one question.
pub fn request_body(model: &str, prompt: &str, png: &[u8]) -> Value {
    let data_url = format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(png)
    );
    json!({
        "model": model,
        "messages": [{
            "role": "user",
            "content": [
                {"type": "image_url", "image_url": {"url": data_url}},
                {"type": "text", "text": prompt}
            ]
        }],
        "temperature": TEMPERATURE,
        "max_tokens": MAX_TOKENS,
        "top_p": TOP_P,
        "frequency_penalty": 0.0,
        "presence_penalty": 0.0
    })
}

/// Text of the first choice; content given as parts is concatenated.
fn response_text(body: &Value) -> Option<String> {
    let content = body.get("choices")?.get(0)?.get("message")?.get("content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<String>(),
        ),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskOutcome {
    /// Verbatim response text, or the final error message.
    pub result: std::result::Result<String, String>,
    pub attempts: u32,
    pub latency_ms: u64,
    pub http_status: Option<u16>,
}

enum Attempt {
    Done(String, u16),
    Retry(String, Option<u16>),
    Fatal(String, Option<u16>),
}

pub struct Client {
    pub config: EndpointConfig,
    api_key: String,
    http: reqwest::Client,
}

impl Client {
    /// Resolve the API key from the environment and build the HTTP client.
    pub fn new(config: EndpointConfig) -> Result<Self> {
        config.validate()?;
        let api_key = std::env::var(&config.key_env).map_err(|_| ClientError::MissingEnv(config.key_env.clone()))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: EndpointConfig, api_key: String) -> Result<Self> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ClientError::Http(e.to_string()))?;
        Ok(Client { config, api_key, http })
    }

    async fn attempt(&self, body: &Value) -> Attempt {
        let resp = self
            .http
            .post(self.config.url())
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .await;
        let resp = match resp {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}"), None),
        };
        let status = resp.status();
        let code = status.as_u16();
        if status.is_success() {
            return match resp.json::<Value>().await {
                Ok(v) => match response_text(&v) {
                    Some(text) => Attempt::Done(text, code),
                    None => Attempt::Fatal(format!("unexpected response shape: {v}"), Some(code)),
                },
                Err(e) => Attempt::Retry(format!("reading response: {e}"), Some(code)),
            };
        }
        let detail = resp.text().await.unwrap_or_default();
        let msg = format!("http {code}: {}", detail.chars().take(200).collect::<String>());
        if status.is_server_error() || code == 408 || code == 429 {
            Attempt::Retry(msg, Some(code))
        } else {
            Attempt::Fatal(msg, Some(code))
        }
    }

    /// Send one question, retrying transient failures with exponential backoff.
    pub async fn ask(&self, png: &[u8], prompt: &str) -> AskOutcome {
        let body = request_body(&self.config.model, prompt, png);
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let (result, status) = match self.attempt(&body).await {
                Attempt::Done(text, code) => (Ok(text), Some(code)),
                Attempt::Fatal(msg, code) => (Err(msg), code),
                Attempt::Retry(msg, code) => {
                    if attempts <= self.config.max_retries {
                        let delay = self.config.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                        tokio::time::sleep(Duration::from_millis(delay)).await;
                        continue;
                    }
                    (Err(msg), code)
                }
            };
            return AskOutcome {
                result,
                attempts,
                latency_ms: start.elapsed().as_millis() as u64,
                http_status: status,
            };
        }
    }
}
