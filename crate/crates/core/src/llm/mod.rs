//! Text completion over a chat-completion HTTP API or a scripted stand-in.

mod http;
mod scripted;

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64_hex;

pub use http::HttpBackend;
pub use scripted::{echo_placeholder, ScriptEntry, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Scripted,
}

/// What a scripted backend does once its script runs out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionMode {
    #[default]
    Error,
    Echo,
}

fn default_api_key_env_var() -> String {
    "GABM_API_KEY".to_string()
}

fn default_temperature() -> f64 {
    0.7
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout_seconds() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_retry_base_delay_ms() -> u64 {
    1_000
}

/// Backend selection. API keys never appear here, only the name of the
/// environment variable that holds one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSettings {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub model_name: String,
    #[serde(default = "default_api_key_env_var")]
    pub api_key_env_var: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub base_url: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_seconds")]
    pub timeout_seconds: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// First backoff delay; each further retry doubles it.
    #[serde(default = "default_retry_base_delay_ms")]
    pub retry_base_delay_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<String>,
    #[serde(default)]
    pub exhaustion_mode: ExhaustionMode,
}

impl BackendSettings {
    fn with_kind(kind: BackendKind) -> Self {
        Self {
            kind,
            model_name: String::new(),
            api_key_env_var: default_api_key_env_var(),
            base_url: String::new(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            timeout_seconds: default_timeout_seconds(),
            max_retries: default_max_retries(),
            retry_base_delay_ms: default_retry_base_delay_ms(),
            script_path: None,
            exhaustion_mode: ExhaustionMode::Error,
        }
    }

    pub fn scripted(script_path: Option<String>, exhaustion_mode: ExhaustionMode) -> Self {
        Self {
            script_path,
            exhaustion_mode,
            ..Self::with_kind(BackendKind::Scripted)
        }
    }

    pub fn http(
        model_name: impl Into<String>,
        base_url: impl Into<String>,
        api_key_env_var: impl Into<String>,
    ) -> Self {
        Self {
            model_name: model_name.into(),
            base_url: base_url.into(),
            api_key_env_var: api_key_env_var.into(),
            ..Self::with_kind(BackendKind::Http)
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_seconds)
    }

    /// Constraint violations as (field, message) pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |field: &str, msg: &str| v.push((field.to_string(), msg.to_string()));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            push("temperature", "must be a finite number >= 0");
        }
        if self.max_tokens == 0 {
            push("max_tokens", "must be at least 1");
        }
        match self.kind {
            BackendKind::Http => {
                if self.model_name.trim().is_empty() {
                    push("model_name", "required for the http backend");
                }
                if self.base_url.trim().is_empty() {
                    push("base_url", "required for the http backend");
                }
                if self.api_key_env_var.trim().is_empty() {
                    push("api_key_env_var", "required for the http backend");
                }
                if self.timeout_seconds == 0 {
                    push("timeout_seconds", "must be at least 1");
                }
            }
            BackendKind::Scripted => {
                if self.script_path.is_none() && self.exhaustion_mode != ExhaustionMode::Echo {
                    push("script_path", "required unless exhaustion_mode = \"echo\"");
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Caller label such as `gm.resolve`; scripts may match on it.
    pub tag: String,
}

impl CompletionRequest {
    pub fn new(
        settings: &BackendSettings,
        tag: impl Into<String>,
        system_text: impl Into<String>,
        user_text: impl Into<String>,
    ) -> Self {
        Self {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: settings.temperature,
            max_tokens: settings.max_tokens,
            tag: tag.into(),
        }
    }

    /// Hash input for the transcript: system and user text separated by a
    /// blank line.
    pub fn prompt_text(&self) -> String {
        format!("{}\n\n{}", self.system_text, self.user_text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend settings: {0}")]
    InvalidSettings(String),
    #[error("environment variable {var} holding the API key is not set")]
    MissingApiKey { var: String },
    #[error("authentication failed with status {status}: {body}")]
    Authentication { status: u16, body: String },
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last_error}")]
    RetriesExhausted { attempts: u32, last_error: String },
    #[error("malformed API response: {0}")]
    MalformedResponse(String),
    #[error("script exhausted after {calls} calls")]
    ScriptExhausted { calls: usize },
    #[error("script error at line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Anything that turns a prompt into completion text. Implementations must
/// tolerate concurrent calls.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

/// Build the backend described by `settings`. Relative script paths resolve
/// against `base_dir`, normally the scenario file's directory.
pub fn connect(settings: &BackendSettings, base_dir: &Path) -> Result<Box<dyn Backend>, LlmError> {
    let problems = settings.violations();
    if !problems.is_empty() {
        let msg: Vec<String> = problems.iter().map(|(f, m)| format!("{f}: {m}")).collect();
        return Err(LlmError::InvalidSettings(msg.join("; ")));
    }
    match settings.kind {
        BackendKind::Scripted => {
            let backend = match &settings.script_path {
                Some(path) => ScriptedBackend::load(&base_dir.join(path), settings.exhaustion_mode)?,
                None => ScriptedBackend::new(Vec::new(), settings.exhaustion_mode),
            };
            Ok(Box::new(backend))
        }
        BackendKind::Http => Ok(Box::new(HttpBackend::from_env(settings)?)),
    }
}

/// One line of the audit trail kept for every completion call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub tag: String,
    pub prompt_hash: String,
    pub response_hash: String,
}

/// Wraps a backend and records every successful call, in call order.
pub struct Recorder<'a> {
    inner: &'a dyn Backend,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl<'a> Recorder<'a> {
    pub fn new(inner: &'a dyn Backend) -> Self {
        Self {
            inner,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("transcript lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().expect("transcript lock").clone()
    }
}

impl Backend for Recorder<'_> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        if request.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("user_text is empty".into()));
        }
        let response = self.inner.complete(request)?;
        self.entries.lock().expect("transcript lock").push(TranscriptEntry {
            tag: request.tag.clone(),
            prompt_hash: fnv1a64_hex(&request.prompt_text()),
            response_hash: fnv1a64_hex(&response),
        });
        Ok(response)
    }
}
