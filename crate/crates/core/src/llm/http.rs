//! Chat-completion client: `POST {base_url}/chat/completions` with a bearer
//! token, request `{model, messages, temperature, max_tokens}` and reply
//! text taken from `choices[0].message.content`.

use std::time::Duration;

use rand::Rng;
use serde_json::{json, Value};
use tracing::warn;

use super::{Backend, BackendSettings, CompletionRequest, LlmError};

pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: String,
    max_retries: u32,
    base_delay: Duration,
}

enum Failure {
    Retryable(String),
    Fatal(LlmError),
}

impl HttpBackend {
    pub fn new(settings: &BackendSettings, api_key: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(settings.timeout()).build();
        Self {
            agent,
            url: format!("{}/chat/completions", settings.base_url.trim_end_matches('/')),
            model: settings.model_name.clone(),
            api_key: api_key.into(),
            max_retries: settings.max_retries,
            base_delay: Duration::from_millis(settings.retry_base_delay_ms),
        }
    }

    /// Reads the key from the variable named by `settings.api_key_env_var`.
    pub fn from_env(settings: &BackendSettings) -> Result<Self, LlmError> {
        let var = &settings.api_key_env_var;
        match std::env::var(var) {
            Ok(key) if !key.is_empty() => Ok(Self::new(settings, key)),
            _ => Err(LlmError::MissingApiKey { var: var.clone() }),
        }
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::with_capacity(2);
        if !request.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_text}));
        }
        messages.push(json!({"role": "user", "content": request.user_text}));
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let result = self
            .agent
            .post(&self.url)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .send_json(body.clone());
        match result {
            Ok(response) => {
                let value: Value = response
                    .into_json()
                    .map_err(|e| Failure::Fatal(LlmError::MalformedResponse(e.to_string())))?;
                extract_content(&value).map_err(Failure::Fatal)
            }
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                match status {
                    401 | 403 => Err(Failure::Fatal(LlmError::Authentication { status, body })),
                    408 | 429 | 500..=599 => Err(Failure::Retryable(format!("status {status}: {body}"))),
                    _ => Err(Failure::Fatal(LlmError::Rejected { status, body })),
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Failure::Retryable(t.to_string())),
        }
    }

    /// Delay before retry number `retry` (0-based): base * 2^retry plus up
    /// to half of that again as jitter.
    fn backoff(&self, retry: u32) -> Duration {
        let delay = self.base_delay.saturating_mul(2u32.saturating_pow(retry));
        let jitter = rand::thread_rng().gen_range(0.0..=0.5);
        delay + delay.mul_f64(jitter)
    }
}

fn extract_content(value: &Value) -> Result<String, LlmError> {
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?;
    if content.trim().is_empty() {
        return Err(LlmError::MalformedResponse("empty completion".into()));
    }
    Ok(content.to_string())
}

impl Backend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        if request.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("user_text is empty".into()));
        }
        let body = self.body(request);
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    warn!(tag = %request.tag, attempt = attempt + 1, error = %msg, "completion failed");
                    last_error = msg;
                }
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts: self.max_retries + 1,
            last_error,
        })
    }
}
