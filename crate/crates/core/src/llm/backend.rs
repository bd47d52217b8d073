use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::PromptBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Remote => "remote",
            Self::Mock => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_repair_retries: u8,
    /// Environment variable holding the bearer token for the remote backend.
    pub api_key_env: Option<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            endpoint: None,
            model_name: "phi-3-mini-4k-instruct".into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout_secs: 60,
            max_repair_retries: 1,
            api_key_env: Some("PROVCHECK_API_KEY".into()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("temperature must be a non-negative number")]
    Temperature,
    #[error("max_repair_retries must be between 0 and 2, got {0}")]
    RepairRetries(u8),
    #[error("the remote backend needs an endpoint")]
    MissingEndpoint,
    #[error("cannot read mock script {path}: {reason}")]
    MockScript { path: String, reason: String },
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ConfigError::Temperature);
        }
        if self.max_repair_retries > 2 {
            return Err(ConfigError::RepairRetries(self.max_repair_retries));
        }
        if self.backend == BackendKind::Remote && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(ConfigError::MissingEndpoint);
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("model endpoint timed out")]
    Timeout,
    #[error("model endpoint answered with HTTP status {status}")]
    Status { status: u16, body: String },
    #[error("malformed response envelope: {0}")]
    MalformedEnvelope(String),
    #[error("no scripted response for request {digest} and no default")]
    Unscripted { digest: String },
}

/// Anything that can turn a prompt bundle into model text.
pub trait CompletionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError>;
}

/// Hex SHA-256 over the system prompt, a NUL byte and the user prompt.
pub fn request_digest(bundle: &PromptBundle) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bundle.system.as_bytes());
    hasher.update([0u8]);
    hasher.update(bundle.user.as_bytes());
    hex::encode(hasher.finalize())
}

/// Scripted responses keyed by request digest.
///
/// On disk this is a JSON object mapping hex digests to response text, with
/// an optional `"default"` entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(flatten)]
    pub responses: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

impl MockScript {
    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |reason: String| ConfigError::MockScript {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn insert(&mut self, bundle: &PromptBundle, response: impl Into<String>) {
        self.responses.insert(request_digest(bundle), response.into());
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("string maps serialize")
    }
}

#[derive(Debug)]
pub struct MockBackend {
    script: MockScript,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    /// Number of completions requested so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionBackend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let digest = request_digest(bundle);
        self.script
            .responses
            .get(&digest)
            .or(self.script.default.as_ref())
            .cloned()
            .ok_or(BackendError::Unscripted { digest })
    }
}

/// Chat-completions style HTTP backend.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    config: ModelConfig,
    api_key: Option<String>,
}

impl RemoteBackend {
    pub fn new(config: ModelConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        Ok(Self { config, api_key })
    }

    pub fn request_body(&self, bundle: &PromptBundle) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        })
    }
}

impl CompletionBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let mut request = agent.post(endpoint).header("content-type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::to_vec(&self.request_body(bundle)).expect("json values serialize");
        let mut response = request.send(&body[..]).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        let envelope: Value =
            serde_json::from_str(&text).map_err(|e| BackendError::MalformedEnvelope(e.to_string()))?;
        envelope
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| BackendError::MalformedEnvelope("missing choices[0].message.content".into()))
    }
}

/// Builds the backend named by `config`. The mock backend uses `script`, or
/// an empty script when none is given.
pub fn build_backend(
    config: &ModelConfig,
    script: Option<MockScript>,
) -> Result<Arc<dyn CompletionBackend>, ConfigError> {
    config.validate()?;
    Ok(match config.backend {
        BackendKind::Mock => Arc::new(MockBackend::new(script.unwrap_or_default())),
        BackendKind::Remote => Arc::new(RemoteBackend::new(config.clone())?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(user: &str) -> PromptBundle {
        PromptBundle {
            system: "S".into(),
            user: user.into(),
        }
    }

    #[test]
    fn mock_returns_scripted_then_default() {
        let mut script = MockScript::default();
        script.insert(&bundle("a"), "X");
        let mock = MockBackend::new(script.clone());
        assert_eq!(mock.complete(&bundle("a")).unwrap(), "X");
        assert!(matches!(mock.complete(&bundle("b")), Err(BackendError::Unscripted { .. })));
        let mock = MockBackend::new(script.with_default("D"));
        assert_eq!(mock.complete(&bundle("b")).unwrap(), "D");
    }

    #[test]
    fn script_file_shape() {
        let script = MockScript::from_json_str(r#"{"abc": "one", "default": "two"}"#).unwrap();
        assert_eq!(script.responses["abc"], "one");
        assert_eq!(script.default.as_deref(), Some("two"));
        assert_eq!(MockScript::from_json_str(&script.to_json_pretty()).unwrap(), script);
    }

    #[test]
    fn digest_separates_fields() {
        let a = PromptBundle { system: "ab".into(), user: "c".into() };
        let b = PromptBundle { system: "a".into(), user: "bc".into() };
        assert_ne!(request_digest(&a), request_digest(&b));
        assert_eq!(request_digest(&a).len(), 64);
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = ModelConfig { temperature: -0.1, ..ModelConfig::default() };
        assert_eq!(bad.validate(), Err(ConfigError::Temperature));
        let bad = ModelConfig { max_repair_retries: 3, ..ModelConfig::default() };
        assert_eq!(bad.validate(), Err(ConfigError::RepairRetries(3)));
        let bad = ModelConfig { backend: BackendKind::Remote, ..ModelConfig::default() };
        assert_eq!(bad.validate(), Err(ConfigError::MissingEndpoint));
    }

    #[test]
    fn remote_request_shape() {
        let backend = RemoteBackend::new(ModelConfig {
            backend: BackendKind::Remote,
            endpoint: Some("http://127.0.0.1:9/v1/chat/completions".into()),
            api_key_env: None,
            ..ModelConfig::default()
        })
        .unwrap();
        let body = backend.request_body(&bundle("u"));
        assert_eq!(body["messages"][0], json!({"role": "system", "content": "S"}));
        assert_eq!(body["messages"][1], json!({"role": "user", "content": "u"}));
        assert_eq!(body["temperature"], json!(0.0));
        assert_eq!(body["max_tokens"], json!(1024));
    }
}
