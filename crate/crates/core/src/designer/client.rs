//! Chat-completion client.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::DesignError;

pub const DEFAULT_API_KEY_ENV: &str = "LOOMTEX_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

/// Anything that turns a message list into one reply.
pub trait ChatBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, DesignError>;

    fn model(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Full URL of the chat-completions resource.
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset means no auth header.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub temperature: f64,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}

fn default_timeout() -> u64 {
    30
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key_env: default_key_env(),
            timeout_secs: default_timeout(),
            temperature: 0.0,
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Blocking HTTP backend.
pub struct HttpBackend {
    config: EndpointConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        Self { config, agent }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, DesignError> {
        let body = ChatRequest { model: &self.config.model, messages, temperature: self.config.temperature };
        let mut req = self.agent.post(&self.config.url);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| DesignError::Endpoint(format!("{}: {e}", self.config.url)))?;
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| DesignError::Endpoint(format!("unreadable response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| DesignError::Endpoint("response has no message content".into()))
    }

    fn model(&self) -> &str {
        &self.config.model
    }
}
