//! Chat-completion client used for real caption generation.

use std::time::Duration;

use divcap_core::augment::{BackendFailure, CompletionBackend};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub retries: u32,
    pub timeout_s: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-3.5-turbo-0613".into(),
            api_key_env: "DIVCAP_API_KEY".into(),
            max_in_flight: 4,
            retries: 3,
            timeout_s: 60.0,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err("timeout_s must be positive".into());
        }
        Ok(())
    }
}

/// Delay before retry `attempt` (1-based): one second, doubling, capped at
/// thirty.
pub fn backoff_delay(attempt: u32) -> Duration {
    let secs = 1u64 << attempt.saturating_sub(1).min(5);
    Duration::from_secs(secs.min(30))
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: String,
}

pub struct ApiBackend {
    config: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl ApiBackend {
    /// Reads the key from the configured environment variable.
    pub fn from_env(config: BackendConfig) -> anyhow::Result<Self> {
        config.validate().map_err(anyhow::Error::msg)?;
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| anyhow::anyhow!("environment variable {} is not set", config.api_key_env))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: BackendConfig, api_key: String) -> anyhow::Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build()?;
        Ok(ApiBackend { config, api_key, client })
    }
}

impl CompletionBackend for ApiBackend {
    fn backend_id(&self) -> String {
        format!("api:{}", self.config.endpoint)
    }

    fn model_name(&self) -> Option<String> {
        Some(self.config.model_name.clone())
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendFailure> {
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: [ChatMessage { role: "user", content: prompt }],
            temperature: 0.0,
        };
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendFailure(format!("transport: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendFailure(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| BackendFailure(format!("bad response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendFailure("response had no choices".into()))
    }

    fn backoff(&self, attempt: u32) {
        std::thread::sleep(backoff_delay(attempt));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_then_caps() {
        let secs: Vec<u64> = (1..=8).map(|a| backoff_delay(a).as_secs()).collect();
        assert_eq!(secs, [1, 2, 4, 8, 16, 30, 30, 30]);
    }

    #[test]
    fn missing_key_is_reported() {
        let cfg = BackendConfig { api_key_env: "DIVCAP_TEST_UNSET_KEY_VAR".into(), ..BackendConfig::default() };
        let err = ApiBackend::from_env(cfg).err().unwrap();
        assert!(err.to_string().contains("DIVCAP_TEST_UNSET_KEY_VAR"));
    }
}
