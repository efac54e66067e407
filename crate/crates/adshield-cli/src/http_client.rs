//! Chat-completions HTTP client implementing the generation contract.
//!
//! Talks to any OpenAI-compatible endpoint. The API key comes from the
//! `ADSHIELD_LLM_API_KEY` environment variable; transient failures (429,
//! 5xx, transport errors) surface as retryable so the generation loop's
//! backoff applies.

use adshield_core::evasion::{ClientError, GenParams, LlmClient};
use serde::Deserialize;
use serde_json::json;

use crate::AppError;

pub const API_KEY_VAR: &str = "ADSHIELD_LLM_API_KEY";

pub struct HttpLlmClient {
    endpoint: String,
    api_key: String,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl HttpLlmClient {
    pub fn new(endpoint: String) -> Result<Self, AppError> {
        let api_key = std::env::var(API_KEY_VAR).map_err(|_| {
            AppError::Usage(format!("the http client needs {API_KEY_VAR} to be set"))
        })?;
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| AppError::Data(format!("cannot build http client: {e}")))?;
        Ok(HttpLlmClient {
            endpoint,
            api_key,
            http,
        })
    }
}

impl LlmClient for HttpLlmClient {
    fn send(&self, prompt: &str, llm_id: &str, params: &GenParams) -> Result<String, ClientError> {
        let body = json!({
            "model": llm_id,
            "temperature": params.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ClientError::Transient(format!("transport: {e}")))?;

        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(ClientError::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Err(ClientError::Permanent(format!("status {status}: {detail}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ClientError::Permanent(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ClientError::Permanent("response carried no choices".into()))
    }
}
