//! Provider adapters: a filesystem mock and the two chat-completion wire
//! shapes, with retry/backoff on transient failures.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Error, Result};

use super::prompt::PromptSpec;

/// Which adapter `complete` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Deterministic fixture lookup by prompt hash; no network.
    Mock,
    /// OpenAI-style `/v1/chat/completions`.
    OpenAi,
    /// Gemini-style `models/<model>:generateContent`.
    Gemini,
}

/// Connection and sampling settings for one provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Base URL; empty selects the provider default. The
    /// `GENXSS_LLM_ENDPOINT` environment variable overrides either.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Base backoff delay; doubles per retry.
    pub retry_base_ms: u64,
    /// Fixture directory for the mock provider.
    pub mock_dir: Option<PathBuf>,
}

impl ProviderConfig {
    pub fn mock(dir: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint: String::new(),
            model: "mock".to_string(),
            temperature: 0.0,
            api_key_env: "GENXSS_LLM_API_KEY".to_string(),
            timeout_secs: 30,
            max_retries: 3,
            retry_base_ms: 500,
            mock_dir: Some(dir.into()),
        }
    }

    pub fn provider_id(&self) -> &'static str {
        match self.kind {
            ProviderKind::Mock => "mock",
            ProviderKind::OpenAi => "openai",
            ProviderKind::Gemini => "gemini",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.kind == ProviderKind::Mock && self.mock_dir.is_none() {
            return Err(Error::Config(
                "mock provider needs a fixture directory".into(),
            ));
        }
        Ok(())
    }

    fn effective_endpoint(&self) -> String {
        if let Ok(endpoint) = std::env::var("GENXSS_LLM_ENDPOINT") {
            if !endpoint.is_empty() {
                return endpoint;
            }
        }
        if !self.endpoint.is_empty() {
            return self.endpoint.clone();
        }
        match self.kind {
            ProviderKind::Mock => String::new(),
            ProviderKind::OpenAi => "https://api.openai.com".to_string(),
            ProviderKind::Gemini => "https://generativelanguage.googleapis.com".to_string(),
        }
    }
}

/// Token accounting when the provider reports it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Assistant text plus provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub provider: String,
    pub prompt_hash: String,
    pub usage: Option<Usage>,
}

/// Complete a prompt through the configured provider. Remote adapters send
/// a chat-style JSON request and retry with exponential backoff on 429 and
/// 5xx up to `max_retries`.
pub fn complete(prompt: &PromptSpec, cfg: &ProviderConfig) -> Result<LlmResponse> {
    cfg.validate()?;
    match cfg.kind {
        ProviderKind::Mock => complete_mock(prompt, cfg),
        ProviderKind::OpenAi | ProviderKind::Gemini => complete_remote(prompt, cfg),
    }
}

fn complete_mock(prompt: &PromptSpec, cfg: &ProviderConfig) -> Result<LlmResponse> {
    let dir = cfg.mock_dir.as_ref().expect("validated");
    let hash = prompt.hash();
    let path = dir.join(format!("{hash}.txt"));
    match std::fs::read_to_string(&path) {
        Ok(text) => Ok(LlmResponse {
            text,
            provider: cfg.provider_id().to_string(),
            prompt_hash: hash,
            usage: None,
        }),
        Err(_) => {
            // fixture authoring aid: record the prompt that had no fixture
            if let Ok(record_dir) = std::env::var("GENXSS_MOCK_RECORD") {
                if !record_dir.is_empty() {
                    let _ = std::fs::create_dir_all(&record_dir);
                    let _ = std::fs::write(
                        PathBuf::from(&record_dir).join(format!("{hash}.prompt.txt")),
                        prompt.render(),
                    );
                }
            }
            Err(Error::MissingMockFixture {
                hash,
                prompt: prompt.render(),
            })
        }
    }
}

/// OpenAI-style request body.
pub fn openai_request_body(prompt: &PromptSpec, cfg: &ProviderConfig) -> Value {
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": prompt.system_role},
            {"role": "user", "content": prompt.user_message()},
        ],
    })
}

/// Gemini-style request body.
pub fn gemini_request_body(prompt: &PromptSpec, cfg: &ProviderConfig) -> Value {
    json!({
        "system_instruction": {"parts": [{"text": prompt.system_role}]},
        "contents": [{"role": "user", "parts": [{"text": prompt.user_message()}]}],
        "generationConfig": {"temperature": cfg.temperature},
    })
}

fn parse_openai_response(body: &Value) -> Result<(String, Option<Usage>)> {
    let text = body["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| Error::BadResponse("missing choices[0].message.content".into()))?
        .to_string();
    let usage = body.get("usage").map(|u| Usage {
        prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
    });
    Ok((text, usage))
}

fn parse_gemini_response(body: &Value) -> Result<(String, Option<Usage>)> {
    let parts = body["candidates"][0]["content"]["parts"]
        .as_array()
        .ok_or_else(|| Error::BadResponse("missing candidates[0].content.parts".into()))?;
    let text: String = parts
        .iter()
        .filter_map(|p| p["text"].as_str())
        .collect::<Vec<_>>()
        .join("");
    if text.is_empty() {
        return Err(Error::BadResponse("empty candidate text".into()));
    }
    let usage = body.get("usageMetadata").map(|u| Usage {
        prompt_tokens: u["promptTokenCount"].as_u64().unwrap_or(0),
        completion_tokens: u["candidatesTokenCount"].as_u64().unwrap_or(0),
    });
    Ok((text, usage))
}

fn complete_remote(prompt: &PromptSpec, cfg: &ProviderConfig) -> Result<LlmResponse> {
    let api_key = std::env::var(&cfg.api_key_env).map_err(|_| Error::MissingApiKey {
        var: cfg.api_key_env.clone(),
    })?;
    let endpoint = cfg.effective_endpoint();
    let (url, body) = match cfg.kind {
        ProviderKind::OpenAi => (
            format!("{}/v1/chat/completions", endpoint.trim_end_matches('/')),
            openai_request_body(prompt, cfg),
        ),
        ProviderKind::Gemini => (
            format!(
                "{}/v1beta/models/{}:generateContent?key={}",
                endpoint.trim_end_matches('/'),
                cfg.model,
                api_key
            ),
            gemini_request_body(prompt, cfg),
        ),
        ProviderKind::Mock => unreachable!(),
    };

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(cfg.timeout_secs))
        .build()
        .map_err(|e| Error::Network(e.to_string()))?;

    let mut last_status = 0u16;
    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(
                cfg.retry_base_ms.saturating_mul(1 << (attempt - 1)),
            ));
        }
        let mut request = client.post(&url).json(&body);
        if cfg.kind == ProviderKind::OpenAi {
            request = request.bearer_auth(&api_key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Err(Error::Timeout),
            Err(e) => return Err(Error::Network(e.to_string())),
        };
        let status = response.status().as_u16();
        if status == 429 || (500..600).contains(&status) {
            last_status = status;
            continue;
        }
        if !(200..300).contains(&status) {
            return Err(Error::HttpStatus { status });
        }
        let body: Value = response
            .json()
            .map_err(|e| Error::BadResponse(e.to_string()))?;
        let (text, usage) = match cfg.kind {
            ProviderKind::OpenAi => parse_openai_response(&body)?,
            ProviderKind::Gemini => parse_gemini_response(&body)?,
            ProviderKind::Mock => unreachable!(),
        };
        return Ok(LlmResponse {
            text,
            provider: cfg.provider_id().to_string(),
            prompt_hash: prompt.hash(),
            usage,
        });
    }
    Err(Error::RetriesExhausted {
        attempts: cfg.max_retries + 1,
        last_status,
    })
}
