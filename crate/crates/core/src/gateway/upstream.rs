//! Upstream LLM clients: a deterministic echo mock for tests and replays,
//! and a chat-completions-compatible HTTP client for real deployments.

use std::time::Duration;

use thiserror::Error;

use crate::config::UpstreamSection;
use crate::guardrail::GenerationParams;

#[derive(Debug, Error)]
pub enum UpstreamError {
    #[error("upstream transport: {0}")]
    Transport(String),
    #[error("upstream response malformed: {0}")]
    Malformed(String),
}

pub trait UpstreamLlm: Send + Sync {
    fn complete(
        &self,
        system_context: &str,
        user_message: &str,
        params: &GenerationParams,
    ) -> Result<String, UpstreamError>;
}

/// Mock upstream that replies with a digest of the injected context — the
/// tier markers and a content fingerprint rather than the content itself —
/// so tier leakage is mechanically checkable from the outside.
pub struct EchoUpstream;

impl UpstreamLlm for EchoUpstream {
    fn complete(
        &self,
        system_context: &str,
        user_message: &str,
        params: &GenerationParams,
    ) -> Result<String, UpstreamError> {
        let tiers: Vec<String> = system_context
            .lines()
            .filter_map(|l| l.strip_prefix("[tier "))
            .filter_map(|l| l.split_once(' ').map(|(t, _)| t.to_string()))
            .collect();
        let entries = system_context.lines().filter(|l| !l.trim().is_empty()).count();
        let fingerprint = fnv64_hex(system_context);
        Ok(format!(
            "echo(tiers=[{}], entries={}, ctx={}, temp={:.2}, max_tokens={}) :: {}",
            tiers.join(","),
            entries,
            fingerprint,
            params.temperature,
            params.max_tokens,
            user_message
        ))
    }
}

fn fnv64_hex(text: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Chat-completions HTTP client; the context bundle rides in the system
/// message.
pub struct HttpUpstream {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpUpstream {
    pub fn new(cfg: &UpstreamSection) -> Result<Self, UpstreamError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| UpstreamError::Malformed("http upstream requires an endpoint".into()))?;
        let api_key = cfg
            .api_key_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| UpstreamError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint,
            model: cfg.model.clone().unwrap_or_else(|| "default".to_string()),
            api_key,
            client,
        })
    }
}

impl UpstreamLlm for HttpUpstream {
    fn complete(
        &self,
        system_context: &str,
        user_message: &str,
        params: &GenerationParams,
    ) -> Result<String, UpstreamError> {
        let mut messages = Vec::new();
        if !system_context.is_empty() {
            messages.push(serde_json::json!({"role": "system", "content": system_context}));
        }
        messages.push(serde_json::json!({"role": "user", "content": user_message}));
        let body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| UpstreamError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(UpstreamError::Transport(format!("status {}", resp.status())));
        }
        let value: serde_json::Value =
            resp.json().map_err(|e| UpstreamError::Malformed(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| UpstreamError::Malformed("missing choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_is_deterministic_and_reports_tiers() {
        let params = GenerationParams { temperature: 0.55, max_tokens: 512 };
        let ctx = "[tier 1 | weapons] w1\n[tier 2 | weapons] w2";
        let a = EchoUpstream.complete(ctx, "hello", &params).unwrap();
        let b = EchoUpstream.complete(ctx, "hello", &params).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("tiers=[1,2]"));
        assert!(a.contains("entries=2"));
        assert!(a.ends_with(":: hello"));
        // The digest must not leak the context text itself.
        assert!(!a.contains("w1"));
    }

    #[test]
    fn echo_with_empty_context() {
        let params = GenerationParams { temperature: 0.2, max_tokens: 128 };
        let reply = EchoUpstream.complete("", "hi there", &params).unwrap();
        assert!(reply.contains("tiers=[]"));
        assert!(reply.contains("entries=0"));
    }
}
