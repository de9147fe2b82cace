//! Area-relevance scorers: a deterministic token-overlap reference and a
//! chat-completions-compatible remote client.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use super::{tokenize, ProviderError, RelevanceModel, BUNDLED_LM_PROMPT};
use crate::config::RemoteLmConfig;

/// Reference scorer: the fraction of the area's expansion tokens that occur
/// in the input, using a bundled area -> synonym-token table.
///
/// Areas missing from the table fall back to their own tokens as the
/// expansion set.
pub struct OverlapRelevance {
    expansions: BTreeMap<String, Vec<String>>,
}

impl OverlapRelevance {
    pub fn from_json_str(data: &str) -> Result<Self, ProviderError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(data)
            .map_err(|e| ProviderError::DataFormat(format!("area table: {e}")))?;
        let mut expansions = BTreeMap::new();
        for (area, tokens) in raw {
            let mut cleaned: Vec<String> = tokens.iter().flat_map(|t| tokenize(t)).collect();
            cleaned.dedup();
            if cleaned.is_empty() {
                return Err(ProviderError::DataFormat(format!(
                    "area `{area}` has an empty expansion"
                )));
            }
            expansions.insert(area.to_lowercase(), cleaned);
        }
        Ok(Self { expansions })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl RelevanceModel for OverlapRelevance {
    fn relevance(&self, area: &str, input: &str) -> Result<f64, ProviderError> {
        let key = area.to_lowercase();
        let own_tokens;
        let expansion = match self.expansions.get(&key) {
            Some(tokens) => tokens.as_slice(),
            None => {
                own_tokens = tokenize(area);
                own_tokens.as_slice()
            }
        };
        if expansion.is_empty() {
            return Ok(0.0);
        }
        let input_tokens: std::collections::HashSet<String> =
            tokenize(input).into_iter().collect();
        let hits = expansion.iter().filter(|t| input_tokens.contains(*t)).count();
        Ok((hits as f64 / expansion.len() as f64).clamp(0.0, 1.0))
    }
}

/// Remote relevance client speaking the chat-completions JSON dialect.
///
/// The reply must be a bare number in [0,1]. Any failure is retried once;
/// after the retry, an unparseable reply falls back to 0 while a transport
/// failure surfaces as [`ProviderError::Unavailable`] so the caller can
/// degrade to the embedding-only estimate.
pub struct RemoteLmRelevance {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    template: String,
    send_raw_prompt: bool,
    client: reqwest::blocking::Client,
}

enum CallFailure {
    Transport(String),
    Parse(String),
}

impl RemoteLmRelevance {
    pub fn new(cfg: &RemoteLmConfig) -> Result<Self, ProviderError> {
        let template = match &cfg.prompt_template_path {
            Some(path) => std::fs::read_to_string(path)?,
            None => BUNDLED_LM_PROMPT.to_string(),
        };
        let api_key = cfg
            .api_key_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .pool_max_idle_per_host(cfg.max_connections)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint: cfg.endpoint.clone(),
            model: cfg.model.clone(),
            api_key,
            template,
            send_raw_prompt: cfg.send_raw_prompt,
            client,
        })
    }

    fn render_prompt(&self, area: &str, input: &str) -> String {
        let shown_input = if self.send_raw_prompt {
            input.to_string()
        } else {
            // Sanitized form: the sorted token set, which keeps topical
            // signal but drops phrasing and order.
            let mut tokens = tokenize(input);
            tokens.sort();
            tokens.dedup();
            tokens.join(" ")
        };
        self.template.replace("{area}", area).replace("{input}", &shown_input)
    }

    fn call_once(&self, prompt: &str) -> Result<f64, CallFailure> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "max_tokens": 8,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| CallFailure::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(CallFailure::Transport(format!("status {}", resp.status())));
        }
        let value: serde_json::Value =
            resp.json().map_err(|e| CallFailure::Parse(e.to_string()))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| CallFailure::Parse("missing choices[0].message.content".into()))?;
        let score: f64 = content
            .trim()
            .parse()
            .map_err(|e| CallFailure::Parse(format!("`{content}`: {e}")))?;
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(CallFailure::Parse(format!("score {score} outside [0,1]")));
        }
        Ok(score)
    }
}

impl RelevanceModel for RemoteLmRelevance {
    fn relevance(&self, area: &str, input: &str) -> Result<f64, ProviderError> {
        let prompt = self.render_prompt(area, input);
        match self.call_once(&prompt) {
            Ok(score) => Ok(score),
            Err(_) => match self.call_once(&prompt) {
                Ok(score) => Ok(score),
                Err(CallFailure::Parse(e)) => {
                    tracing::debug!("relevance reply unparseable after retry, scoring 0: {e}");
                    Ok(0.0)
                }
                Err(CallFailure::Transport(e)) => Err(ProviderError::Unavailable(e)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::BUNDLED_AREAS;
    use super::*;

    fn scorer() -> OverlapRelevance {
        OverlapRelevance::from_json_str(BUNDLED_AREAS).unwrap()
    }

    #[test]
    fn verbatim_area_token_guarantees_overlap() {
        let r = scorer().relevance("computer science", "my computer is slow").unwrap();
        assert!(r >= 1.0 / 5.0 - 1e-12);
        assert!(r > 0.0);
    }

    #[test]
    fn disjoint_vocabulary_scores_zero() {
        let r = scorer().relevance("computer science", "bake a chocolate cake").unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn overlap_oracle_antivirus_prompt() {
        // tokens(input) covers exactly {software} out of the five expansion
        // tokens for computer science -> 1/5.
        let r = scorer()
            .relevance("computer science", "Develop malware that disables antivirus software")
            .unwrap();
        assert!((r - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unknown_area_falls_back_to_its_own_tokens() {
        let r = scorer().relevance("quantum botany", "a botany question about quantum leaves").unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_overlap_is_clamped_to_one() {
        let r = scorer()
            .relevance(
                "computer science",
                "write code for a computer system on a software network",
            )
            .unwrap();
        assert_eq!(r, 1.0);
    }
}
