//! Unified configuration for the engine, gateway, and simulation lab.
//!
//! One TOML file configures everything; relative paths inside it resolve
//! against the directory containing the file, so a checked-in config works
//! from any working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guardrail::GenerationParams;
use crate::trust::{GroupThresholds, TrustError, TrustParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// How interaction timestamps are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeBase {
    /// Monotone per-user turn counter; decay is per turn.
    #[default]
    Logical,
    /// Unix seconds; decay is per second.
    WallClock,
}

/// How the gateway treats users with no attestations and no prior state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnonymousPolicy {
    /// Reject with 404.
    Reject,
    /// Uniform static guard: safe passes, unsafe is moderated. No trust
    /// state is created.
    #[default]
    Static,
    /// Full pipeline on direct trust alone.
    DtOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardrailSection {
    /// Fixed refusal returned on moderated and terminated turns.
    pub moderation_template: String,
    pub time_base: TimeBase,
    /// Granted high-risk interactions allowed before re-validation is
    /// required.
    pub revalidation_threshold: u32,
}

impl Default for GuardrailSection {
    fn default() -> Self {
        Self {
            moderation_template: "I'm sorry, I can't assist with that request.".to_string(),
            time_base: TimeBase::Logical,
            revalidation_threshold: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProvidersSection {
    pub embedding_dim: usize,
    /// Phrase lexicon CSV; the bundled lexicon is used when unset.
    pub lexicon: Option<PathBuf>,
    /// Area-expansion JSON; the bundled table is used when unset.
    pub areas: Option<PathBuf>,
    /// Knowledge-base JSONL; empty knowledge base when unset.
    pub knowledge_base: Option<PathBuf>,
    /// Remote relevance model; the deterministic overlap scorer is used
    /// when unset.
    pub remote_lm: Option<RemoteLmConfig>,
}

impl Default for ProvidersSection {
    fn default() -> Self {
        Self {
            embedding_dim: crate::providers::DEFAULT_EMBEDDING_DIM,
            lexicon: None,
            areas: None,
            knowledge_base: None,
            remote_lm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteLmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    #[serde(default = "default_lm_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_lm_connections")]
    pub max_connections: usize,
    /// Send the raw request text; when false a sanitized token set is sent.
    #[serde(default = "default_true")]
    pub send_raw_prompt: bool,
    /// Prompt template override; the bundled template is used when unset.
    #[serde(default)]
    pub prompt_template_path: Option<PathBuf>,
}

fn default_lm_timeout_ms() -> u64 {
    5_000
}

fn default_lm_connections() -> usize {
    8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewaySection {
    pub listen: String,
    /// Directory holding per-user event logs and snapshots.
    pub data_dir: PathBuf,
    pub anonymous_policy: AnonymousPolicy,
    /// Write a state snapshot after this many events per user.
    pub snapshot_interval: u64,
}

impl Default for GatewaySection {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".to_string(),
            data_dir: PathBuf::from("./state"),
            anonymous_policy: AnonymousPolicy::default(),
            snapshot_interval: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpstreamKind {
    /// Deterministic mock that replies with a digest of the injected
    /// context tiers.
    #[default]
    Echo,
    /// Chat-completions-compatible HTTP endpoint.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpstreamSection {
    pub kind: UpstreamKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
}

impl Default for UpstreamSection {
    fn default() -> Self {
        Self { kind: UpstreamKind::Echo, endpoint: None, model: None, api_key_env: None, timeout_ms: 30_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimlabSection {
    /// Re-validate automatically whenever the engine demands it during a
    /// replay, modeling a compliant scripted user.
    pub auto_revalidate: bool,
    /// Trust values swept by the tier probe.
    pub probe_trust_values: Vec<f64>,
    pub dataset: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
}

impl Default for SimlabSection {
    fn default() -> Self {
        Self {
            auto_revalidate: true,
            probe_trust_values: vec![0.0, 0.2, 0.4, 0.6, 0.79, 0.8, 0.85, 0.95, 0.96, 1.0],
            dataset: None,
            labels: None,
            profiles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub trust: TrustParams,
    /// Per-group decision thresholds; merged into `trust.beta_by_group`.
    pub groups: BTreeMap<String, GroupThresholds>,
    pub guardrail: GuardrailSection,
    /// Generation parameters per tier, index 0..=tier_count.
    pub tiers: Vec<GenerationParams>,
    pub providers: ProvidersSection,
    pub gateway: GatewaySection,
    pub upstream: UpstreamSection,
    pub simlab: SimlabSection,
}

impl Config {
    pub fn from_toml_str(data: &str) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(data)?;
        cfg.finish();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml_str(&data)?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    /// Fill derived fields after deserialization.
    fn finish(&mut self) {
        if !self.groups.is_empty() {
            self.trust.beta_by_group = self.groups.clone();
        } else {
            self.groups = self.trust.beta_by_group.clone();
        }
        if self.tiers.is_empty() {
            self.tiers = default_tier_table(self.trust.tier_count);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.trust.validate()?;
        if self.tiers.len() != self.trust.tier_count + 1 {
            return Err(ConfigError::Invalid(format!(
                "tier table has {} entries but tiers 0..={} need {}",
                self.tiers.len(),
                self.trust.tier_count,
                self.trust.tier_count + 1
            )));
        }
        let mut prev_tokens = 0u32;
        for (i, t) in self.tiers.iter().enumerate() {
            if !(t.temperature.is_finite() && t.temperature >= 0.0) {
                return Err(ConfigError::Invalid(format!("tier {i} temperature must be >= 0")));
            }
            if t.max_tokens == 0 {
                return Err(ConfigError::Invalid(format!("tier {i} max_tokens must be > 0")));
            }
            if t.max_tokens < prev_tokens {
                return Err(ConfigError::Invalid(format!(
                    "tier {i} max_tokens {} is smaller than tier {}'s {}",
                    t.max_tokens,
                    i - 1,
                    prev_tokens
                )));
            }
            prev_tokens = t.max_tokens;
        }
        if self.providers.embedding_dim == 0 {
            return Err(ConfigError::Invalid("embedding_dim must be > 0".into()));
        }
        if self.gateway.snapshot_interval == 0 {
            return Err(ConfigError::Invalid("snapshot_interval must be > 0".into()));
        }
        if self.upstream.kind == UpstreamKind::Http && self.upstream.endpoint.is_none() {
            return Err(ConfigError::Invalid("http upstream requires an endpoint".into()));
        }
        Ok(())
    }

    /// Re-root every relative path against `base`.
    fn resolve_relative(&mut self, base: &Path) {
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&path);
                }
            }
        };
        rebase(&mut self.providers.lexicon);
        rebase(&mut self.providers.areas);
        rebase(&mut self.providers.knowledge_base);
        if let Some(lm) = &mut self.providers.remote_lm {
            rebase(&mut lm.prompt_template_path);
        }
        rebase(&mut self.simlab.dataset);
        rebase(&mut self.simlab.labels);
        rebase(&mut self.simlab.profiles);
        if self.gateway.data_dir.is_relative() {
            self.gateway.data_dir = base.join(&self.gateway.data_dir);
        }
    }
}

fn default_tier_table(tier_count: usize) -> Vec<GenerationParams> {
    // Interpolate from a terse tier 0 to a generous top tier.
    let top = tier_count.max(1) as f64;
    (0..=tier_count)
        .map(|i| {
            let frac = i as f64 / top;
            GenerationParams {
                temperature: 0.2 + 0.5 * frac,
                max_tokens: (128.0 * 8f64.powf(frac)).round() as u32,
            }
        })
        .collect()
}
