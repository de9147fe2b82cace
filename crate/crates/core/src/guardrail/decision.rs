//! Decision types returned by the guardrail engine.

use serde::{Deserialize, Serialize};

/// Decision level: how strictly this turn was handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Tiered access granted.
    Relax,
    /// Moderated; the interaction continues.
    Normal,
    /// Terminated; the session is locked pending re-validation.
    Strict,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Relax => write!(f, "relax"),
            Level::Normal => write!(f, "normal"),
            Level::Strict => write!(f, "strict"),
        }
    }
}

/// Concrete action taken on the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Input was safe; answer without restriction.
    PassThrough,
    /// Unsafe input, trusted user: answer with tier-bounded context.
    TieredAnswer,
    /// Unsafe input, insufficient trust: return the moderation template.
    Moderate,
    /// Unsafe input, trust below the strict threshold: refuse and lock.
    Terminate,
}

/// Machine-readable explanations attached to a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReasonCode {
    SafeInput,
    UnsafeInput,
    TrustOk,
    TrustBelowBeta,
    TrustBelowStrict,
    NeedsRevalidation,
    StaleAttestation,
    NoAttestation,
    LmUnavailable,
}

/// The trust terms behind a decision: direct trust, authority-verified
/// trust (when available), and the adaptive weight that blended them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustComponents {
    pub dt: f64,
    pub at: Option<f64>,
    pub eta: f64,
}

/// Full outcome of one guardrail evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardrailDecision {
    pub level: Level,
    pub action: Action,
    /// Knowledge tier unlocked for this turn, 0..=tier_count.
    pub tier: usize,
    /// Composite trust score in [0,1].
    pub trust: f64,
    pub components: TrustComponents,
    pub reasons: Vec<ReasonCode>,
    /// Category tag from the safety classifier for unsafe inputs.
    pub category: Option<String>,
}

impl GuardrailDecision {
    pub fn grants_access(&self) -> bool {
        matches!(self.action, Action::TieredAnswer)
    }
}
