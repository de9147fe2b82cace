//! Pure trust-scoring primitives.
//!
//! Everything in this module is a side-effect-free function of its
//! arguments; all numeric state (interaction windows, decayed counts,
//! dialogue averages) lives in caller-supplied values. Stateful session
//! tracking is layered on top in [`crate::guardrail::session`].

mod ops;

pub use ops::{
    adaptive_weight, aggregate_attributes, area_relevance, authority_trust, composite_trust,
    confidence, cosine_similarity, decay_factor, direct_trust, interaction_consistency,
    similarity_of_views, update_counts,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by trust computations and parameter validation.
#[derive(Debug, Error)]
pub enum TrustError {
    /// `now` precedes `then`; decayed weights are undefined for negative
    /// elapsed time, so a regressing clock is surfaced instead of masked.
    #[error("clock regression: now={now} precedes then={then}")]
    ClockRegression { now: u64, then: u64 },
    /// Two vectors that must share a dimension do not.
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    /// No attestation contributed a usable (non-zero) aggregation weight.
    /// Callers treat this as "authority trust unavailable" and fall back to
    /// direct trust alone.
    #[error("no usable attestation: every authority*similarity*confidence weight is zero")]
    NoUsableAttestation,
    /// A parameter is outside its declared domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// TTP ranking levels, ordered so that `Top` compares greatest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranking {
    Low,
    Medium,
    Top,
}

impl std::fmt::Display for Ranking {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ranking::Low => write!(f, "low"),
            Ranking::Medium => write!(f, "medium"),
            Ranking::Top => write!(f, "top"),
        }
    }
}

/// Safety label assigned to a single interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafetyLabel {
    Safe,
    Unsafe,
}

impl SafetyLabel {
    pub fn is_safe(self) -> bool {
        matches!(self, SafetyLabel::Safe)
    }
}

/// Authority weight per ranking level. `top` is pinned to 1.0; the three
/// weights must be monotone `top >= medium >= low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuthorityWeights {
    pub top: f64,
    pub medium: f64,
    pub low: f64,
}

impl AuthorityWeights {
    pub fn get(&self, ranking: Ranking) -> f64 {
        match ranking {
            Ranking::Top => self.top,
            Ranking::Medium => self.medium,
            Ranking::Low => self.low,
        }
    }

    fn validate(&self) -> Result<(), TrustError> {
        for (name, v) in [("top", self.top), ("medium", self.medium), ("low", self.low)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(TrustError::InvalidParam {
                    name: "authority",
                    reason: format!("{name} weight {v} outside [0,1]"),
                });
            }
        }
        if self.top != 1.0 {
            return Err(TrustError::InvalidParam {
                name: "authority",
                reason: format!("top weight must be 1.0, got {}", self.top),
            });
        }
        if self.top < self.medium || self.medium < self.low {
            return Err(TrustError::InvalidParam {
                name: "authority",
                reason: "weights must satisfy top >= medium >= low".into(),
            });
        }
        Ok(())
    }
}

impl Default for AuthorityWeights {
    fn default() -> Self {
        Self { top: 1.0, medium: 0.6, low: 0.3 }
    }
}

/// Per-group decision thresholds. `beta_relax` is the access threshold
/// (grant tiered access at or above it) and `beta_strict` the termination
/// threshold (terminate and lock below it). Values above 1.0 are allowed
/// and simply disable the corresponding branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupThresholds {
    pub beta_relax: f64,
    pub beta_strict: f64,
}

impl Default for GroupThresholds {
    fn default() -> Self {
        Self { beta_relax: 0.8, beta_strict: 0.4 }
    }
}

/// Tunable constants for the whole trust pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustParams {
    /// Time-decay constant per unit of logical time, >= 0.
    pub gamma: f64,
    /// Sliding-window length in interactions, >= 1.
    pub window: usize,
    /// Weight of the interaction-consistency term in direct trust, in [0,1].
    pub ic_weight: f64,
    /// Amplification applied to unsafe mass in direct trust, >= 1.
    pub unsafe_coeff: f64,
    /// Dialogue-average direct-trust gate for the adaptive weight, in [0,1].
    pub delta: f64,
    /// Baseline/scaling factor of the adaptive weight, in [0,1].
    pub theta: f64,
    /// Steepness of the adaptive-weight sigmoid, > 0.
    pub steepness: f64,
    /// Access-level threshold of the tier mapping, > 0.
    pub xi: f64,
    /// Total number of knowledge tiers (tiers are indexed 0..=tier_count).
    pub tier_count: usize,
    /// Decision thresholds per user group; the `default` entry applies to
    /// groups without their own entry.
    pub beta_by_group: BTreeMap<String, GroupThresholds>,
    /// Authority weight per TTP ranking.
    pub authority: AuthorityWeights,
}

impl Default for TrustParams {
    fn default() -> Self {
        let mut beta_by_group = BTreeMap::new();
        beta_by_group.insert("default".to_string(), GroupThresholds::default());
        Self {
            gamma: 0.05,
            window: 10,
            ic_weight: 1.0,
            unsafe_coeff: 2.0,
            delta: 0.5,
            theta: 0.5,
            steepness: 10.0,
            xi: 0.3,
            tier_count: 3,
            beta_by_group,
            authority: AuthorityWeights::default(),
        }
    }
}

impl TrustParams {
    pub fn validate(&self) -> Result<(), TrustError> {
        fn check(name: &'static str, ok: bool, reason: String) -> Result<(), TrustError> {
            if ok {
                Ok(())
            } else {
                Err(TrustError::InvalidParam { name, reason })
            }
        }
        check("gamma", self.gamma.is_finite() && self.gamma >= 0.0, format!("{} must be >= 0", self.gamma))?;
        check("window", self.window >= 1, "must be >= 1".into())?;
        check(
            "ic_weight",
            self.ic_weight.is_finite() && (0.0..=1.0).contains(&self.ic_weight),
            format!("{} outside [0,1]", self.ic_weight),
        )?;
        check(
            "unsafe_coeff",
            self.unsafe_coeff.is_finite() && self.unsafe_coeff >= 1.0,
            format!("{} must be >= 1", self.unsafe_coeff),
        )?;
        check("delta", self.delta.is_finite() && (0.0..=1.0).contains(&self.delta), format!("{} outside [0,1]", self.delta))?;
        check("theta", self.theta.is_finite() && (0.0..=1.0).contains(&self.theta), format!("{} outside [0,1]", self.theta))?;
        check("steepness", self.steepness.is_finite() && self.steepness > 0.0, format!("{} must be > 0", self.steepness))?;
        // xi > 1 is degenerate (everything maps to tier 0) but legal.
        check("xi", self.xi.is_finite() && self.xi > 0.0, format!("{} must be > 0", self.xi))?;
        check("tier_count", self.tier_count >= 1, "must be >= 1".into())?;
        self.authority.validate()?;
        for (group, t) in &self.beta_by_group {
            check(
                "beta_by_group",
                t.beta_relax.is_finite() && t.beta_strict.is_finite() && t.beta_strict >= 0.0 && t.beta_strict <= t.beta_relax,
                format!("group `{group}` must satisfy 0 <= beta_strict <= beta_relax"),
            )?;
        }
        Ok(())
    }

    /// Thresholds for `group`, falling back to the `default` entry and then
    /// to the built-in defaults.
    pub fn thresholds_for(&self, group: &str) -> GroupThresholds {
        self.beta_by_group
            .get(group)
            .or_else(|| self.beta_by_group.get("default"))
            .copied()
            .unwrap_or_default()
    }
}

/// One observed interaction, as retained in a user's sliding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// Logical time of the interaction (monotone non-decreasing per user).
    pub timestamp: u64,
    /// Embedding of the interaction text; unit length or the zero vector.
    pub embedding: Vec<f64>,
    pub safety: SafetyLabel,
    /// Whether sensitive access was granted on this turn.
    pub granted: bool,
}

/// Snapshot of the direct-trust state after an interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustSnapshot {
    /// Decayed safe mass.
    pub a: f64,
    /// Decayed unsafe mass.
    pub b: f64,
    /// Interaction consistency of the latest turn, in [0,1].
    pub ic: f64,
    /// Direct trust of the latest turn, in (0,1).
    pub dt: f64,
    /// Mean direct trust over the dialogue so far, in [0,1].
    pub dt_history_mean: f64,
}

impl Default for TrustSnapshot {
    fn default() -> Self {
        // A fresh user sits at the uninformative prior.
        Self { a: 0.0, b: 0.0, ic: 1.0, dt: 0.5, dt_history_mean: 0.5 }
    }
}

/// Per-TTP factors feeding the authority-trust aggregation. All fields are
/// in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtpEvaluation {
    pub authority: f64,
    pub similarity: f64,
    pub confidence: f64,
    pub normalized_rating: f64,
    pub area_relevance: f64,
}

impl TtpEvaluation {
    /// Aggregation weight: authority * similarity * confidence.
    pub fn weight(&self) -> f64 {
        self.authority * self.similarity * self.confidence
    }

    /// Copy with every omitted factor pinned to the constant 1, so the
    /// factor cancels out of both the numerator and the weights of the
    /// authority-trust aggregation.
    pub fn masked(&self, omit: &OmitSet) -> TtpEvaluation {
        TtpEvaluation {
            authority: if omit.authority { 1.0 } else { self.authority },
            similarity: if omit.similarity { 1.0 } else { self.similarity },
            confidence: if omit.confidence { 1.0 } else { self.confidence },
            normalized_rating: if omit.normalized_rating { 1.0 } else { self.normalized_rating },
            area_relevance: if omit.area_relevance { 1.0 } else { self.area_relevance },
        }
    }
}

/// Which authority-trust factors to neutralize (for ablation runs). An
/// omitted factor is replaced by the constant 1 wherever it appears in the
/// aggregation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OmitSet {
    pub area_relevance: bool,
    pub authority: bool,
    pub similarity: bool,
    pub confidence: bool,
    pub normalized_rating: bool,
}

impl OmitSet {
    pub const KEYS: [&'static str; 5] = ["AR", "A", "S", "C", "NR"];

    pub fn is_empty(&self) -> bool {
        *self == OmitSet::default()
    }

    /// Parse a comma-separated list of factor keys (`AR`, `A`, `S`, `C`,
    /// `NR`), case-insensitive. Unknown keys are rejected.
    pub fn parse_keys(list: &str) -> Result<Self, String> {
        let mut omit = OmitSet::default();
        for key in list.split(',').map(str::trim).filter(|k| !k.is_empty()) {
            match key.to_ascii_uppercase().as_str() {
                "AR" => omit.area_relevance = true,
                "A" => omit.authority = true,
                "S" => omit.similarity = true,
                "C" => omit.confidence = true,
                "NR" => omit.normalized_rating = true,
                other => return Err(format!("unknown omit key `{other}` (expected AR, A, S, C, NR)")),
            }
        }
        Ok(omit)
    }

    /// Canonical label, e.g. `none` or `AR,NR`.
    pub fn label(&self) -> String {
        let mut keys = Vec::new();
        if self.area_relevance {
            keys.push("AR");
        }
        if self.authority {
            keys.push("A");
        }
        if self.similarity {
            keys.push("S");
        }
        if self.confidence {
            keys.push("C");
        }
        if self.normalized_rating {
            keys.push("NR");
        }
        if keys.is_empty() {
            "none".to_string()
        } else {
            keys.join(",")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate() {
        TrustParams::default().validate().unwrap();
    }

    #[test]
    fn authority_top_must_be_one() {
        let mut p = TrustParams::default();
        p.authority.top = 0.9;
        assert!(p.validate().is_err());
    }

    #[test]
    fn authority_must_be_monotone() {
        let mut p = TrustParams::default();
        p.authority.medium = 0.2;
        p.authority.low = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn unsafe_coeff_below_one_rejected() {
        let mut p = TrustParams::default();
        p.unsafe_coeff = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn beta_strict_above_relax_rejected() {
        let mut p = TrustParams::default();
        p.beta_by_group
            .insert("x".into(), GroupThresholds { beta_relax: 0.3, beta_strict: 0.5 });
        assert!(p.validate().is_err());
    }

    #[test]
    fn disabled_thresholds_above_one_allowed() {
        let mut p = TrustParams::default();
        p.beta_by_group
            .insert("sealed".into(), GroupThresholds { beta_relax: 1.5, beta_strict: 1.5 });
        p.validate().unwrap();
    }

    #[test]
    fn thresholds_fall_back_to_default_group() {
        let p = TrustParams::default();
        let t = p.thresholds_for("nonexistent");
        assert_eq!(t.beta_relax, 0.8);
        assert_eq!(t.beta_strict, 0.4);
    }

    #[test]
    fn ranking_orders_top_greatest() {
        assert!(Ranking::Top > Ranking::Medium);
        assert!(Ranking::Medium > Ranking::Low);
    }

    #[test]
    fn omit_set_round_trips_keys() {
        let omit = OmitSet::parse_keys("ar, NR").unwrap();
        assert!(omit.area_relevance && omit.normalized_rating);
        assert!(!omit.authority && !omit.similarity && !omit.confidence);
        assert_eq!(omit.label(), "AR,NR");
        assert_eq!(OmitSet::parse_keys("").unwrap().label(), "none");
        assert!(OmitSet::parse_keys("XYZ").is_err());
    }

    #[test]
    fn masked_evaluation_pins_omitted_factors_to_one() {
        let eval = TtpEvaluation {
            authority: 0.6,
            similarity: 0.7,
            confidence: 0.8,
            normalized_rating: 0.9,
            area_relevance: 0.4,
        };
        let masked = eval.masked(&OmitSet::parse_keys("A,AR").unwrap());
        assert_eq!(masked.authority, 1.0);
        assert_eq!(masked.area_relevance, 1.0);
        assert_eq!(masked.similarity, 0.7);
        assert_eq!(masked.confidence, 0.8);
        assert_eq!(masked.normalized_rating, 0.9);
    }
}
