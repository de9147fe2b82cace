//! TTP attestation registry, freshness tracking, and conversion of raw
//! attestations into the per-TTP factors consumed by the authority-trust
//! aggregation. Also owns the mandatory periodic re-validation state.
//!
//! Attestations here are trusted records: no signatures, no revocation
//! lists, no TTP network protocol. Import/export is plain JSON matching
//! the [`TtpAttestation`] field list.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{normalized_cosine, ProviderSet};
use crate::trust::{
    aggregate_attributes, area_relevance, confidence, similarity_of_views, Ranking, TrustParams,
    TtpEvaluation,
};

/// Default attestation validity: 30 days when timestamps are wall-clock
/// seconds; effectively unlimited for turn-indexed logical time.
pub const DEFAULT_ATTESTATION_TTL: u64 = 30 * 24 * 60 * 60;

#[derive(Debug, Error)]
pub enum AttestationError {
    #[error("rating_credit {credit} exceeds rating_scale_max {scale}")]
    RatingAboveScale { credit: f64, scale: f64 },
    #[error("rating_scale_max must be positive and finite, got {scale}")]
    InvalidScale { scale: f64 },
    #[error("rating_credit must be non-negative and finite, got {credit}")]
    InvalidCredit { credit: f64 },
    #[error("no fresh attestation on file; re-validation refused")]
    NoFreshAttestation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One attribute tally inside an attestation, e.g. six positive
/// `peer_review` marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeTally {
    pub kind: String,
    pub polarity: Polarity,
    pub count: u64,
}

/// One TTP's claims about one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtpAttestation {
    pub ttp_id: String,
    pub user_id: String,
    pub ranking: Ranking,
    /// Free-text professional area, e.g. "computer science".
    pub area: String,
    pub rating_credit: f64,
    pub rating_scale_max: f64,
    #[serde(default)]
    pub attributes: Vec<AttributeTally>,
    pub issued_at: u64,
    #[serde(default = "default_ttl")]
    pub ttl: u64,
}

fn default_ttl() -> u64 {
    DEFAULT_ATTESTATION_TTL
}

impl TtpAttestation {
    pub fn validate(&self) -> Result<(), AttestationError> {
        if !self.rating_scale_max.is_finite() || self.rating_scale_max <= 0.0 {
            return Err(AttestationError::InvalidScale { scale: self.rating_scale_max });
        }
        if !self.rating_credit.is_finite() || self.rating_credit < 0.0 {
            return Err(AttestationError::InvalidCredit { credit: self.rating_credit });
        }
        if self.rating_credit > self.rating_scale_max {
            return Err(AttestationError::RatingAboveScale {
                credit: self.rating_credit,
                scale: self.rating_scale_max,
            });
        }
        Ok(())
    }

    pub fn is_fresh(&self, now: u64) -> bool {
        now <= self.issued_at.saturating_add(self.ttl)
    }

    /// Rating credit scaled to [0,1] by the TTP's declared maximum.
    pub fn normalized_rating(&self) -> f64 {
        (self.rating_credit / self.rating_scale_max).clamp(0.0, 1.0)
    }

    fn split_counts(&self) -> (Vec<u64>, Vec<u64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for tally in &self.attributes {
            match tally.polarity {
                Polarity::Positive => pos.push(tally.count),
                Polarity::Negative => neg.push(tally.count),
            }
        }
        (pos, neg)
    }
}

/// Opaque id of a stored attestation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttestationId(pub u64);

struct Stored {
    att: TtpAttestation,
}

/// In-memory attestation store, at most one active attestation per
/// `(ttp_id, user_id)`: registering again supersedes the previous record.
///
/// Reads are concurrent; writes serialize behind one lock, which is
/// adequate at the scale this registry serves.
#[derive(Default)]
pub struct AttestationRegistry {
    inner: RwLock<Inner>,
}

#[derive(Default)]
struct Inner {
    next_id: u64,
    by_user: HashMap<String, Vec<Stored>>,
}

impl AttestationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validate and store; a record from the same `(ttp_id, user_id)`
    /// replaces the previous one.
    pub fn register(&self, att: TtpAttestation) -> Result<AttestationId, AttestationError> {
        att.validate()?;
        let mut inner = self.inner.write().expect("registry lock poisoned");
        inner.next_id += 1;
        let id = inner.next_id;
        let list = inner.by_user.entry(att.user_id.clone()).or_default();
        list.retain(|s| s.att.ttp_id != att.ttp_id);
        list.push(Stored { att });
        Ok(AttestationId(id))
    }

    pub fn import(&self, atts: Vec<TtpAttestation>) -> Result<Vec<AttestationId>, AttestationError> {
        atts.into_iter().map(|a| self.register(a)).collect()
    }

    /// All attestations on file for a user, fresh or stale.
    pub fn export_for(&self, user_id: &str) -> Vec<TtpAttestation> {
        let inner = self.inner.read().expect("registry lock poisoned");
        let mut atts: Vec<TtpAttestation> = inner
            .by_user
            .get(user_id)
            .map(|list| list.iter().map(|s| s.att.clone()).collect())
            .unwrap_or_default();
        atts.sort_by(|x, y| x.ttp_id.cmp(&y.ttp_id));
        atts
    }

    /// Fresh attestations for a user at `now`, ordered by `ttp_id` so that
    /// downstream floating-point aggregation is reproducible.
    pub fn fresh_for(&self, user_id: &str, now: u64) -> Vec<TtpAttestation> {
        let mut atts = self.export_for(user_id);
        atts.retain(|a| a.is_fresh(now));
        atts
    }

    pub fn count_for(&self, user_id: &str) -> usize {
        let inner = self.inner.read().expect("registry lock poisoned");
        inner.by_user.get(user_id).map_or(0, Vec::len)
    }

    pub fn has_fresh(&self, user_id: &str, now: u64) -> bool {
        let inner = self.inner.read().expect("registry lock poisoned");
        inner
            .by_user
            .get(user_id)
            .is_some_and(|list| list.iter().any(|s| s.att.is_fresh(now)))
    }
}

/// Re-validation bookkeeping for one user: granted high-risk interactions
/// since the last successful identity re-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevalidationState {
    pub user_id: String,
    pub high_risk_count_since_validation: u32,
    pub last_validated_at: Option<u64>,
}

impl RevalidationState {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self { user_id: user_id.into(), high_risk_count_since_validation: 0, last_validated_at: None }
    }

    pub fn record_high_risk(&mut self) {
        self.high_risk_count_since_validation += 1;
    }

    pub fn needs_revalidation(&self, threshold: u32) -> bool {
        self.high_risk_count_since_validation >= threshold
    }

    pub fn reset(&mut self, now: u64) {
        self.high_risk_count_since_validation = 0;
        self.last_validated_at = Some(now);
    }
}

/// Outcome of converting a user's fresh attestations into aggregation
/// factors.
#[derive(Debug, Clone, Default)]
pub struct TtpAssessment {
    /// Per-TTP factors paired with the attesting TTP's ranking.
    pub evaluations: Vec<(Ranking, TtpEvaluation)>,
    /// True when the remote relevance model was unreachable and the
    /// embedding-only estimate was used instead.
    pub lm_degraded: bool,
}

/// Derive the per-TTP factors for `input` from fresh attestations.
///
/// For each attestation: authority from the ranking map, normalized rating
/// from the declared scale, confidence from authority-scaled attribute
/// tallies, similarity of views against the dialogue-average direct trust,
/// and area relevance from the better of embedding similarity and the
/// relevance model. A missing relevance model degrades to the embedding
/// estimate alone.
pub fn evaluate_ttps(
    fresh: &[TtpAttestation],
    input_text: &str,
    dt_mean: f64,
    providers: &ProviderSet,
    params: &TrustParams,
) -> TtpAssessment {
    let mut assessment = TtpAssessment::default();
    if fresh.is_empty() {
        return assessment;
    }
    let input_embedding = providers.embedder.embed(input_text);
    for att in fresh {
        let authority = params.authority.get(att.ranking);
        let nr = att.normalized_rating();
        let (pos_counts, neg_counts) = att.split_counts();
        let (pos, neg) = aggregate_attributes(&pos_counts, &neg_counts, authority);
        let c = confidence(pos, neg);
        let s = similarity_of_views(dt_mean, nr);
        let area_embedding = providers.embedder.embed(&att.area);
        let cos_n = normalized_cosine(&area_embedding, &input_embedding)
            .expect("provider embeddings share one dimension");
        let lm = match providers.relevance.relevance(&att.area, input_text) {
            Ok(score) => score,
            // Any relevance failure degrades to the embedding estimate:
            // area_relevance(cos_n, 0) == cos_n.
            Err(_) => {
                assessment.lm_degraded = true;
                0.0
            }
        };
        let ar = area_relevance(cos_n, lm);
        assessment.evaluations.push((
            att.ranking,
            TtpEvaluation {
                authority,
                similarity: s,
                confidence: c,
                normalized_rating: nr,
                area_relevance: ar,
            },
        ));
    }
    assessment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attestation(ttp: &str, user: &str) -> TtpAttestation {
        TtpAttestation {
            ttp_id: ttp.into(),
            user_id: user.into(),
            ranking: Ranking::Medium,
            area: "computer science".into(),
            rating_credit: 4.0,
            rating_scale_max: 5.0,
            attributes: vec![
                AttributeTally { kind: "job_title".into(), polarity: Polarity::Positive, count: 2 },
                AttributeTally { kind: "complaint".into(), polarity: Polarity::Negative, count: 1 },
            ],
            issued_at: 0,
            ttl: 100,
        }
    }

    #[test]
    fn register_and_fetch_round_trip() {
        let reg = AttestationRegistry::new();
        reg.register(attestation("ttp1", "alice")).unwrap();
        let fresh = reg.fresh_for("alice", 10);
        assert_eq!(fresh.len(), 1);
        assert_eq!(fresh[0].ttp_id, "ttp1");
    }

    #[test]
    fn newer_attestation_supersedes_same_ttp() {
        let reg = AttestationRegistry::new();
        reg.register(attestation("ttp1", "alice")).unwrap();
        let mut newer = attestation("ttp1", "alice");
        newer.rating_credit = 5.0;
        reg.register(newer).unwrap();
        let fresh = reg.fresh_for("alice", 10);
        assert_eq!(fresh.len(), 1);
        assert_eq!(fresh[0].rating_credit, 5.0);
    }

    #[test]
    fn rating_above_scale_is_rejected() {
        let mut att = attestation("ttp1", "alice");
        att.rating_credit = 6.0;
        assert!(matches!(
            AttestationRegistry::new().register(att),
            Err(AttestationError::RatingAboveScale { .. })
        ));
    }

    #[test]
    fn expired_attestations_are_not_fresh() {
        let reg = AttestationRegistry::new();
        reg.register(attestation("ttp1", "alice")).unwrap();
        assert!(reg.fresh_for("alice", 101).is_empty());
        assert!(!reg.has_fresh("alice", 101));
        assert_eq!(reg.count_for("alice"), 1);
        // Freshness is inclusive at exactly issued_at + ttl.
        assert!(reg.has_fresh("alice", 100));
    }

    #[test]
    fn revalidation_threshold_and_reset() {
        let mut state = RevalidationState::new("alice");
        for _ in 0..9 {
            state.record_high_risk();
        }
        assert!(!state.needs_revalidation(10));
        state.record_high_risk();
        assert!(state.needs_revalidation(10));
        state.reset(42);
        assert!(!state.needs_revalidation(10));
        assert_eq!(state.high_risk_count_since_validation, 0);
        assert_eq!(state.last_validated_at, Some(42));
    }

    #[test]
    fn evaluate_ttps_empty_input_yields_empty_assessment() {
        let providers = ProviderSet::reference();
        let params = TrustParams::default();
        let assessment = evaluate_ttps(&[], "anything", 0.5, &providers, &params);
        assert!(assessment.evaluations.is_empty());
    }

    #[test]
    fn evaluate_ttps_composes_factors() {
        let providers = ProviderSet::reference();
        let params = TrustParams::default();
        let mut att = attestation("ttp1", "alice");
        att.ranking = Ranking::Top;
        att.rating_credit = 5.0;
        att.attributes = vec![AttributeTally {
            kind: "peer_review".into(),
            polarity: Polarity::Positive,
            count: 3,
        }];
        let assessment = evaluate_ttps(
            &[att],
            "write code to hack into the computer network software system",
            0.5,
            &providers,
            &params,
        );
        assert_eq!(assessment.evaluations.len(), 1);
        let (ranking, eval) = &assessment.evaluations[0];
        assert_eq!(*ranking, Ranking::Top);
        assert_eq!(eval.authority, 1.0);
        assert_eq!(eval.normalized_rating, 1.0);
        // 3 positive marks at authority 1.0: (3+1)/(3+2) beta mean.
        assert!((eval.confidence - 4.0 / 5.0).abs() < 1e-12);
        // similarity: 1 - |0.5 - 1.0|
        assert!((eval.similarity - 0.5).abs() < 1e-12);
        // The prompt contains all five expansion tokens, so the overlap
        // scorer saturates and area relevance is 1.
        assert_eq!(eval.area_relevance, 1.0);
        assert!(!assessment.lm_degraded);
    }
}
