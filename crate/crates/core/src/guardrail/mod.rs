//! The guardrail decision engine.
//!
//! One evaluation classifies the input, updates the user's rolling trust
//! state, blends direct and authority-verified trust under the adaptive
//! weight, and maps the composite score onto a decision level:
//!
//! * `relax` — trust at or above the group's access threshold: answer with
//!   knowledge-base context bounded by the trust-mapped tier;
//! * `normal` — below the access threshold: return the moderation
//!   template, interaction continues;
//! * `strict` — below the termination threshold: refuse, lock the session.
//!
//! Granted unsafe turns consume re-validation budget; once the budget is
//! spent, authority-verified trust is withheld until the user re-validates
//! with a trusted third party.

mod decision;
mod knowledge;
pub mod session;

pub use decision::{Action, GuardrailDecision, Level, ReasonCode, TrustComponents};
pub use knowledge::{compose_context, render_context, KnowledgeBase, KnowledgeEntry};
pub use session::{SessionStatus, TrustState};

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{
    evaluate_ttps, AttestationError, AttestationRegistry, RevalidationState,
};
use crate::config::{Config, TimeBase};
use crate::providers::{
    HashEmbedder, LexiconClassifier, OverlapRelevance, ProviderError, ProviderSet,
    RemoteLmRelevance, SafetyVerdict,
};
use crate::trust::{
    adaptive_weight, authority_trust, composite_trust, OmitSet, Ranking, TrustError, TrustParams,
};

#[derive(Debug, Error)]
pub enum GuardrailError {
    #[error("session closed ({status})")]
    SessionClosed { status: SessionStatus },
    #[error("input is empty")]
    EmptyInput,
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("provider failure: {0}")]
    Provider(ProviderError),
    #[error(transparent)]
    Revalidation(#[from] AttestationError),
    #[error("knowledge base: {0}")]
    Knowledge(String),
}

impl From<ProviderError> for GuardrailError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::EmptyText => GuardrailError::EmptyInput,
            other => GuardrailError::Provider(other),
        }
    }
}

/// Per-tier generation parameters for the upstream model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Identity of the requesting user for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct UserContext<'a> {
    pub user_id: &'a str,
    pub group: &'a str,
}

/// Map a trust score to a knowledge tier: `min(floor(T / xi), tier_count)`.
pub fn tier_index(trust: f64, params: &TrustParams) -> usize {
    let raw = (trust / params.xi).floor();
    if raw.is_sign_negative() || raw.is_nan() {
        0
    } else if raw >= params.tier_count as f64 {
        params.tier_count
    } else {
        raw as usize
    }
}

/// The decision engine. Evaluation is a pure function of the session
/// snapshot, the attestation registry, and the providers; all per-user
/// mutation happens on caller-owned state, so distinct users can be
/// evaluated fully in parallel.
pub struct GuardrailEngine {
    params: TrustParams,
    providers: ProviderSet,
    kb: KnowledgeBase,
    moderation_template: String,
    tiers: Vec<GenerationParams>,
    revalidation_threshold: u32,
    time_base: TimeBase,
    omit: OmitSet,
}

impl GuardrailEngine {
    pub fn new(
        params: TrustParams,
        providers: ProviderSet,
        kb: KnowledgeBase,
        moderation_template: impl Into<String>,
        tiers: Vec<GenerationParams>,
        revalidation_threshold: u32,
        time_base: TimeBase,
    ) -> Result<Self, GuardrailError> {
        params.validate()?;
        kb.validate(params.tier_count)?;
        Ok(Self {
            params,
            providers,
            kb,
            moderation_template: moderation_template.into(),
            tiers,
            revalidation_threshold,
            time_base,
            omit: OmitSet::default(),
        })
    }

    /// Build the engine, providers, and knowledge base described by a
    /// config.
    pub fn from_config(config: &Config) -> Result<Self, GuardrailError> {
        config.validate().map_err(|e| GuardrailError::Knowledge(e.to_string()))?;
        let classifier: std::sync::Arc<dyn crate::providers::SafetyClassifier> =
            match &config.providers.lexicon {
                Some(path) => std::sync::Arc::new(LexiconClassifier::from_path(path)?),
                None => std::sync::Arc::new(
                    LexiconClassifier::from_csv_str(crate::providers::BUNDLED_LEXICON)
                        .expect("bundled lexicon parses"),
                ),
            };
        let embedder = std::sync::Arc::new(HashEmbedder::new(config.providers.embedding_dim));
        let relevance: std::sync::Arc<dyn crate::providers::RelevanceModel> =
            match (&config.providers.remote_lm, &config.providers.areas) {
                (Some(lm), _) => std::sync::Arc::new(RemoteLmRelevance::new(lm)?),
                (None, Some(path)) => std::sync::Arc::new(OverlapRelevance::from_path(path)?),
                (None, None) => std::sync::Arc::new(
                    OverlapRelevance::from_json_str(crate::providers::BUNDLED_AREAS)
                        .expect("bundled area table parses"),
                ),
            };
        let providers = ProviderSet { classifier, embedder, relevance };
        let kb = match &config.providers.knowledge_base {
            Some(path) => KnowledgeBase::from_path(path)?,
            None => KnowledgeBase::empty(),
        };
        Self::new(
            config.trust.clone(),
            providers,
            kb,
            config.guardrail.moderation_template.clone(),
            config.tiers.clone(),
            config.guardrail.revalidation_threshold,
            config.guardrail.time_base,
        )
    }

    /// Neutralize authority-trust factors on every subsequent evaluation
    /// (ablation runs).
    pub fn with_omit(mut self, omit: OmitSet) -> Self {
        self.omit = omit;
        self
    }

    pub fn params(&self) -> &TrustParams {
        &self.params
    }

    pub fn providers(&self) -> &ProviderSet {
        &self.providers
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn moderation_template(&self) -> &str {
        &self.moderation_template
    }

    pub fn time_base(&self) -> TimeBase {
        self.time_base
    }

    pub fn revalidation_threshold(&self) -> u32 {
        self.revalidation_threshold
    }

    /// Uniform static guard: pass safe responses through unchanged, answer
    /// everything unsafe with the fixed moderation template.
    pub fn static_guard<'a>(&self, verdict: &SafetyVerdict, candidate: &'a str) -> Cow<'a, str> {
        if verdict.is_safe() {
            Cow::Borrowed(candidate)
        } else {
            Cow::Owned(self.moderation_template.clone())
        }
    }

    /// Generation parameters for a tier (clamped to the table).
    pub fn generation_params(&self, tier: usize) -> GenerationParams {
        let idx = tier.min(self.tiers.len().saturating_sub(1));
        self.tiers[idx]
    }

    /// Context bundle for a categorized input at the given tier and trust.
    pub fn compose_context<'a>(
        &'a self,
        category: Option<&str>,
        tier: usize,
        trust: f64,
    ) -> Vec<&'a KnowledgeEntry> {
        compose_context(category, tier, &self.kb, trust)
    }

    /// Evaluate one request and advance the caller-owned state.
    pub fn evaluate(
        &self,
        user: UserContext<'_>,
        input: &str,
        state: &mut TrustState,
        reval: &mut RevalidationState,
        registry: &AttestationRegistry,
    ) -> Result<GuardrailDecision, GuardrailError> {
        if state.status() != SessionStatus::Active {
            return Err(GuardrailError::SessionClosed { status: state.status() });
        }
        let verdict = self.providers.classifier.classify(input)?;
        let embedding = self.providers.embedder.embed(input).into_values();
        let now = state.next_timestamp(self.time_base);
        let record = crate::trust::InteractionRecord {
            timestamp: now,
            embedding,
            safety: verdict.label,
            granted: false,
        };
        let snapshot = state.preview(&record, &self.params)?;

        if verdict.is_safe() {
            state.commit(record, &self.params)?;
            return Ok(GuardrailDecision {
                level: Level::Relax,
                action: Action::PassThrough,
                tier: tier_index(snapshot.dt, &self.params),
                trust: snapshot.dt,
                components: TrustComponents { dt: snapshot.dt, at: None, eta: 0.0 },
                reasons: vec![ReasonCode::SafeInput],
                category: None,
            });
        }

        let mut reasons = vec![ReasonCode::UnsafeInput];
        let dt = snapshot.dt;
        let dt_mean = snapshot.dt_history_mean;

        // Authority-verified trust, unless re-validation is pending or no
        // fresh attestation exists.
        let mut at: Option<f64> = None;
        let mut eta = 0.0;
        if reval.needs_revalidation(self.revalidation_threshold) {
            reasons.push(ReasonCode::NeedsRevalidation);
        } else {
            let fresh = registry.fresh_for(user.user_id, now);
            if fresh.is_empty() {
                reasons.push(if registry.count_for(user.user_id) > 0 {
                    ReasonCode::StaleAttestation
                } else {
                    ReasonCode::NoAttestation
                });
            } else {
                let assessment =
                    evaluate_ttps(&fresh, input, dt_mean, &self.providers, &self.params);
                if assessment.lm_degraded {
                    reasons.push(ReasonCode::LmUnavailable);
                }
                let masked: Vec<(Ranking, crate::trust::TtpEvaluation)> = assessment
                    .evaluations
                    .iter()
                    .map(|(r, e)| (*r, e.masked(&self.omit)))
                    .collect();
                let evals: Vec<crate::trust::TtpEvaluation> =
                    masked.iter().map(|(_, e)| *e).collect();
                match authority_trust(&evals) {
                    Ok(score) => {
                        // The adaptive weight keys off the best ranking
                        // among TTPs that actually carry weight.
                        let best = masked
                            .iter()
                            .filter(|(_, e)| e.weight() > 0.0)
                            .map(|(r, _)| *r)
                            .max()
                            .expect("a usable aggregate implies a weighted TTP");
                        at = Some(score);
                        eta = adaptive_weight(best, dt_mean, &self.params);
                    }
                    Err(TrustError::NoUsableAttestation) => {
                        reasons.push(ReasonCode::NoAttestation);
                    }
                    Err(other) => return Err(other.into()),
                }
            }
        }

        let trust = composite_trust(eta, at.unwrap_or(0.0), dt);
        let thresholds = self.params.thresholds_for(user.group);
        let category = verdict.category.clone();

        let decision = if trust >= thresholds.beta_relax {
            reasons.push(ReasonCode::TrustOk);
            reval.record_high_risk();
            let mut rec = record;
            rec.granted = true;
            state.commit(rec, &self.params)?;
            GuardrailDecision {
                level: Level::Relax,
                action: Action::TieredAnswer,
                tier: tier_index(trust, &self.params),
                trust,
                components: TrustComponents { dt, at, eta },
                reasons,
                category,
            }
        } else if trust >= thresholds.beta_strict {
            reasons.push(ReasonCode::TrustBelowBeta);
            state.commit(record, &self.params)?;
            GuardrailDecision {
                level: Level::Normal,
                action: Action::Moderate,
                tier: 0,
                trust,
                components: TrustComponents { dt, at, eta },
                reasons,
                category,
            }
        } else {
            reasons.push(ReasonCode::TrustBelowStrict);
            state.commit(record, &self.params)?;
            state.set_status(SessionStatus::Locked);
            GuardrailDecision {
                level: Level::Strict,
                action: Action::Terminate,
                tier: 0,
                trust,
                components: TrustComponents { dt, at, eta },
                reasons,
                category,
            }
        };
        Ok(decision)
    }

    /// Re-validate a user's identity against the registry: requires a
    /// fresh attestation, resets the high-risk budget, and re-opens a
    /// locked session.
    pub fn revalidate(
        &self,
        user_id: &str,
        state: &mut TrustState,
        reval: &mut RevalidationState,
        registry: &AttestationRegistry,
    ) -> Result<RevalidationState, GuardrailError> {
        let now = state.next_timestamp(self.time_base);
        if !registry.has_fresh(user_id, now) {
            return Err(AttestationError::NoFreshAttestation.into());
        }
        reval.reset(now);
        if state.status() == SessionStatus::Locked {
            state.set_status(SessionStatus::Active);
        }
        Ok(reval.clone())
    }
}
