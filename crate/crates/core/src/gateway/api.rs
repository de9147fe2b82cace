//! HTTP surface of the gateway and the synchronous request pipeline
//! behind it.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{GatewayState, TrustEventKind};
use crate::attestation::{RevalidationState, TtpAttestation};
use crate::config::AnonymousPolicy;
use crate::guardrail::{
    render_context, Action, GuardrailDecision, GuardrailError, Level, ReasonCode, SessionStatus,
    TrustComponents, UserContext,
};
use crate::trust::TrustSnapshot;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub user_id: String,
    pub message: String,
    /// Optional trust group; `default` when absent.
    #[serde(default)]
    pub group: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatReply {
    pub reply: String,
    pub decision: GuardrailDecision,
    pub session_status: SessionStatus,
}

/// Pipeline outcome carried to the HTTP layer.
#[derive(Debug)]
pub enum ChatOutcome {
    Ok(ChatReply),
    UnknownUser,
    SessionLocked { status: SessionStatus },
    Invalid(String),
    UpstreamFailed { error: String, decision: GuardrailDecision, session_status: SessionStatus },
    Internal(String),
}

#[derive(Debug, Serialize)]
pub struct TrustReport {
    pub snapshot: TrustSnapshot,
    pub trust: Option<f64>,
    pub components: Option<TrustComponents>,
    pub session_status: SessionStatus,
    pub high_risk_count: u32,
    pub needs_revalidation: bool,
}

impl GatewayState {
    /// Run one chat request through the guardrail and (when allowed) the
    /// upstream model. Everything here is synchronous; the HTTP layer runs
    /// it on a blocking thread.
    pub fn process_chat(&self, req: &ChatRequest) -> ChatOutcome {
        if req.user_id.trim().is_empty() || req.message.trim().is_empty() {
            return ChatOutcome::Invalid("user_id and message must be non-empty".into());
        }
        let known = self.has_user(&req.user_id) || self.registry.count_for(&req.user_id) > 0;
        if !known {
            match self.config.gateway.anonymous_policy {
                AnonymousPolicy::Reject => return ChatOutcome::UnknownUser,
                AnonymousPolicy::Static => return self.static_chat(req),
                AnonymousPolicy::DtOnly => {}
            }
        }

        let group = req.group.clone().unwrap_or_else(|| "default".to_string());
        let slot_arc = self.slot(&req.user_id);
        let mut guard = slot_arc.lock().expect("user slot poisoned");
        let slot = &mut *guard;

        let decision = match self.engine.evaluate(
            UserContext { user_id: &req.user_id, group: &group },
            &req.message,
            &mut slot.trust,
            &mut slot.reval,
            &self.registry,
        ) {
            Ok(decision) => decision,
            Err(GuardrailError::SessionClosed { status }) => {
                return ChatOutcome::SessionLocked { status }
            }
            Err(GuardrailError::EmptyInput) => {
                return ChatOutcome::Invalid("message is empty".into())
            }
            Err(other) => return ChatOutcome::Internal(other.to_string()),
        };

        // Persist before calling upstream: trust state survives upstream
        // failures.
        let record = slot
            .trust
            .last_record()
            .cloned()
            .expect("evaluate always commits a record");
        let timestamp = record.timestamp;
        if let Err(e) = self.append_event(
            slot,
            &req.user_id,
            timestamp,
            TrustEventKind::Interaction { record },
        ) {
            return ChatOutcome::Internal(e.to_string());
        }
        if decision.action == Action::Terminate {
            if let Err(e) =
                self.append_event(slot, &req.user_id, timestamp, TrustEventKind::Locked)
            {
                return ChatOutcome::Internal(e.to_string());
            }
        }
        slot.last_components = Some(decision.components);
        slot.last_trust = Some(decision.trust);
        let session_status = slot.trust.status();
        drop(guard);

        let reply = match decision.action {
            Action::Moderate | Action::Terminate => {
                self.engine.moderation_template().to_string()
            }
            Action::PassThrough | Action::TieredAnswer => {
                let bundle = self.engine.compose_context(
                    decision.category.as_deref(),
                    decision.tier,
                    decision.trust,
                );
                let context = render_context(&bundle);
                let params = self.engine.generation_params(decision.tier);
                match self.upstream.complete(&context, &req.message, &params) {
                    Ok(text) => text,
                    Err(e) => {
                        return ChatOutcome::UpstreamFailed {
                            error: e.to_string(),
                            decision,
                            session_status,
                        }
                    }
                }
            }
        };
        ChatOutcome::Ok(ChatReply { reply, decision, session_status })
    }

    /// Uniform static behavior for unknown users: no trust state, no
    /// persistence — safe input passes through, unsafe input is moderated.
    fn static_chat(&self, req: &ChatRequest) -> ChatOutcome {
        let verdict = match self.engine.providers().classifier.classify(&req.message) {
            Ok(v) => v,
            Err(_) => return ChatOutcome::Invalid("message is empty".into()),
        };
        let prior = TrustComponents { dt: 0.5, at: None, eta: 0.0 };
        if verdict.is_safe() {
            let params = self.engine.generation_params(0);
            let reply = match self.upstream.complete("", &req.message, &params) {
                Ok(text) => text,
                Err(e) => {
                    return ChatOutcome::UpstreamFailed {
                        error: e.to_string(),
                        decision: GuardrailDecision {
                            level: Level::Relax,
                            action: Action::PassThrough,
                            tier: 0,
                            trust: 0.5,
                            components: prior,
                            reasons: vec![ReasonCode::SafeInput],
                            category: None,
                        },
                        session_status: SessionStatus::Active,
                    }
                }
            };
            ChatOutcome::Ok(ChatReply {
                reply,
                decision: GuardrailDecision {
                    level: Level::Relax,
                    action: Action::PassThrough,
                    tier: 0,
                    trust: 0.5,
                    components: prior,
                    reasons: vec![ReasonCode::SafeInput],
                    category: None,
                },
                session_status: SessionStatus::Active,
            })
        } else {
            ChatOutcome::Ok(ChatReply {
                reply: self.engine.moderation_template().to_string(),
                decision: GuardrailDecision {
                    level: Level::Normal,
                    action: Action::Moderate,
                    tier: 0,
                    trust: 0.5,
                    components: prior,
                    reasons: vec![
                        ReasonCode::UnsafeInput,
                        ReasonCode::NoAttestation,
                        ReasonCode::TrustBelowBeta,
                    ],
                    category: verdict.category,
                },
                session_status: SessionStatus::Active,
            })
        }
    }

    /// Register an attestation and persist the registration event on the
    /// attested user's log.
    pub fn register_attestation(
        &self,
        att: TtpAttestation,
    ) -> Result<u64, super::GatewayError> {
        let user_id = att.user_id.clone();
        let slot_arc = self.slot(&user_id);
        let mut slot = slot_arc.lock().expect("user slot poisoned");
        let id = self.registry.register(att.clone())?;
        let timestamp = slot.trust.next_timestamp(self.engine.time_base());
        self.append_event(
            &mut slot,
            &user_id,
            timestamp,
            TrustEventKind::AttestationRegistered { attestation: att },
        )?;
        Ok(id.0)
    }

    /// Re-validate a user; on success the budget resets and a locked
    /// session re-opens, both durably.
    pub fn revalidate_user(
        &self,
        user_id: &str,
    ) -> Result<RevalidationState, super::GatewayError> {
        let slot_arc = self.slot(user_id);
        let mut guard = slot_arc.lock().expect("user slot poisoned");
        let slot = &mut *guard;
        let was_locked = slot.trust.status() == SessionStatus::Locked;
        let outcome =
            self.engine.revalidate(user_id, &mut slot.trust, &mut slot.reval, &self.registry)?;
        let validated_at = outcome.last_validated_at.unwrap_or(0);
        self.append_event(
            slot,
            user_id,
            validated_at,
            TrustEventKind::Revalidated { validated_at },
        )?;
        if was_locked && slot.trust.status() == SessionStatus::Active {
            self.append_event(slot, user_id, validated_at, TrustEventKind::Unlocked)?;
        }
        Ok(outcome)
    }

    pub fn trust_report(&self, user_id: &str) -> Option<TrustReport> {
        if !self.has_user(user_id) && self.registry.count_for(user_id) == 0 {
            return None;
        }
        let slot_arc = self.slot(user_id);
        let slot = slot_arc.lock().expect("user slot poisoned");
        Some(TrustReport {
            snapshot: *slot.trust.snapshot(),
            trust: slot.last_trust,
            components: slot.last_components,
            session_status: slot.trust.status(),
            high_risk_count: slot.reval.high_risk_count_since_validation,
            needs_revalidation: slot
                .reval
                .needs_revalidation(self.engine.revalidation_threshold()),
        })
    }
}

/// Build the HTTP router over shared gateway state.
pub fn router(state: Arc<GatewayState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/chat", post(chat))
        .route("/v1/ttp/attestations", post(register_attestation))
        .route("/v1/users/{id}/revalidate", post(revalidate))
        .route("/v1/users/{id}/trust", get(trust_report))
        .with_state(state)
}

async fn healthz() -> &'static str {
    "ok"
}

fn error_body(message: &str) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "error": message }))
}

async fn chat(State(state): State<Arc<GatewayState>>, body: Bytes) -> Response {
    let req: ChatRequest = match serde_json::from_slice(&body) {
        Ok(req) => req,
        Err(e) => {
            return (StatusCode::UNPROCESSABLE_ENTITY, error_body(&format!("malformed body: {e}")))
                .into_response()
        }
    };
    let outcome = match tokio::task::spawn_blocking(move || state.process_chat(&req)).await {
        Ok(outcome) => outcome,
        Err(e) => {
            return (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response()
        }
    };
    match outcome {
        ChatOutcome::Ok(reply) => (StatusCode::OK, Json(reply)).into_response(),
        ChatOutcome::UnknownUser => {
            (StatusCode::NOT_FOUND, error_body("unknown user")).into_response()
        }
        ChatOutcome::SessionLocked { status } => (
            StatusCode::CONFLICT,
            Json(serde_json::json!({ "error": "session closed", "session_status": status })),
        )
            .into_response(),
        ChatOutcome::Invalid(message) => {
            (StatusCode::UNPROCESSABLE_ENTITY, error_body(&message)).into_response()
        }
        ChatOutcome::UpstreamFailed { error, decision, session_status } => (
            StatusCode::BAD_GATEWAY,
            Json(serde_json::json!({
                "error": error,
                "decision": decision,
                "session_status": session_status,
            })),
        )
            .into_response(),
        ChatOutcome::Internal(message) => {
            (StatusCode::INTERNAL_SERVER_ERROR, error_body(&message)).into_response()
        }
    }
}

async fn register_attestation(State(state): State<Arc<GatewayState>>, body: Bytes) -> Response {
    let att: TtpAttestation = match serde_json::from_slice(&body) {
        Ok(att) => att,
        Err(e) => {
            return (StatusCode::UNPROCESSABLE_ENTITY, error_body(&format!("malformed body: {e}")))
                .into_response()
        }
    };
    let result = tokio::task::spawn_blocking(move || state.register_attestation(att)).await;
    match result {
        Ok(Ok(id)) => {
            (StatusCode::CREATED, Json(serde_json::json!({ "id": id }))).into_response()
        }
        Ok(Err(super::GatewayError::Attestation(e))) => {
            (StatusCode::UNPROCESSABLE_ENTITY, error_body(&e.to_string())).into_response()
        }
        Ok(Err(e)) => {
            (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response(),
    }
}

async fn revalidate(
    State(state): State<Arc<GatewayState>>,
    Path(user_id): Path<String>,
) -> Response {
    let result = tokio::task::spawn_blocking(move || state.revalidate_user(&user_id)).await;
    match result {
        Ok(Ok(reval)) => (StatusCode::OK, Json(reval)).into_response(),
        Ok(Err(super::GatewayError::Attestation(e))) => {
            (StatusCode::CONFLICT, error_body(&e.to_string())).into_response()
        }
        Ok(Err(super::GatewayError::Engine(GuardrailError::Revalidation(e)))) => {
            (StatusCode::CONFLICT, error_body(&e.to_string())).into_response()
        }
        Ok(Err(e)) => {
            (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response(),
    }
}

async fn trust_report(
    State(state): State<Arc<GatewayState>>,
    Path(user_id): Path<String>,
) -> Response {
    let report = tokio::task::spawn_blocking(move || state.trust_report(&user_id)).await;
    match report {
        Ok(Some(report)) => (StatusCode::OK, Json(report)).into_response(),
        Ok(None) => (StatusCode::NOT_FOUND, error_body("unknown user")).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, error_body(&e.to_string())).into_response(),
    }
}
