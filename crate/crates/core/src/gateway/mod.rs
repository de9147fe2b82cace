//! Network-facing gateway: proxies chat requests through the guardrail
//! engine to a pluggable upstream LLM, persists per-user trust state in an
//! append-only event log, and exposes attestation and admin endpoints.
//!
//! All state transitions for one user are serialized behind a per-user
//! lock; event-log appends happen inside that lock, so sequence numbers
//! are strictly increasing and gapless and replaying the log reconstructs
//! the live state exactly.

mod api;
mod events;
mod store;
mod upstream;

pub use api::{router, ChatOutcome, ChatReply, ChatRequest, TrustReport};
pub use events::{TrustEvent, TrustEventKind};
pub use store::{EventStore, UserSnapshot};
pub use upstream::{EchoUpstream, HttpUpstream, UpstreamError, UpstreamLlm};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::attestation::{AttestationError, AttestationRegistry, RevalidationState};
use crate::config::{Config, UpstreamKind};
use crate::guardrail::{
    GuardrailEngine, GuardrailError, SessionStatus, TrustComponents, TrustState,
};
use crate::trust::{SafetyLabel, TrustParams};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Trust(#[from] crate::trust::TrustError),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Engine(#[from] GuardrailError),
    #[error(transparent)]
    Attestation(#[from] AttestationError),
    #[error(transparent)]
    Upstream(#[from] UpstreamError),
    #[error("config: {0}")]
    Config(String),
}

/// Mutable per-user state guarded by one lock.
pub struct UserSlot {
    pub trust: TrustState,
    pub reval: RevalidationState,
    pub next_seq: u64,
    events_since_snapshot: u64,
    /// Components of the most recent decision, for the trust endpoint.
    pub last_components: Option<TrustComponents>,
    pub last_trust: Option<f64>,
}

impl UserSlot {
    fn new(user_id: &str) -> Self {
        Self {
            trust: TrustState::new(),
            reval: RevalidationState::new(user_id),
            next_seq: 1,
            events_since_snapshot: 0,
            last_components: None,
            last_trust: None,
        }
    }
}

/// Shared gateway state: engine, registry, event store, upstream client,
/// and the per-user slots.
pub struct GatewayState {
    pub engine: GuardrailEngine,
    pub registry: AttestationRegistry,
    pub store: EventStore,
    pub upstream: Arc<dyn UpstreamLlm>,
    pub config: Config,
    users: RwLock<HashMap<String, Arc<Mutex<UserSlot>>>>,
}

impl GatewayState {
    /// Build everything from a config and recover durable state from the
    /// event log.
    pub fn open(config: Config) -> Result<Self, GatewayError> {
        let engine = GuardrailEngine::from_config(&config)?;
        let upstream: Arc<dyn UpstreamLlm> = match config.upstream.kind {
            UpstreamKind::Echo => Arc::new(EchoUpstream),
            UpstreamKind::Http => Arc::new(HttpUpstream::new(&config.upstream)?),
        };
        let store = EventStore::open(&config.gateway.data_dir)?;
        let state = Self {
            engine,
            registry: AttestationRegistry::new(),
            store,
            upstream,
            config,
            users: RwLock::new(HashMap::new()),
        };
        state.recover()?;
        Ok(state)
    }

    /// Rebuild every user's in-memory state from snapshots plus event-log
    /// suffixes.
    fn recover(&self) -> Result<(), GatewayError> {
        let params = self.engine.params().clone();
        for user_id in self.store.list_users()? {
            let snapshot = self.store.read_snapshot(&user_id)?;
            let events = self.store.read_user(&user_id)?;
            let (slot, atts) = rebuild_slot(&user_id, snapshot, &events, &params)?;
            for att in atts {
                // Re-registration follows event order, so supersession
                // resolves exactly as it did live.
                self.registry.register(att)?;
            }
            self.users
                .write()
                .expect("users lock poisoned")
                .insert(user_id, Arc::new(Mutex::new(slot)));
        }
        Ok(())
    }

    /// The per-user slot, creating it on first use.
    pub fn slot(&self, user_id: &str) -> Arc<Mutex<UserSlot>> {
        if let Some(slot) = self.users.read().expect("users lock poisoned").get(user_id) {
            return Arc::clone(slot);
        }
        let mut users = self.users.write().expect("users lock poisoned");
        Arc::clone(
            users
                .entry(user_id.to_string())
                .or_insert_with(|| Arc::new(Mutex::new(UserSlot::new(user_id)))),
        )
    }

    pub fn has_user(&self, user_id: &str) -> bool {
        self.users.read().expect("users lock poisoned").contains_key(user_id)
    }

    /// Append an event for a user whose slot lock is already held, then
    /// snapshot if the interval elapsed.
    fn append_event(
        &self,
        slot: &mut UserSlot,
        user_id: &str,
        timestamp: u64,
        kind: TrustEventKind,
    ) -> Result<(), GatewayError> {
        let event = TrustEvent { user_id: user_id.to_string(), seq: slot.next_seq, timestamp, kind };
        self.store.append(&event)?;
        slot.next_seq += 1;
        slot.events_since_snapshot += 1;
        if slot.events_since_snapshot >= self.config.gateway.snapshot_interval {
            self.store.write_snapshot(
                user_id,
                &UserSnapshot {
                    seq: slot.next_seq - 1,
                    trust: slot.trust.clone(),
                    reval: slot.reval.clone(),
                },
            )?;
            slot.events_since_snapshot = 0;
        }
        Ok(())
    }
}

/// Replay one user's events on top of an optional snapshot. Returns the
/// rebuilt slot and the attestations to re-register, in event order.
fn rebuild_slot(
    user_id: &str,
    snapshot: Option<UserSnapshot>,
    events: &[TrustEvent],
    params: &TrustParams,
) -> Result<(UserSlot, Vec<crate::attestation::TtpAttestation>), GatewayError> {
    let mut slot = UserSlot::new(user_id);
    let mut from_seq = 0;
    if let Some(snap) = snapshot {
        from_seq = snap.seq;
        slot.trust = snap.trust;
        slot.reval = snap.reval;
        slot.next_seq = snap.seq + 1;
    }
    let mut atts = Vec::new();
    for event in events {
        if event.seq <= from_seq {
            // Attestations still need re-registering: the registry is not
            // part of the snapshot.
            if let TrustEventKind::AttestationRegistered { attestation } = &event.kind {
                atts.push(attestation.clone());
            }
            continue;
        }
        if event.seq != slot.next_seq {
            return Err(GatewayError::Corrupt(format!(
                "{user_id}: expected seq {}, found {}",
                slot.next_seq, event.seq
            )));
        }
        match &event.kind {
            TrustEventKind::Interaction { record } => {
                let granted_unsafe = record.granted && record.safety == SafetyLabel::Unsafe;
                slot.trust.commit(record.clone(), params)?;
                if granted_unsafe {
                    slot.reval.record_high_risk();
                }
            }
            TrustEventKind::AttestationRegistered { attestation } => {
                atts.push(attestation.clone());
            }
            TrustEventKind::Revalidated { validated_at } => {
                slot.reval.reset(*validated_at);
            }
            TrustEventKind::Locked => slot.trust.set_status(SessionStatus::Locked),
            TrustEventKind::Unlocked => slot.trust.set_status(SessionStatus::Active),
        }
        slot.next_seq = event.seq + 1;
    }
    Ok((slot, atts))
}

/// Reconstruct trust and re-validation state from a full event log —
/// the recovery primitive, exposed for verification against live state.
pub fn recover_user_state(
    events: &[TrustEvent],
    params: &TrustParams,
) -> Result<(TrustState, RevalidationState), GatewayError> {
    let user_id = events.first().map(|e| e.user_id.as_str()).unwrap_or("");
    let (slot, _) = rebuild_slot(user_id, None, events, params)?;
    Ok((slot.trust, slot.reval))
}
