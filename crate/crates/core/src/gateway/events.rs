//! Durable trust events: the append-only, per-user record from which all
//! in-memory state can be reconstructed.

use serde::{Deserialize, Serialize};

use crate::attestation::TtpAttestation;
use crate::trust::InteractionRecord;

/// One durable event. Per-user sequence numbers start at 1 and are
/// strictly increasing and gapless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEvent {
    pub user_id: String,
    pub seq: u64,
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: TrustEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrustEventKind {
    /// One evaluated interaction; the record carries everything needed to
    /// replay the trust update (embedding included).
    Interaction { record: InteractionRecord },
    AttestationRegistered { attestation: TtpAttestation },
    Revalidated { validated_at: u64 },
    Locked,
    Unlocked,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::SafetyLabel;

    #[test]
    fn event_json_round_trips() {
        let event = TrustEvent {
            user_id: "alice".into(),
            seq: 3,
            timestamp: 17,
            kind: TrustEventKind::Interaction {
                record: InteractionRecord {
                    timestamp: 17,
                    embedding: vec![0.25, -0.75],
                    safety: SafetyLabel::Unsafe,
                    granted: true,
                },
            },
        };
        let line = serde_json::to_string(&event).unwrap();
        assert!(line.contains("\"kind\":\"interaction\""));
        let back: TrustEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(event, back);
    }

    #[test]
    fn lock_events_are_flat() {
        let event = TrustEvent { user_id: "bob".into(), seq: 1, timestamp: 0, kind: TrustEventKind::Locked };
        let line = serde_json::to_string(&event).unwrap();
        assert!(line.contains("\"kind\":\"locked\""));
    }
}
