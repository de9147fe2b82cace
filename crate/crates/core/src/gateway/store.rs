//! Filesystem event store: one JSONL log per user under `events/`, plus
//! periodic state snapshots under `snapshots/` so recovery does not have to
//! replay from the beginning of time.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::events::TrustEvent;
use super::GatewayError;
use crate::attestation::RevalidationState;
use crate::guardrail::TrustState;

/// Durable per-user state at a known sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSnapshot {
    pub seq: u64,
    pub trust: TrustState,
    pub reval: RevalidationState,
}

pub struct EventStore {
    events_dir: PathBuf,
    snapshots_dir: PathBuf,
}

impl EventStore {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let data_dir = data_dir.as_ref();
        let events_dir = data_dir.join("events");
        let snapshots_dir = data_dir.join("snapshots");
        std::fs::create_dir_all(&events_dir)?;
        std::fs::create_dir_all(&snapshots_dir)?;
        Ok(Self { events_dir, snapshots_dir })
    }

    fn event_path(&self, user_id: &str) -> PathBuf {
        self.events_dir.join(format!("{}.jsonl", encode_user_id(user_id)))
    }

    fn snapshot_path(&self, user_id: &str) -> PathBuf {
        self.snapshots_dir.join(format!("{}.json", encode_user_id(user_id)))
    }

    /// Append one event to the owner's log. The line is flushed before the
    /// call returns, so any crash leaves a clean prefix of the log.
    pub fn append(&self, event: &TrustEvent) -> Result<(), GatewayError> {
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.event_path(&event.user_id))?;
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// All events for one user, in append order.
    pub fn read_user(&self, user_id: &str) -> Result<Vec<TrustEvent>, GatewayError> {
        let path = self.event_path(user_id);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let data = std::fs::read_to_string(path)?;
        let mut events = Vec::new();
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: TrustEvent = serde_json::from_str(line).map_err(|e| {
                GatewayError::Corrupt(format!("{user_id} event log line {}: {e}", lineno + 1))
            })?;
            events.push(event);
        }
        Ok(events)
    }

    /// Users with an event log on disk.
    pub fn list_users(&self) -> Result<Vec<String>, GatewayError> {
        let mut users = Vec::new();
        for entry in std::fs::read_dir(&self.events_dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(encoded) = name.strip_suffix(".jsonl") {
                users.push(decode_user_id(encoded)?);
            }
        }
        users.sort();
        Ok(users)
    }

    pub fn write_snapshot(&self, user_id: &str, snapshot: &UserSnapshot) -> Result<(), GatewayError> {
        let tmp = self.snapshot_path(user_id).with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(snapshot)?)?;
        std::fs::rename(&tmp, self.snapshot_path(user_id))?;
        Ok(())
    }

    pub fn read_snapshot(&self, user_id: &str) -> Result<Option<UserSnapshot>, GatewayError> {
        let path = self.snapshot_path(user_id);
        if !path.exists() {
            return Ok(None);
        }
        let data = std::fs::read(path)?;
        let snapshot = serde_json::from_slice(&data)
            .map_err(|e| GatewayError::Corrupt(format!("{user_id} snapshot: {e}")))?;
        Ok(Some(snapshot))
    }
}

/// Filename-safe, reversible encoding of a user id: alphanumerics, `-`,
/// `_` and `.` pass through, everything else becomes `%XX` per byte.
fn encode_user_id(user_id: &str) -> String {
    let mut out = String::with_capacity(user_id.len());
    for byte in user_id.bytes() {
        match byte {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'-' | b'_' | b'.' => {
                out.push(byte as char);
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

fn decode_user_id(encoded: &str) -> Result<String, GatewayError> {
    let bytes = encoded.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 3 > bytes.len() {
                return Err(GatewayError::Corrupt(format!("bad user id encoding: {encoded}")));
            }
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3])
                .ok()
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| GatewayError::Corrupt(format!("bad user id encoding: {encoded}")))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out)
        .map_err(|_| GatewayError::Corrupt(format!("bad user id encoding: {encoded}")))
}

#[cfg(test)]
mod tests {
    use super::super::events::TrustEventKind;
    use super::*;

    fn event(user: &str, seq: u64) -> TrustEvent {
        TrustEvent { user_id: user.into(), seq, timestamp: seq, kind: TrustEventKind::Locked }
    }

    #[test]
    fn append_and_read_back_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::open(dir.path()).unwrap();
        for seq in 1..=5 {
            store.append(&event("alice", seq)).unwrap();
        }
        let events = store.read_user("alice").unwrap();
        assert_eq!(events.len(), 5);
        assert!(events.iter().enumerate().all(|(i, e)| e.seq == i as u64 + 1));
    }

    #[test]
    fn unknown_user_reads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::open(dir.path()).unwrap();
        assert!(store.read_user("nobody").unwrap().is_empty());
    }

    #[test]
    fn user_ids_with_odd_characters_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::open(dir.path()).unwrap();
        let odd = "we/ird:user id%42";
        store.append(&event(odd, 1)).unwrap();
        let users = store.list_users().unwrap();
        assert_eq!(users, vec![odd.to_string()]);
        assert_eq!(store.read_user(odd).unwrap().len(), 1);
    }

    #[test]
    fn snapshots_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::open(dir.path()).unwrap();
        assert!(store.read_snapshot("alice").unwrap().is_none());
        let snap = UserSnapshot {
            seq: 7,
            trust: TrustState::new(),
            reval: RevalidationState::new("alice"),
        };
        store.write_snapshot("alice", &snap).unwrap();
        assert_eq!(store.read_snapshot("alice").unwrap(), Some(snap));
    }
}
