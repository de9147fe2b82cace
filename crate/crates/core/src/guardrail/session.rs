//! Per-user rolling trust state: the sliding interaction window, the
//! dialogue's direct-trust history, and the session status.

use serde::{Deserialize, Serialize};

use crate::config::TimeBase;
use crate::trust::{
    direct_trust, interaction_consistency, update_counts, InteractionRecord, TrustError,
    TrustParams, TrustSnapshot,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    #[default]
    Active,
    /// Closed by an operator; no further evaluation.
    Terminated,
    /// Closed by a strict decision; re-opens only on successful
    /// re-validation.
    Locked,
}

impl std::fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionStatus::Active => write!(f, "active"),
            SessionStatus::Terminated => write!(f, "terminated"),
            SessionStatus::Locked => write!(f, "locked"),
        }
    }
}

/// Rolling trust state for one user.
///
/// The window holds the most recent interactions (at most the configured
/// window length); the direct-trust history spans the whole dialogue. The
/// same `commit` path serves live traffic and event-log replay, so a
/// recovered state is bit-identical to the live one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    window: Vec<InteractionRecord>,
    dt_history: Vec<f64>,
    snapshot: TrustSnapshot,
    status: SessionStatus,
    /// Number of interactions observed over the life of the user; doubles
    /// as the next logical timestamp.
    turns: u64,
    /// Largest timestamp committed so far, for monotonicity under
    /// wall-clock time.
    last_timestamp: u64,
}

impl Default for TrustState {
    fn default() -> Self {
        Self::new()
    }
}

impl TrustState {
    pub fn new() -> Self {
        Self {
            window: Vec::new(),
            dt_history: Vec::new(),
            snapshot: TrustSnapshot::default(),
            status: SessionStatus::Active,
            turns: 0,
            last_timestamp: 0,
        }
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn set_status(&mut self, status: SessionStatus) {
        self.status = status;
    }

    pub fn snapshot(&self) -> &TrustSnapshot {
        &self.snapshot
    }

    pub fn turns(&self) -> u64 {
        self.turns
    }

    pub fn dt_history(&self) -> &[f64] {
        &self.dt_history
    }

    /// The most recently committed record, if any interaction happened.
    pub fn last_record(&self) -> Option<&InteractionRecord> {
        self.window.last()
    }

    /// Timestamp for the next interaction under the configured time base.
    pub fn next_timestamp(&self, base: TimeBase) -> u64 {
        match base {
            TimeBase::Logical => self.turns,
            TimeBase::WallClock => {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                now.max(self.last_timestamp)
            }
        }
    }

    /// Evaluate what committing `record` would produce, without mutating
    /// anything. The dialogue mean includes the would-be current turn.
    pub fn preview(
        &self,
        record: &InteractionRecord,
        params: &TrustParams,
    ) -> Result<TrustSnapshot, TrustError> {
        let (a, b) = update_counts(&self.window, record.timestamp, record.safety, params)?;
        let ic = interaction_consistency(
            &record.embedding,
            self.window.iter().map(|r| r.embedding.as_slice()),
        )?;
        let dt = direct_trust(a, b, ic, params);
        let sum: f64 = self.dt_history.iter().sum::<f64>() + dt;
        let mean = sum / (self.dt_history.len() + 1) as f64;
        Ok(TrustSnapshot { a, b, ic, dt, dt_history_mean: mean })
    }

    /// Commit `record`: recompute the snapshot, extend the direct-trust
    /// history, and trim the window.
    pub fn commit(
        &mut self,
        record: InteractionRecord,
        params: &TrustParams,
    ) -> Result<TrustSnapshot, TrustError> {
        let snapshot = self.preview(&record, params)?;
        self.dt_history.push(snapshot.dt);
        self.last_timestamp = self.last_timestamp.max(record.timestamp);
        self.window.push(record);
        if self.window.len() > params.window {
            let excess = self.window.len() - params.window;
            self.window.drain(..excess);
        }
        self.turns += 1;
        self.snapshot = snapshot;
        Ok(snapshot)
    }
}
