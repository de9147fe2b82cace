//! Hierarchical knowledge base: topic-tagged entries at sensitivity tiers,
//! optionally guarded by an explicit minimum-trust override.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GuardrailError;

/// One knowledge-base entry. `min_trust`, when present, must pass in
/// addition to the tier rule — it never relaxes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub topic: String,
    pub tier: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_trust: Option<f64>,
    pub content: String,
}

/// An ordered collection of [`KnowledgeEntry`] values loaded from JSONL
/// (one entry per line).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    entries: Vec<KnowledgeEntry>,
}

impl KnowledgeBase {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_jsonl_str(data: &str) -> Result<Self, GuardrailError> {
        let mut entries = Vec::new();
        for (lineno, line) in data.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let entry: KnowledgeEntry = serde_json::from_str(line).map_err(|e| {
                GuardrailError::Knowledge(format!("line {}: {e}", lineno + 1))
            })?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GuardrailError> {
        let data = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            GuardrailError::Knowledge(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_jsonl_str(&data)
    }

    /// Check entry invariants against the configured tier ceiling.
    pub fn validate(&self, tier_count: usize) -> Result<(), GuardrailError> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.tier > tier_count {
                return Err(GuardrailError::Knowledge(format!(
                    "entry {i} (topic `{}`) has tier {} above the ceiling {tier_count}",
                    e.topic, e.tier
                )));
            }
            if let Some(m) = e.min_trust {
                if !(0.0..=1.0).contains(&m) {
                    return Err(GuardrailError::Knowledge(format!(
                        "entry {i} (topic `{}`) has min_trust {m} outside [0,1]",
                        e.topic
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Select the context bundle for one turn: entries whose topic matches the
/// input's category, whose tier does not exceed the unlocked tier, and
/// whose `min_trust` (if any) is covered by the trust score. The result is
/// ordered ascending by tier.
///
/// No category (a safe input, or a classifier without topic tags) selects
/// nothing: context injection only serves categorized sensitive requests.
pub fn compose_context<'a>(
    category: Option<&str>,
    tier: usize,
    kb: &'a KnowledgeBase,
    trust: f64,
) -> Vec<&'a KnowledgeEntry> {
    let Some(category) = category else {
        return Vec::new();
    };
    let mut selected: Vec<&KnowledgeEntry> = kb
        .entries
        .iter()
        .filter(|e| e.topic == category)
        .filter(|e| e.tier <= tier)
        .filter(|e| e.min_trust.is_none_or(|m| trust >= m))
        .collect();
    selected.sort_by_key(|e| e.tier);
    selected
}

/// Render a context bundle into the system-prompt block handed upstream.
pub fn render_context(entries: &[&KnowledgeEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("[tier {} | {}] {}", e.tier, e.topic, e.content))
        .collect::<Vec<_>>()
        .join("\n")
}
