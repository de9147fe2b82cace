//! Tier probe: sweep a prompt across configured trust values and record
//! which knowledge entries become accessible at each value.

use serde::Serialize;

use super::corpus::PromptRecord;
use super::profiles::UserProfile;
use super::SimlabError;
use crate::config::Config;
use crate::guardrail::{compose_context, tier_index, GuardrailEngine};

#[derive(Debug, Clone, Serialize)]
pub struct ProbeEntry {
    pub topic: String,
    pub tier: usize,
    pub min_trust: Option<f64>,
    pub included: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub trust: f64,
    pub tier: usize,
    pub entries: Vec<ProbeEntry>,
}

impl ProbeRow {
    pub fn included_count(&self) -> usize {
        self.entries.iter().filter(|e| e.included).count()
    }
}

/// For each configured trust value: the mapped tier and, for every
/// knowledge entry matching the prompt's category, whether it would be
/// included in the context bundle.
pub fn tier_probe(
    profile: &UserProfile,
    prompt: &PromptRecord,
    config: &Config,
) -> Result<Vec<ProbeRow>, SimlabError> {
    let engine =
        GuardrailEngine::from_config(config).map_err(|e| SimlabError::Engine(e.to_string()))?;
    let verdict = engine
        .providers()
        .classifier
        .classify(&prompt.text)
        .map_err(|e| SimlabError::Engine(format!("{}: {e}", profile.user_id)))?;
    let category = verdict.category.as_deref();
    let kb = engine.knowledge_base();
    let params = engine.params();
    let mut rows = Vec::new();
    for &trust in &config.simlab.probe_trust_values {
        let tier = tier_index(trust, params);
        let bundle = compose_context(category, tier, kb, trust);
        let entries = kb
            .entries()
            .iter()
            .filter(|e| Some(e.topic.as_str()) == category)
            .map(|e| ProbeEntry {
                topic: e.topic.clone(),
                tier: e.tier,
                min_trust: e.min_trust,
                included: bundle.iter().any(|b| std::ptr::eq(*b, e)),
            })
            .collect();
        rows.push(ProbeRow { trust, tier, entries });
    }
    Ok(rows)
}
