//! Synthetic user profiles: attestations plus a scripted prompt sequence.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::SimlabError;
use crate::attestation::{AttributeTally, Polarity, TtpAttestation};
use crate::trust::Ranking;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub group: String,
    #[serde(default)]
    pub attestations: Vec<TtpAttestation>,
    pub interaction_script: Vec<String>,
}

impl UserProfile {
    /// Every script entry must name a prompt in the corpus.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<(), SimlabError> {
        for id in &self.interaction_script {
            if corpus.get(id).is_none() {
                return Err(SimlabError::UnknownPrompt {
                    profile: self.user_id.clone(),
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<UserProfile>, SimlabError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| SimlabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&data).map_err(|e| SimlabError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_profiles(
    profiles: &[UserProfile],
    path: impl AsRef<Path>,
) -> Result<(), SimlabError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(profiles).expect("profiles serialize");
    std::fs::write(path, json).map_err(|e| SimlabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

const GROUPS: &[&str] = &["default", "expert", "analyst"];
const AREAS: &[&str] =
    &["computer science", "chemistry", "medicine", "finance", "law enforcement", "security research"];
const ATTRIBUTE_KINDS: &[&str] =
    &["peer_review", "job_title", "publication", "social_reputation", "credential_check"];

/// Seeded random profiles over the bundled corpus id scheme (`h0001`...
/// harmful, `s0001`... safe). Identical `(count, seed)` inputs produce
/// identical output.
pub fn gen_profiles(count: usize, seed: u64) -> Vec<UserProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let user_id = format!("user_{seed:04x}_{i:03}");
            let group = (*GROUPS.choose(&mut rng).expect("groups non-empty")).to_string();
            let ttp_count = rng.random_range(0..=3);
            let attestations = (0..ttp_count)
                .map(|_| {
                    let ranking = match rng.random_range(0..3) {
                        0 => Ranking::Low,
                        1 => Ranking::Medium,
                        _ => Ranking::Top,
                    };
                    let scale = 5.0;
                    let credit = f64::from(rng.random_range(10..=50)) / 10.0;
                    let mut attributes = vec![AttributeTally {
                        kind: ATTRIBUTE_KINDS[rng.random_range(0..ATTRIBUTE_KINDS.len())].into(),
                        polarity: Polarity::Positive,
                        count: rng.random_range(1..=12),
                    }];
                    if rng.random_bool(0.3) {
                        attributes.push(AttributeTally {
                            kind: "complaint".into(),
                            polarity: Polarity::Negative,
                            count: rng.random_range(1..=4),
                        });
                    }
                    TtpAttestation {
                        ttp_id: format!("ttp_{:02}", rng.random_range(0..20)),
                        user_id: user_id.clone(),
                        ranking,
                        area: (*AREAS.choose(&mut rng).expect("areas non-empty")).to_string(),
                        rating_credit: credit,
                        rating_scale_max: scale,
                        attributes,
                        issued_at: 0,
                        ttl: 10_000_000,
                    }
                })
                .collect();
            let script_len = rng.random_range(40..=120);
            let interaction_script = (0..script_len)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        format!("h{:04}", rng.random_range(1..=520))
                    } else {
                        format!("s{:04}", rng.random_range(1..=3000))
                    }
                })
                .collect();
            UserProfile { user_id, group, attestations, interaction_script }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = gen_profiles(5, 42);
        let b = gen_profiles(5, 42);
        assert_eq!(a, b);
        let c = gen_profiles(5, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_attestations_validate() {
        for profile in gen_profiles(20, 7) {
            for att in &profile.attestations {
                att.validate().unwrap();
                assert_eq!(att.user_id, profile.user_id);
            }
            assert!(!profile.interaction_script.is_empty());
        }
    }

    #[test]
    fn profiles_round_trip_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.json");
        let profiles = gen_profiles(3, 9);
        write_profiles(&profiles, &path).unwrap();
        let back = load_profiles(&path).unwrap();
        assert_eq!(profiles, back);
    }
}
