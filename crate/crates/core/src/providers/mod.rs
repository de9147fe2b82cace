//! Pluggable text-analysis services: safety classification, embedding, and
//! area-relevance inference.
//!
//! The reference implementations are deterministic, pure functions of
//! `(text, bundled data files)` — repeated calls agree bit-exactly on every
//! platform — so replays and tests never depend on a network or a model
//! download. Remote, chat-completions-compatible clients can be slotted in
//! behind the same traits for real deployments.

mod embed;
mod lexicon;
mod relevance;

pub use embed::HashEmbedder;
pub use lexicon::LexiconClassifier;
pub use relevance::{OverlapRelevance, RemoteLmRelevance};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trust::{self, SafetyLabel};

/// Bundled phrase lexicon (CSV, `phrase,category`).
pub const BUNDLED_LEXICON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lexicon.csv"));
/// Bundled area-expansion table (JSON, area -> synonym tokens).
pub const BUNDLED_AREAS: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/areas.json"));
/// Bundled prompt template for the remote relevance model.
pub const BUNDLED_LM_PROMPT: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lm_prompt.txt"));

/// Default embedding dimension.
pub const DEFAULT_EMBEDDING_DIM: usize = 256;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("text is empty after trimming")]
    EmptyText,
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    /// Remote provider unreachable after retry; callers degrade gracefully.
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed provider data: {0}")]
    DataFormat(String),
    #[error("io error reading provider data: {0}")]
    Io(#[from] std::io::Error),
}

/// Verdict of the safety classifier. Unsafe verdicts always carry a topic
/// category; safe verdicts never do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub label: SafetyLabel,
    pub category: Option<String>,
    /// Classifier confidence in [0,1].
    pub score: f64,
}

impl SafetyVerdict {
    pub fn safe(score: f64) -> Self {
        Self { label: SafetyLabel::Safe, category: None, score }
    }

    pub fn unsafe_with(category: impl Into<String>, score: f64) -> Self {
        Self { label: SafetyLabel::Unsafe, category: Some(category.into()), score }
    }

    pub fn is_safe(&self) -> bool {
        self.label.is_safe()
    }
}

/// A fixed-dimension embedding, L2-normalized unless it is the zero vector
/// (the embedding of empty text).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Normalize `raw` to unit length; an all-zero input stays zero.
    pub fn from_raw(mut raw: Vec<f64>) -> Self {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut raw {
                *x /= norm;
            }
        }
        Self { values: raw }
    }

    pub fn zero(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|x| *x == 0.0)
    }
}

/// Classifies request text as safe or unsafe-with-category.
pub trait SafetyClassifier: Send + Sync {
    fn classify(&self, text: &str) -> Result<SafetyVerdict, ProviderError>;
}

/// Embeds text into a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Embedding;
    fn dim(&self) -> usize;
}

/// Scores how relevant a professional area is to a request, in [0,1].
pub trait RelevanceModel: Send + Sync {
    fn relevance(&self, area: &str, input: &str) -> Result<f64, ProviderError>;
}

/// The provider bundle handed to the guardrail engine.
#[derive(Clone)]
pub struct ProviderSet {
    pub classifier: Arc<dyn SafetyClassifier>,
    pub embedder: Arc<dyn Embedder>,
    pub relevance: Arc<dyn RelevanceModel>,
}

impl ProviderSet {
    /// Deterministic reference providers backed by the bundled data files.
    pub fn reference() -> Self {
        Self {
            classifier: Arc::new(
                LexiconClassifier::from_csv_str(BUNDLED_LEXICON)
                    .expect("bundled lexicon is well-formed"),
            ),
            embedder: Arc::new(HashEmbedder::new(DEFAULT_EMBEDDING_DIM)),
            relevance: Arc::new(
                OverlapRelevance::from_json_str(BUNDLED_AREAS)
                    .expect("bundled area table is well-formed"),
            ),
        }
    }
}

/// Cosine similarity rescaled to [0,1]: `(1 + cos(u, v)) / 2`. Cosine with
/// any zero vector is defined as 0, so the result degrades to 0.5.
pub fn normalized_cosine(u: &Embedding, v: &Embedding) -> Result<f64, ProviderError> {
    let cos = trust::cosine_similarity(u.values(), v.values()).map_err(|e| match e {
        trust::TrustError::DimensionMismatch { left, right } => {
            ProviderError::DimensionMismatch { left, right }
        }
        other => ProviderError::DataFormat(other.to_string()),
    })?;
    Ok((1.0 + cos) / 2.0)
}

/// Lowercase alphanumeric tokenization shared by the reference providers.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_cosine_of_identical_vectors_is_one() {
        let e = HashEmbedder::new(64).embed("sorting algorithms in practice");
        assert!((normalized_cosine(&e, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_cosine_of_opposite_vectors_is_zero() {
        let e = Embedding::from_raw(vec![0.5, -0.5]);
        let neg = Embedding::from_raw(vec![-0.5, 0.5]);
        assert!(normalized_cosine(&e, &neg).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normalized_cosine_with_zero_vector_is_half() {
        let e = Embedding::from_raw(vec![1.0, 0.0]);
        let z = Embedding::zero(2);
        assert_eq!(normalized_cosine(&e, &z).unwrap(), 0.5);
    }

    #[test]
    fn normalized_cosine_rejects_dimension_mismatch() {
        let a = Embedding::zero(2);
        let b = Embedding::zero(3);
        assert!(normalized_cosine(&a, &b).is_err());
    }

    #[test]
    fn embedding_normalizes_to_unit_length() {
        let e = Embedding::from_raw(vec![3.0, 4.0]);
        let norm: f64 = e.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn tokenizer_strips_punctuation_and_case() {
        assert_eq!(tokenize("Write-Code, NOW! 3d"), vec!["write", "code", "now", "3d"]);
        assert!(tokenize("  ...  ").is_empty());
    }
}
