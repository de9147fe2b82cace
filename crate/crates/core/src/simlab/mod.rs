//! Simulation lab: replay prompt corpora and synthetic user profiles
//! through the guardrail engine (no network, no persistence) and report
//! access metrics, decision-level shares, and per-interaction traces.

pub mod corpus;
pub mod gen;
pub mod probe;
pub mod profiles;
pub mod replay;
pub mod report;

pub use corpus::{load_corpus, Corpus, Domain, PromptRecord};
pub use probe::{tier_probe, ProbeEntry, ProbeRow};
pub use profiles::{gen_profiles, load_profiles, write_profiles, UserProfile};
pub use replay::{replay, ProfileMetrics, ReplayOptions, RunReport, TraceEntry};
pub use report::write_report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimlabError {
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("label references unknown prompt id `{id}`")]
    DanglingLabel { id: String },
    #[error("label for `{id}` marks a benign prompt as harmful")]
    LabelInvariant { id: String },
    #[error("profile `{profile}` scripts unknown prompt id `{id}`")]
    UnknownPrompt { profile: String, id: String },
    #[error("unknown profile id `{id}`")]
    UnknownProfile { id: String },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("engine: {0}")]
    Engine(String),
}
