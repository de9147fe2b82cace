//! Trustrail — a trust-adaptive guardrail layer for LLM applications.
//!
//! Instead of applying one static moderation rule to every user, the engine
//! computes a per-user composite trust score and gates access to sensitive
//! content with it. The score blends two sources:
//!
//! * **direct interaction trust** — a beta-mean estimate over time-decayed
//!   safe/unsafe interaction counts within a sliding window, adjusted by how
//!   consistent the current request is with recent history;
//! * **authority-verified trust** — aggregated endorsements from trusted
//!   third parties (TTPs) that attest a user's ranking, professional area,
//!   rating credits, and attribute tallies.
//!
//! The composite score selects one of three decision levels — `relax`
//! (tiered access to a hierarchical knowledge base), `normal` (moderated,
//! interaction continues), or `strict` (terminate and lock) — and maps trust
//! onto a knowledge tier that bounds context depth and generation
//! parameters.
//!
//! The crate ships four layers on top of the scoring core:
//!
//! * [`providers`] — pluggable safety classification, embedding, and
//!   area-relevance services with deterministic reference implementations;
//! * [`attestation`] — a TTP attestation registry with freshness tracking
//!   and mandatory periodic re-validation;
//! * [`guardrail`] — the decision engine and knowledge-base tiering;
//! * [`gateway`] — an HTTP proxy that persists trust state in an
//!   append-only event log and forwards granted requests upstream;
//! * [`simlab`] — a command-line harness that replays prompt corpora
//!   against synthetic user profiles and reports access metrics.

pub mod attestation;
pub mod config;
pub mod gateway;
pub mod guardrail;
pub mod providers;
pub mod simlab;
pub mod trust;

pub use config::Config;
pub use guardrail::{GuardrailDecision, GuardrailEngine};
pub use trust::{TrustError, TrustParams};
