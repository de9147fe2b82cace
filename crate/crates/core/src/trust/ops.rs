//! The trust equations.
//!
//! Direct trust follows a beta-mean estimator over time-decayed safe/unsafe
//! interaction mass plus an interaction-consistency bonus; authority trust
//! is a weighted mean of per-TTP rating-times-relevance products, weighted
//! by authority, similarity of views, and confidence. The composite score
//! is a convex blend of the two under an adaptive weight.

use super::{InteractionRecord, Ranking, SafetyLabel, TrustError, TrustParams, TtpEvaluation};

/// Exponential time-decay weight `e^(-gamma * (now - then))`.
///
/// Equals 1 when no time has elapsed or `gamma` is 0, and strictly
/// decreases in elapsed time for positive `gamma`. A regressing clock
/// (`now < then`) is an error, not a weight greater than one.
pub fn decay_factor(now: u64, then: u64, gamma: f64) -> Result<f64, TrustError> {
    if now < then {
        return Err(TrustError::ClockRegression { now, then });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(TrustError::InvalidParam {
            name: "gamma",
            reason: format!("{gamma} must be a finite value >= 0"),
        });
    }
    Ok((-gamma * (now - then) as f64).exp())
}

/// Decayed safe/unsafe mass `(a, b)` over the most recent window of
/// `history`, plus the current interaction.
///
/// Only the last `params.window` records contribute; older entries are
/// ignored entirely. The current interaction enters undecayed as a unit of
/// safe or unsafe mass.
pub fn update_counts(
    history: &[InteractionRecord],
    now: u64,
    current: SafetyLabel,
    params: &TrustParams,
) -> Result<(f64, f64), TrustError> {
    let start = history.len().saturating_sub(params.window);
    let mut a = 0.0;
    let mut b = 0.0;
    for rec in &history[start..] {
        let d = decay_factor(now, rec.timestamp, params.gamma)?;
        match rec.safety {
            SafetyLabel::Safe => a += d,
            SafetyLabel::Unsafe => b += d,
        }
    }
    match current {
        SafetyLabel::Safe => a += 1.0,
        SafetyLabel::Unsafe => b += 1.0,
    }
    Ok((a, b))
}

/// Cosine similarity with the zero-vector convention: any zero vector
/// yields 0. The result is clamped to [-1, 1] to absorb rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, TrustError> {
    if u.len() != v.len() {
        return Err(TrustError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (x, y) in u.iter().zip(v) {
        dot += x * y;
        nu += x * x;
        nv += y * y;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Interaction consistency: mean of `((1 + cos(v, v_t)) / 2)^2` over the
/// supplied history embeddings.
///
/// The divisor is the number of history vectors actually present, so a
/// short history is not penalized toward zero; an empty history is
/// vacuously consistent (1.0).
pub fn interaction_consistency<'a, I>(current: &[f64], history: I) -> Result<f64, TrustError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for past in history {
        let cos = cosine_similarity(current, past)?;
        let scaled = (1.0 + cos) / 2.0;
        sum += scaled * scaled;
        n += 1;
    }
    if n == 0 {
        Ok(1.0)
    } else {
        Ok(sum / n as f64)
    }
}

/// Direct interaction trust: `(a + ic*w + 1) / (a + b*n + 2)`.
///
/// With `w <= 1` and `n >= 1` the value stays strictly inside (0, 1); the
/// empty state `(0, 0, 0)` sits at the uninformative prior 0.5.
pub fn direct_trust(a: f64, b: f64, ic: f64, params: &TrustParams) -> f64 {
    (a + ic * params.ic_weight + 1.0) / (a + b * params.unsafe_coeff + 2.0)
}

/// Adaptive weight `eta` placed on authority-verified trust.
///
/// Top-ranked verification yields full reliance (1). For lower rankings the
/// weight is gated by the dialogue-average direct trust: below `delta` it is
/// 0, at or above `delta` it follows `theta + (1-theta) / (1 + e^(I*(mean -
/// delta)))`, which equals `theta + (1-theta)/2` exactly at the gate.
pub fn adaptive_weight(ranking: Ranking, dt_mean: f64, params: &TrustParams) -> f64 {
    match ranking {
        Ranking::Top => 1.0,
        _ if dt_mean < params.delta => 0.0,
        _ => {
            params.theta
                + (1.0 - params.theta)
                    / (1.0 + (params.steepness * (dt_mean - params.delta)).exp())
        }
    }
}

/// Composite trust: `eta * at + (1 - eta) * dt`.
pub fn composite_trust(eta: f64, at: f64, dt: f64) -> f64 {
    eta * at + (1.0 - eta) * dt
}

/// Authority-scaled positive/negative attribute mass from one TTP:
/// `(A * sum(pos), A * sum(neg))`.
pub fn aggregate_attributes(pos_counts: &[u64], neg_counts: &[u64], authority: f64) -> (f64, f64) {
    let pos: u64 = pos_counts.iter().sum();
    let neg: u64 = neg_counts.iter().sum();
    (authority * pos as f64, authority * neg as f64)
}

/// Confidence in a TTP's attestation, a beta mean over its attribute mass:
/// `(pos + 1) / (pos + neg + 2)`.
pub fn confidence(pos: f64, neg: f64) -> f64 {
    (pos + 1.0) / (pos + neg + 2.0)
}

/// Similarity of views between the trustor's dialogue-average direct trust
/// and a TTP's normalized rating: `1 - |dt_mean - nr|`.
pub fn similarity_of_views(dt_mean: f64, nr: f64) -> f64 {
    1.0 - (dt_mean - nr).abs()
}

/// Area relevance: the more generous of the embedding-based estimate and
/// the model-inferred score, so a failed model lookup (scored 0) can never
/// drag the estimate below the embedding route.
pub fn area_relevance(cos_norm: f64, lm_score: f64) -> f64 {
    cos_norm.max(lm_score)
}

/// Authority-verified trust: the weighted mean of `NR_k * AR_k` across
/// TTPs, with weights `A_k * S_k * C_k`.
///
/// An empty list, or one whose weights all vanish, carries no usable
/// signal and is reported as [`TrustError::NoUsableAttestation`]; callers
/// fall back to direct trust alone.
pub fn authority_trust(evals: &[TtpEvaluation]) -> Result<f64, TrustError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for e in evals {
        let w = e.weight();
        num += w * e.normalized_rating * e.area_relevance;
        den += w;
    }
    if den <= 0.0 {
        return Err(TrustError::NoUsableAttestation);
    }
    Ok(num / den)
}
