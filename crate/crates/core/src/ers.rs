//! Embedding recognizability scores (ERS).
//!
//! The score measures how far an embedding sits from the
//! unrecognizable-identity centroid: `raw = 1 - <f_UI, f>`, which ranges
//! over [0, 2] on the unit sphere. Values above 1 only occur on the far
//! hemisphere, where "even farther from unrecognizable" carries no extra
//! meaning, so the working score is capped at 1. The raw value is kept
//! alongside for diagnostics and distribution plots.

use crate::cluster::UiModel;
use crate::embedding::{Embedding, LabeledEmbedding, DEGENERATE_NORM};
use crate::{Error, Result};

/// A recognizability score: the capped working value plus the raw
/// uncapped one it was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErsValue {
    capped: f64,
    raw: f64,
}

impl ErsValue {
    /// Build from a raw score. Raw values are clamped into [0, 2] (the
    /// attainable range for unit vectors) so that scores read back from
    /// slightly lossy storage still satisfy the type's invariants.
    pub fn from_raw(raw: f64) -> ErsValue {
        let raw = raw.clamp(0.0, 2.0);
        ErsValue {
            capped: raw.min(1.0),
            raw,
        }
    }

    /// The working score in [0, 1]: `min(raw, 1)`.
    pub fn capped(&self) -> f64 {
        self.capped
    }

    /// The uncapped score in [0, 2].
    pub fn raw(&self) -> f64 {
        self.raw
    }
}

/// Score one embedding against the UI centroid.
pub fn compute_ers(f: &Embedding, ui: &UiModel) -> Result<ErsValue> {
    let cos = ui.centroid.cosine_similarity(f)?;
    Ok(ErsValue::from_raw(1.0 - cos))
}

/// Score a whole corpus, preserving input order.
pub fn batch_ers(corpus: &[LabeledEmbedding], ui: &UiModel) -> Result<Vec<(String, ErsValue)>> {
    corpus
        .iter()
        .map(|item| Ok((item.item_id.clone(), compute_ers(&item.embedding, ui)?)))
        .collect()
}

/// Push an embedding to maximum recognizability by removing its component
/// along the UI centroid and renormalizing.
///
/// The projection coefficient is computed as `<f, c> / <c, c>` so the
/// residual is orthogonal to the centroid to machine precision; the
/// enhanced embedding therefore scores `raw = 1` exactly (within float
/// rounding). Embeddings orthogonal to the centroid come back unchanged.
/// Fails when `f` is (anti-)parallel to the centroid, because the residual
/// direction is then undefined.
pub fn enhance_embedding(f: &Embedding, ui: &UiModel) -> Result<Embedding> {
    let cos = ui.centroid.cosine_similarity(f)?;
    if cos.abs() >= 1.0 - DEGENERATE_NORM {
        return Err(Error::DegenerateResidual);
    }
    let c = ui.centroid.values();
    let dot: f64 = f.values().iter().zip(c).map(|(a, b)| a * b).sum();
    let c_sq: f64 = c.iter().map(|v| v * v).sum();
    let coeff = dot / c_sq;
    let residual: Vec<f64> = f
        .values()
        .iter()
        .zip(c)
        .map(|(a, b)| a - coeff * b)
        .collect();
    Embedding::new(residual)
}

// ---------------------------------------------------------------------------
