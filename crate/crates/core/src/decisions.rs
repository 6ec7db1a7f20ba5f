//! Match decisions: verification and open-set identification, with and
//! without the recognizability gate.
//!
//! The gate implements a simple idea: a comparison score against an
//! unrecognizable embedding is noise, so refuse to accept it no matter how
//! high the similarity. Gating can only turn accepts into rejects — a gated
//! decision accepts a strict subset of what the ungated one accepts at the
//! same similarity threshold.

use crate::embedding::Embedding;
use crate::ers::ErsValue;
use crate::{Error, Result};

/// Default recognizability gate. Scores are capped at 1; requiring 0.6
/// keeps embeddings that are closer to their identity's direction than to
/// the unrecognizable centroid.
pub const DEFAULT_GAMMA: f64 = 0.60;

/// Thresholds shared by all decision functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionConfig {
    tau: f64,
    gamma: f64,
    gate_gallery: bool,
}

impl DecisionConfig {
    /// A config with similarity threshold `tau` (cosine, in [-1, 1]), the
    /// default recognizability gate, and gallery gating off.
    pub fn new(tau: f64) -> Result<DecisionConfig> {
        if !(-1.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "tau {tau} outside [-1, 1]"
            )));
        }
        Ok(DecisionConfig {
            tau,
            gamma: DEFAULT_GAMMA,
            gate_gallery: false,
        })
    }

    /// Replace the recognizability gate (capped-score units, in [0, 1]).
    pub fn with_gamma(mut self, gamma: f64) -> Result<DecisionConfig> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} outside [0, 1]"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Also apply the gate to gallery entries during identification,
    /// excluding unrecognizable enrollments from the candidate set. Off by
    /// default: galleries are normally curated, and excluding entries
    /// changes which identity wins the argmax.
    pub fn with_gallery_gating(mut self, on: bool) -> DecisionConfig {
        self.gate_gallery = on;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gate_gallery(&self) -> bool {
        self.gate_gallery
    }
}

/// Outcome of an open-set identification attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOutcome {
    /// True when the best candidate cleared every applicable threshold.
    pub matched: bool,
    /// 1-based position of the matched gallery entry (1..=N, so callers
    /// that print it can use 0 as the conventional no-match marker);
    /// `None` when unmatched.
    pub gallery_index: Option<usize>,
    /// Best similarity seen, kept for diagnostics even on a reject.
    /// `-inf` when no gallery entry was eligible for comparison.
    pub best_similarity: f64,
}

/// Plain 1:1 verification: accept iff cosine similarity >= tau.
pub fn verify(a: &Embedding, b: &Embedding, cfg: &DecisionConfig) -> Result<bool> {
    Ok(a.cosine_similarity(b)? >= cfg.tau)
}

/// Gated 1:1 verification: accept iff the similarity clears tau AND both
/// sides' capped recognizability scores clear gamma.
pub fn verify_with_ers(
    a: &Embedding,
    b: &Embedding,
    ers_a: ErsValue,
    ers_b: ErsValue,
    cfg: &DecisionConfig,
) -> Result<bool> {
    let similar = a.cosine_similarity(b)? >= cfg.tau;
    Ok(similar && ers_a.capped() >= cfg.gamma && ers_b.capped() >= cfg.gamma)
}

/// Plain 1:N identification: argmax of similarity over the gallery, match
/// iff the best clears tau. Ties go to the smallest gallery index.
pub fn identify(
    query: &Embedding,
    gallery: &[Embedding],
    cfg: &DecisionConfig,
) -> Result<SearchOutcome> {
    if gallery.is_empty() {
        return Err(Error::Empty("gallery"));
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = None;
    for (idx, entry) in gallery.iter().enumerate() {
        let s = query.cosine_similarity(entry)?;
        if s > best {
            best = s;
            best_idx = Some(idx);
        }
    }
    let matched = best_idx.is_some() && best >= cfg.tau;
    Ok(SearchOutcome {
        matched,
        gallery_index: if matched { best_idx.map(|i| i + 1) } else { None },
        best_similarity: best,
    })
}

/// Gated 1:N identification.
///
/// A query below the gate is rejected outright — its similarities are
/// meaningless. With gallery gating enabled, entries below the gate are
/// excluded from the candidate set before the argmax (which requires their
/// scores via `gallery_ers`); otherwise the full gallery competes. With
/// `gamma == 0` this reduces exactly to [`identify`], since capped scores
/// are never negative.
pub fn identify_with_ers(
    query: &Embedding,
    query_ers: ErsValue,
    gallery: &[Embedding],
    gallery_ers: Option<&[ErsValue]>,
    cfg: &DecisionConfig,
) -> Result<SearchOutcome> {
    if gallery.is_empty() {
        return Err(Error::Empty("gallery"));
    }
    let eligible: Vec<usize> = if cfg.gate_gallery {
        let scores = gallery_ers.ok_or(Error::MissingGalleryScores)?;
        if scores.len() != gallery.len() {
            return Err(Error::InvalidParameter(format!(
                "gallery has {} entries but {} recognizability scores",
                gallery.len(),
                scores.len()
            )));
        }
        (0..gallery.len())
            .filter(|&i| scores[i].capped() >= cfg.gamma)
            .collect()
    } else {
        (0..gallery.len()).collect()
    };

    let mut best = f64::NEG_INFINITY;
    let mut best_idx = None;
    for &idx in &eligible {
        let s = query.cosine_similarity(&gallery[idx])?;
        if s > best {
            best = s;
            best_idx = Some(idx);
        }
    }

    let matched = query_ers.capped() >= cfg.gamma && best_idx.is_some() && best >= cfg.tau;
    Ok(SearchOutcome {
        matched,
        gallery_index: if matched { best_idx.map(|i| i + 1) } else { None },
        best_similarity: best,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(values: &[f64]) -> Embedding {
        Embedding::new(values.to_vec()).unwrap()
    }

    fn ers(v: f64) -> ErsValue {
        ErsValue::from_raw(v)
    }

    #[test]
    fn config_validation() {
        assert!(DecisionConfig::new(1.5).is_err());
        assert!(DecisionConfig::new(-1.5).is_err());
        assert!(DecisionConfig::new(0.5).unwrap().with_gamma(1.5).is_err());
        assert!(DecisionConfig::new(0.5).unwrap().with_gamma(-0.1).is_err());
        let cfg = DecisionConfig::new(0.5).unwrap();
        assert_eq!(cfg.gamma(), DEFAULT_GAMMA);
        assert!(!cfg.gate_gallery());
    }

    #[test]
    fn verification_boundary_is_inclusive() {
        let a = unit(&[1.0, 0.0]);
        let b = unit(&[0.6, 0.8]);
        // cos(a, b) = 0.6 exactly.
        let at = DecisionConfig::new(0.6).unwrap();
        let above = DecisionConfig::new(0.61).unwrap();
        assert!(verify(&a, &b, &at).unwrap());
        assert!(!verify(&a, &b, &above).unwrap());
    }

    #[test]
    fn gate_boundary_is_inclusive() {
        let a = unit(&[1.0, 0.0]);
        let cfg = DecisionConfig::new(0.9).unwrap().with_gamma(0.6).unwrap();
        assert!(verify_with_ers(&a, &a, ers(0.6), ers(0.6), &cfg).unwrap());
        assert!(!verify_with_ers(&a, &a, ers(0.6), ers(0.5999), &cfg).unwrap());
        assert!(!verify_with_ers(&a, &a, ers(0.5999), ers(0.6), &cfg).unwrap());
    }

    #[test]
    fn gated_verification_is_a_subset_of_ungated() {
        // Exhaustive over a small grid: whenever the gated decision
        // accepts, the ungated one must accept too.
        let a = unit(&[1.0, 0.0]);
        let candidates = [
            unit(&[1.0, 0.0]),
            unit(&[0.6, 0.8]),
            unit(&[0.0, 1.0]),
            unit(&[-0.6, 0.8]),
        ];
        for tau in [-1.0, -0.3, 0.0, 0.6, 0.9] {
            for e in [0.0, 0.3, 0.6, 0.9] {
                let cfg = DecisionConfig::new(tau).unwrap();
                for b in &candidates {
                    let gated = verify_with_ers(&a, b, ers(e), ers(e), &cfg).unwrap();
                    let plain = verify(&a, b, &cfg).unwrap();
                    assert!(!gated || plain, "tau={tau} ers={e}");
                }
            }
        }
    }

    #[test]
    fn identification_picks_argmax_with_earliest_entry_on_ties() {
        let query = unit(&[1.0, 0.0]);
        let gallery = vec![
            unit(&[0.0, 1.0]),
            unit(&[0.6, 0.8]),
            unit(&[0.6, -0.8]), // same similarity as the second entry
        ];
        let out = identify(&query, &gallery, &DecisionConfig::new(0.5).unwrap()).unwrap();
        assert!(out.matched);
        // Positions are 1-based: the tie resolves to the second entry.
        assert_eq!(out.gallery_index, Some(2));
        assert_eq!(out.best_similarity, 0.6);

        // Below tau: no match, but the best score is still reported.
        let out = identify(&query, &gallery, &DecisionConfig::new(0.7).unwrap()).unwrap();
        assert!(!out.matched);
        assert_eq!(out.gallery_index, None);
        assert_eq!(out.best_similarity, 0.6);
    }

    #[test]
    fn empty_gallery_is_an_error() {
        let query = unit(&[1.0, 0.0]);
        let cfg = DecisionConfig::new(-1.0).unwrap();
        assert!(matches!(
            identify(&query, &[], &cfg),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            identify_with_ers(&query, ers(1.0), &[], None, &cfg),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn unrecognizable_query_is_rejected() {
        let query = unit(&[1.0, 0.0]);
        let gallery = vec![unit(&[1.0, 0.0])];
        let cfg = DecisionConfig::new(0.5).unwrap();
        let out = identify_with_ers(&query, ers(0.2), &gallery, None, &cfg).unwrap();
        assert!(!out.matched);
        assert_eq!(out.gallery_index, None);
        // The similarity is still surfaced for diagnostics.
        assert_eq!(out.best_similarity, 1.0);
    }

    #[test]
    fn gallery_gating_excludes_unrecognizable_entries() {
        let query = unit(&[1.0, 0.0]);
        let gallery = vec![unit(&[1.0, 0.0]), unit(&[0.8, 0.6])];
        let gallery_ers = vec![ers(0.1), ers(0.9)]; // best match is gated out
        let cfg = DecisionConfig::new(0.5)
            .unwrap()
            .with_gallery_gating(true);

        let out = identify_with_ers(&query, ers(0.9), &gallery, Some(&gallery_ers), &cfg).unwrap();
        assert!(out.matched);
        assert_eq!(out.gallery_index, Some(2));
        assert_eq!(out.best_similarity, 0.8);

        // Gallery gating without scores is an error.
        assert!(matches!(
            identify_with_ers(&query, ers(0.9), &gallery, None, &cfg),
            Err(Error::MissingGalleryScores)
        ));

        // All entries gated out: a clean no-match.
        let all_low = vec![ers(0.1), ers(0.2)];
        let out = identify_with_ers(&query, ers(0.9), &gallery, Some(&all_low), &cfg).unwrap();
        assert!(!out.matched);
        assert_eq!(out.best_similarity, f64::NEG_INFINITY);
    }

    #[test]
    fn zero_gamma_reduces_to_ungated_identification() {
        let query = unit(&[0.6, 0.8]);
        let gallery = vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[0.6, 0.8])];
        let gallery_ers = vec![ers(0.0), ers(0.0), ers(0.0)];
        for tau in [-1.0, 0.0, 0.79, 0.99] {
            let cfg = DecisionConfig::new(tau)
                .unwrap()
                .with_gamma(0.0)
                .unwrap()
                .with_gallery_gating(true);
            let plain = identify(&query, &gallery, &cfg).unwrap();
            let gated =
                identify_with_ers(&query, ers(0.0), &gallery, Some(&gallery_ers), &cfg).unwrap();
            assert_eq!(plain, gated, "tau={tau}");
        }
    }
}
