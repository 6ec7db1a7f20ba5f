//! Unit-norm embeddings and hypersphere geometry.
//!
//! Everything downstream (clustering, scoring, aggregation) assumes vectors
//! live on the unit hypersphere, so the invariant is enforced here once:
//! an [`Embedding`] is always finite and unit-norm. Construction normalizes
//! when needed and rejects degenerate input instead of silently producing
//! NaNs.

use crate::{Error, Result};

/// Norm deviation tolerated before construction renormalizes.
///
/// Vectors already within this band of unit length are stored as-is, which
/// keeps float32 round-trips through the on-disk format bit-stable.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Norms below this are treated as degenerate (effectively zero).
pub const DEGENERATE_NORM: f64 = 1e-9;

/// A unit-norm vector on the d-dimensional hypersphere.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Build an embedding from raw components, normalizing to unit length.
    ///
    /// Inputs whose norm is already within [`UNIT_NORM_TOLERANCE`] of 1 are
    /// kept bit-for-bit. Fails on empty input, non-finite components, or a
    /// norm below [`DEGENERATE_NORM`].
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("embedding has no components"));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < DEGENERATE_NORM {
            return Err(Error::ZeroVector);
        }
        let values = if (norm - 1.0).abs() <= UNIT_NORM_TOLERANCE {
            raw
        } else {
            raw.into_iter().map(|v| v / norm).collect()
        };
        Ok(Embedding { values })
    }

    /// Dimensionality of the embedding.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The components, always unit-norm.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Inner product of two unit vectors, clamped to [-1, 1] so that
    /// accumulated rounding can never push it outside the valid cosine
    /// range.
    pub fn cosine_similarity(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(dot.clamp(-1.0, 1.0))
    }

    /// Euclidean (chordal) distance between two points on the sphere:
    /// sqrt(2 - 2 cos). Ranges over [0, 2].
    pub fn chordal_distance(&self, other: &Embedding) -> Result<f64> {
        let cos = self.cosine_similarity(other)?;
        Ok((2.0 - 2.0 * cos).max(0.0).sqrt())
    }
}

/// Normalized mean of a set of embeddings (the extrinsic mean direction).
///
/// Components are accumulated in input order so the result is exactly
/// reproducible for a given sequence. Fails on an empty set, mixed
/// dimensions, or inputs that cancel to a near-zero resultant.
pub fn mean_direction(set: &[Embedding]) -> Result<Embedding> {
    let first = set.first().ok_or(Error::Empty("embedding set"))?;
    let dim = first.dim();
    let mut acc = vec![0.0f64; dim];
    for e in set {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: e.dim(),
            });
        }
        for (a, v) in acc.iter_mut().zip(e.values()) {
            *a += v;
        }
    }
    let n = set.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return Err(Error::DegenerateMean);
    }
    Embedding::new(acc)
}

/// An embedding tagged with the identifiers evaluation protocols need.
#[derive(Clone, Debug)]
pub struct LabeledEmbedding {
    /// Unique id of this embedding within a corpus.
    pub item_id: String,
    /// Identity the embedding belongs to (empty when unknown).
    pub subject_id: String,
    /// Source medium (e.g. a video id) for media-aware pooling; `None`
    /// when every item is its own medium.
    pub media_id: Option<String>,
    pub embedding: Embedding,
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(values: &[f64]) -> Embedding {
        Embedding::new(values.to_vec()).unwrap()
    }

    #[test]
    fn construction_normalizes_off_unit_input() {
        let e = unit(&[3.0, 4.0]);
        assert!((e.values()[0] - 0.6).abs() < 1e-12);
        assert!((e.values()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn construction_keeps_near_unit_input_bitwise() {
        // Inside the tolerance band nothing is touched.
        let raw = vec![1.0 + 5e-7, 0.0, 0.0];
        let e = Embedding::new(raw.clone()).unwrap();
        assert_eq!(e.values(), raw.as_slice());
    }

    #[test]
    fn construction_rejects_degenerate_input() {
        assert!(matches!(Embedding::new(vec![]), Err(Error::Empty(_))));
        assert!(matches!(
            Embedding::new(vec![0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            Embedding::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
        assert!(matches!(
            Embedding::new(vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn cosine_of_known_pairs() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        let neg_x = unit(&[-1.0, 0.0]);
        assert_eq!(x.cosine_similarity(&x).unwrap(), 1.0);
        assert_eq!(x.cosine_similarity(&y).unwrap(), 0.0);
        assert_eq!(x.cosine_similarity(&neg_x).unwrap(), -1.0);
    }

    #[test]
    fn chordal_of_known_pairs() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        let neg_x = unit(&[-1.0, 0.0]);
        assert!((x.chordal_distance(&x).unwrap() - 0.0).abs() < 1e-12);
        assert!((x.chordal_distance(&y).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((x.chordal_distance(&neg_x).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = unit(&[1.0, 0.0]);
        let b = unit(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            a.cosine_similarity(&b),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn mean_direction_of_symmetric_pair() {
        let a = unit(&[1.0, 0.0]);
        let b = unit(&[0.0, 1.0]);
        let m = mean_direction(&[a, b]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((m.values()[0] - s).abs() < 1e-12);
        assert!((m.values()[1] - s).abs() < 1e-12);
    }

    #[test]
    fn mean_direction_rejects_cancelling_inputs() {
        let a = unit(&[1.0, 0.0]);
        let b = unit(&[-1.0, 0.0]);
        assert!(matches!(
            mean_direction(&[a, b]),
            Err(Error::DegenerateMean)
        ));
        assert!(matches!(mean_direction(&[]), Err(Error::Empty(_))));
    }

    proptest! {
        // chordal^2 == 2 - 2cos is the identity gluing the two metrics;
        // it must hold for arbitrary directions, not just axis vectors.
        #[test]
        fn chordal_squared_matches_cosine(
            a in proptest::collection::vec(-1.0f64..1.0, 4),
            b in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-6);
            prop_assume!(b.iter().map(|v| v * v).sum::<f64>() > 1e-6);
            let ea = Embedding::new(a).unwrap();
            let eb = Embedding::new(b).unwrap();
            let cos = ea.cosine_similarity(&eb).unwrap();
            let d = ea.chordal_distance(&eb).unwrap();
            prop_assert!((d * d - (2.0 - 2.0 * cos)).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&cos));
            prop_assert!((0.0..=2.0).contains(&d));
        }

        #[test]
        fn mean_direction_ignores_order_and_duplication(
            vecs in proptest::collection::vec(
                proptest::collection::vec(-1.0f64..1.0, 3), 2..6),
        ) {
            let embeddings: Vec<Embedding> = vecs
                .iter()
                .filter(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
                .map(|v| Embedding::new(v.clone()).unwrap())
                .collect();
            prop_assume!(embeddings.len() >= 2);

            let forward = mean_direction(&embeddings);
            let mut reversed = embeddings.clone();
            reversed.reverse();
            let backward = mean_direction(&reversed);
            let mut doubled = embeddings.clone();
            doubled.extend(embeddings.iter().cloned());
            let twice = mean_direction(&doubled);

            match (forward, backward, twice) {
                (Ok(f), Ok(b), Ok(t)) => {
                    for i in 0..f.dim() {
                        prop_assert!((f.values()[i] - b.values()[i]).abs() < 1e-9);
                        prop_assert!((f.values()[i] - t.values()[i]).abs() < 1e-9);
                    }
                }
                // Near-cancelling sets may legitimately fail; all variants
                // must then agree that they fail.
                (Err(_), Err(_), Err(_)) => {}
                _ => prop_assert!(false, "order/duplication changed the outcome"),
            }
        }
    }
}
