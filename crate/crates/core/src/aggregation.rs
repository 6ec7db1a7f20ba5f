//! Template aggregation: fusing a set of embeddings of one subject into a
//! single representative, weighted by recognizability.
//!
//! A plain average lets unrecognizable members drag the fused embedding
//! toward the UI centroid; weighting members by their recognizability score
//! suppresses exactly those members. All strategies reduce to a weighted
//! mean followed by renormalization — they differ only in how weights are
//! derived from the capped scores.

use crate::embedding::{mean_direction, Embedding, DEGENERATE_NORM};
use crate::ers::ErsValue;
use crate::{Error, Result};

/// How member weights are derived from capped recognizability scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightingStrategy {
    /// w = e. The straightforward choice.
    Identity,
    /// w = e^2. Sharper suppression of low-scoring members; tends to give
    /// the lowest verification error of the non-selective strategies.
    Square,
    /// w = exp(e) / sum(exp(e)). Softer than `Square`.
    Softmax,
    /// Keep only the single highest-scoring member (ties: first index).
    TopOne,
    /// Uniform weights over the ceil(fraction * n) highest-scoring members
    /// (at least one; ties broken by earlier index). `TopFraction(1.0)` is
    /// the unweighted average baseline.
    TopFraction(f64),
}

impl WeightingStrategy {
    /// The unweighted-average baseline: every member weighs the same.
    pub fn uniform() -> WeightingStrategy {
        WeightingStrategy::TopFraction(1.0)
    }
}

impl std::fmt::Display for WeightingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightingStrategy::Identity => f.write_str("identity"),
            WeightingStrategy::Square => f.write_str("square"),
            WeightingStrategy::Softmax => f.write_str("softmax"),
            WeightingStrategy::TopOne => f.write_str("top-one"),
            WeightingStrategy::TopFraction(p) => write!(f, "top-fraction:{p}"),
        }
    }
}

impl std::str::FromStr for WeightingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(WeightingStrategy::Identity),
            "square" => Ok(WeightingStrategy::Square),
            "softmax" => Ok(WeightingStrategy::Softmax),
            "top-one" => Ok(WeightingStrategy::TopOne),
            "uniform" => Ok(WeightingStrategy::uniform()),
            other => {
                if let Some(frac) = other.strip_prefix("top-fraction:") {
                    let p: f64 = frac.parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad top-fraction value `{frac}`"))
                    })?;
                    Ok(WeightingStrategy::TopFraction(p))
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown weighting strategy `{other}` \
                         (expected identity|square|softmax|top-one|top-fraction:P|uniform)"
                    )))
                }
            }
        }
    }
}

/// One embedding inside a template, scored and optionally tagged with its
/// source medium.
#[derive(Clone, Debug)]
pub struct TemplateMember {
    pub embedding: Embedding,
    pub ers: ErsValue,
    /// Items from the same medium (e.g. frames of one video) share an id;
    /// `None` means the item is its own medium.
    pub media_id: Option<String>,
}

/// All embeddings enrolled for one subject under one template id.
#[derive(Clone, Debug)]
pub struct Template {
    pub template_id: String,
    pub subject_id: String,
    pub members: Vec<TemplateMember>,
}

/// A fused template: one embedding plus the template-level score
/// (mean of the members' capped scores).
#[derive(Clone, Debug)]
pub struct AggregateResult {
    pub embedding: Embedding,
    pub ers: ErsValue,
}

/// Turns member recognizability scores into aggregation weights.
///
/// - `identity`: the capped score itself
/// - `square`: capped score squared (sharpest useful down-weighting)
/// - `softmax`: exp(score) normalized over the members
/// - `top-one`: all weight on the highest-scored member (ties: lowest index)
/// - `top-fraction(p)`: uniform weight on the ⌈p·n⌉ highest-scored members
pub fn compute_weights(ers: &[ErsValue], strategy: WeightingStrategy) -> Result<Vec<f64>> {
    if ers.is_empty() {
        return Err(Error::Empty("weight computation needs at least one score"));
    }
    let capped: Vec<f64> = ers.iter().map(|e| e.capped()).collect();
    weights_for(strategy, &capped)
}

fn weights_for(strategy: WeightingStrategy, capped: &[f64]) -> Result<Vec<f64>> {
    let n = capped.len();
    match strategy {
        WeightingStrategy::Identity => Ok(capped.to_vec()),
        WeightingStrategy::Square => Ok(capped.iter().map(|e| e * e).collect()),
        WeightingStrategy::Softmax => {
            let total: f64 = capped.iter().map(|e| e.exp()).sum();
            Ok(capped.iter().map(|e| e.exp() / total).collect())
        }
        WeightingStrategy::TopOne => Ok(top_k_weights(capped, 1)),
        WeightingStrategy::TopFraction(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "top-fraction {p} outside (0, 1]"
                )));
            }
            // Guard against float dust pushing an exact integer product
            // over the next ceil boundary (e.g. 0.1 * 50 evaluating to
            // 5.0000000000000005).
            let k = ((p * n as f64) - 1e-9).ceil() as usize;
            Ok(top_k_weights(capped, k.clamp(1, n)))
        }
    }
}

/// Uniform weights on the k highest scores; ties resolved toward earlier
/// member indices.
fn top_k_weights(capped: &[f64], k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..capped.len()).collect();
    order.sort_by(|&a, &b| {
        capped[b]
            .partial_cmp(&capped[a])
            .expect("capped scores are finite")
            .then(a.cmp(&b))
    });
    let mut weights = vec![0.0; capped.len()];
    for &idx in order.iter().take(k) {
        weights[idx] = 1.0;
    }
    weights
}

fn weighted_mean(members: &[(&Embedding, f64)]) -> Result<Embedding> {
    let dim = members[0].0.dim();
    let mut acc = vec![0.0f64; dim];
    let mut total = 0.0f64;
    for (embedding, w) in members {
        if embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: embedding.dim(),
            });
        }
        for (a, v) in acc.iter_mut().zip(embedding.values()) {
            *a += w * v;
        }
        total += w;
    }
    if total.abs() < DEGENERATE_NORM {
        return Err(Error::ZeroWeights);
    }
    for a in acc.iter_mut() {
        *a /= total;
    }
    Embedding::new(acc).map_err(|e| match e {
        // A zero resultant here means the weighted members cancelled out.
        Error::ZeroVector => Error::DegenerateMean,
        other => other,
    })
}

/// Fuse a template's members into one embedding using the given weighting,
/// treating every member independently (no media grouping).
///
/// The fused embedding is the weight-normalized mean of the members,
/// renormalized to unit length; the fused score is the plain mean of the
/// members' capped scores. Fails on an empty template, all-zero weights,
/// or members that cancel to a degenerate resultant.
pub fn aggregate(template: &Template, strategy: WeightingStrategy) -> Result<AggregateResult> {
    if template.members.is_empty() {
        return Err(Error::Empty("template members"));
    }
    let capped: Vec<f64> = template.members.iter().map(|m| m.ers.capped()).collect();
    let weights = weights_for(strategy, &capped)?;
    let pairs: Vec<(&Embedding, f64)> = template
        .members
        .iter()
        .zip(&weights)
        .map(|(m, &w)| (&m.embedding, w))
        .collect();
    let embedding = weighted_mean(&pairs)?;
    let ers = ErsValue::from_raw(capped.iter().sum::<f64>() / capped.len() as f64);
    Ok(AggregateResult { embedding, ers })
}

/// Fuse a template in two stages: first pool each medium's members with a
/// plain mean (frames of one video should count as one observation, not
/// many), then fuse the per-medium results with the weighting strategy.
///
/// Each medium's pooled score is the mean of its members' capped scores;
/// members without a media id each count as their own medium. Media groups
/// are processed in order of first appearance.
pub fn aggregate_media_pooled(
    template: &Template,
    strategy: WeightingStrategy,
) -> Result<AggregateResult> {
    if template.members.is_empty() {
        return Err(Error::Empty("template members"));
    }

    // Group member indices by media id, preserving first-seen order.
    let mut groups: Vec<(Option<&str>, Vec<usize>)> = Vec::new();
    for (idx, member) in template.members.iter().enumerate() {
        match member.media_id.as_deref() {
            Some(id) => {
                if let Some(group) = groups
                    .iter_mut()
                    .find(|(gid, _)| *gid == Some(id))
                {
                    group.1.push(idx);
                } else {
                    groups.push((Some(id), vec![idx]));
                }
            }
            None => groups.push((None, vec![idx])),
        }
    }

    let mut pooled = Vec::with_capacity(groups.len());
    for (_, indices) in &groups {
        let embeddings: Vec<Embedding> = indices
            .iter()
            .map(|&i| template.members[i].embedding.clone())
            .collect();
        let embedding = mean_direction(&embeddings)?;
        let mean_capped = indices
            .iter()
            .map(|&i| template.members[i].ers.capped())
            .sum::<f64>()
            / indices.len() as f64;
        pooled.push(TemplateMember {
            embedding,
            ers: ErsValue::from_raw(mean_capped),
            media_id: None,
        });
    }

    aggregate(
        &Template {
            template_id: template.template_id.clone(),
            subject_id: template.subject_id.clone(),
            members: pooled,
        },
        strategy,
    )
}

// ---------------------------------------------------------------------------
