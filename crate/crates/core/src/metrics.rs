//! Biometric evaluation: verification ROC sweeps, open-set identification
//! metrics, and the pipelines that produce the scores they consume.
//!
//! Two conventions matter everywhere here and are shared with the tests'
//! independent oracles:
//!
//! * Thresholds are picked from the observed score values. For a target
//!   false-accept rate, at most `floor(target * N)` negatives may pass, and
//!   the threshold is the smallest candidate score that stays within that
//!   budget (candidates additionally include one value just above the
//!   highest negative so a zero-accept point always exists). Comparisons
//!   are inclusive: a score equal to the threshold passes.
//!
//! * Gating never drops comparisons from the protocol — a suppressed
//!   comparison keeps its slot with the sentinel score [`GATED_SCORE`],
//!   which sits strictly below the cosine range. Denominators therefore
//!   stay fixed, and gated pipelines are directly comparable to ungated
//!   ones on the same protocol.

use std::collections::HashMap;

use crate::aggregation::{
    aggregate, aggregate_media_pooled, AggregateResult, Template, TemplateMember,
    WeightingStrategy,
};
use crate::cluster::UiModel;
use crate::decisions::DecisionConfig;
use crate::embedding::{mean_direction, Embedding, LabeledEmbedding};
use crate::ers::{compute_ers, enhance_embedding, ErsValue};
use crate::{Error, Result};

/// Similarity recorded for a comparison suppressed by the recognizability
/// gate. Strictly below -1, so no admissible threshold ever accepts it.
pub const GATED_SCORE: f64 = -2.0;

/// One comparison in a verification protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolPair {
    pub id_a: String,
    pub id_b: String,
    /// True when both sides belong to the same subject.
    pub genuine: bool,
}

/// A template's membership, by reference into a corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSpec {
    pub template_id: String,
    pub subject_id: String,
    pub item_ids: Vec<String>,
}

/// Which scoring pipeline turns protocol entries into similarities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pipeline {
    /// Raw single-embedding comparisons.
    Single,
    /// Single embeddings with the recognizability gate applied.
    SingleGated,
    /// Templates fused with a weighting strategy.
    Template {
        strategy: WeightingStrategy,
        media_pool: bool,
    },
    /// Fused templates, with the gate applied to template-level scores.
    TemplateGated {
        strategy: WeightingStrategy,
        media_pool: bool,
    },
    /// Members are pushed to maximum recognizability first, then averaged
    /// uniformly.
    EnhancedAverage,
}

impl Pipeline {
    fn gated(&self) -> bool {
        matches!(self, Pipeline::SingleGated | Pipeline::TemplateGated { .. })
    }

    /// Whether running this pipeline requires a UI model. Only the plain
    /// uniform-average template pipeline and raw single comparisons can do
    /// without one.
    fn requires_ui(&self) -> bool {
        match self {
            Pipeline::Single => false,
            Pipeline::SingleGated | Pipeline::TemplateGated { .. } | Pipeline::EnhancedAverage => {
                true
            }
            Pipeline::Template { strategy, .. } => strategy_needs_scores(*strategy),
        }
    }
}

fn strategy_needs_scores(strategy: WeightingStrategy) -> bool {
    !matches!(strategy, WeightingStrategy::TopFraction(p) if p >= 1.0)
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pipeline::Single => f.write_str("single"),
            Pipeline::SingleGated => f.write_str("single-gated"),
            Pipeline::Template {
                strategy,
                media_pool,
            } => {
                write!(f, "template({strategy})")?;
                if *media_pool {
                    f.write_str("+media-pool")?;
                }
                Ok(())
            }
            Pipeline::TemplateGated {
                strategy,
                media_pool,
            } => {
                write!(f, "template-gated({strategy})")?;
                if *media_pool {
                    f.write_str("+media-pool")?;
                }
                Ok(())
            }
            Pipeline::EnhancedAverage => f.write_str("enhanced-average"),
        }
    }
}

/// A verification operating point: the threshold realizing a FAR target and
/// the error rates measured at it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub far_target: f64,
    pub threshold: f64,
    /// Empirical FAR at `threshold`; the largest achievable value <= target.
    pub achieved_far: f64,
    /// Fraction of genuine comparisons scoring below `threshold`.
    pub frr: f64,
    /// Set when the target lies below 1/N: no nonzero empirical FAR can
    /// realize it, so the zero-accept threshold was used instead.
    pub unattainable: bool,
}

impl OperatingPoint {
    /// True accept rate, the complement of FRR.
    pub fn tar(&self) -> f64 {
        1.0 - self.frr
    }
}

/// An open-set identification operating point at a target false-positive
/// identification rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentificationPoint {
    pub fpir_target: f64,
    pub threshold: f64,
    pub achieved_fpir: f64,
    /// Fraction of mated probes not identified at `threshold`; `None` when
    /// the probe set had no mated probes to measure.
    pub fnir: Option<f64>,
    pub unattainable: bool,
}

/// Evaluation output: counts plus whichever metric families the run
/// produced (verification fills `operating_points`; search fills
/// `identification_points` and `rank_accuracy`).
#[derive(Clone, Debug)]
pub struct EvalReport {
    /// Human-readable pipeline description.
    pub pipeline: String,
    /// Genuine pairs (verification) or mated probes (search).
    pub positives: usize,
    /// Impostor pairs (verification) or non-mated probes (search).
    pub negatives: usize,
    pub operating_points: Vec<OperatingPoint>,
    pub identification_points: Vec<IdentificationPoint>,
    /// (k, fraction of mated probes whose correct identity ranks in the
    /// top k). Empty when there were no mated probes.
    pub rank_accuracy: Vec<(usize, f64)>,
}

// ---------------------------------------------------------------------------
// Threshold selection
// ---------------------------------------------------------------------------

/// Number of entries in a descending-sorted list that are >= t.
fn count_geq(sorted_desc: &[f64], t: f64) -> usize {
    sorted_desc.partition_point(|&s| s >= t)
}

/// Smallest candidate threshold that lets at most `floor(target * N)`
/// negatives pass. `candidates_asc` must contain at least one value above
/// every negative score.
fn pick_threshold(neg_sorted_desc: &[f64], candidates_asc: &[f64], target: f64) -> f64 {
    // The epsilon absorbs float dust in target * N for exactly-representable
    // targets (e.g. 0.25 * 12 must allow exactly 3).
    let budget = (target * neg_sorted_desc.len() as f64 + 1e-9).floor() as usize;
    let idx = candidates_asc.partition_point(|&c| count_geq(neg_sorted_desc, c) > budget);
    candidates_asc[idx]
}

fn validate_targets(targets: &[f64]) -> Result<()> {
    for &t in targets {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "rate target {t} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Sweep verification operating points over FAR targets.
///
/// For each target the threshold is selected from the observed scores as
/// described in the module docs, then FAR and FRR are measured at it with
/// inclusive comparison. Requires at least one score on each side.
pub fn roc_sweep(
    genuine: &[f64],
    impostor: &[f64],
    far_targets: &[f64],
) -> Result<Vec<OperatingPoint>> {
    if genuine.is_empty() {
        return Err(Error::Empty("genuine scores"));
    }
    if impostor.is_empty() {
        return Err(Error::Empty("impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    validate_targets(far_targets)?;

    let mut gen_desc = genuine.to_vec();
    let mut imp_desc = impostor.to_vec();
    gen_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    imp_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Candidates: every observed score, plus a value just above the highest
    // impostor so FAR = 0 is always reachable.
    let mut candidates: Vec<f64> = Vec::with_capacity(genuine.len() + impostor.len() + 1);
    candidates.extend_from_slice(genuine);
    candidates.extend_from_slice(impostor);
    candidates.push(imp_desc[0].next_up());
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let n_imp = imp_desc.len() as f64;
    let n_gen = gen_desc.len() as f64;
    Ok(far_targets
        .iter()
        .map(|&target| {
            let threshold = pick_threshold(&imp_desc, &candidates, target);
            let accepted_imp = count_geq(&imp_desc, threshold);
            let accepted_gen = count_geq(&gen_desc, threshold);
            OperatingPoint {
                far_target: target,
                threshold,
                achieved_far: accepted_imp as f64 / n_imp,
                frr: 1.0 - accepted_gen as f64 / n_gen,
                unattainable: target * n_imp < 1.0,
            }
        })
        .collect())
}

/// Relative FRR reduction going from pipeline `a` to pipeline `b` at one
/// FAR target: `(FRR_a - FRR_b) / FRR_a`.
///
/// Both reports must contain an operating point for exactly that target.
/// Fails when the baseline FRR is zero (the ratio is undefined).
pub fn error_reduction(a: &EvalReport, b: &EvalReport, far_target: f64) -> Result<f64> {
    let point = |report: &EvalReport| -> Result<OperatingPoint> {
        report
            .operating_points
            .iter()
            .find(|p| p.far_target == far_target)
            .copied()
            .ok_or(Error::MissingOperatingPoint(far_target))
    };
    let pa = point(a)?;
    let pb = point(b)?;
    if pa.frr == 0.0 {
        return Err(Error::ZeroBaselineFrr);
    }
    Ok((pa.frr - pb.frr) / pa.frr)
}

// ---------------------------------------------------------------------------
// Pipeline plumbing
// ---------------------------------------------------------------------------

fn index_items(items: &[LabeledEmbedding]) -> Result<HashMap<&str, &LabeledEmbedding>> {
    let mut by_id = HashMap::with_capacity(items.len());
    for item in items {
        if by_id.insert(item.item_id.as_str(), item).is_some() {
            return Err(Error::DuplicateId(item.item_id.clone()));
        }
    }
    Ok(by_id)
}

fn lookup<'a>(
    by_id: &HashMap<&str, &'a LabeledEmbedding>,
    id: &str,
) -> Result<&'a LabeledEmbedding> {
    by_id
        .get(id)
        .copied()
        .ok_or_else(|| Error::UnresolvableId(id.to_string()))
}

/// An entry a pipeline can compare: the representative embedding, the
/// subject it claims, and its recognizability when a UI model is available.
struct ResolvedEntry {
    subject: String,
    embedding: Embedding,
    ers: Option<ErsValue>,
}

/// Resolve every id a protocol references, according to the pipeline:
/// single pipelines treat ids as item ids, template pipelines as template
/// ids (fusing on the fly), enhanced-average as template ids with member
/// enhancement before a uniform average.
fn resolve_entries(
    ids: &[&str],
    items: &[LabeledEmbedding],
    templates: &[TemplateSpec],
    ui: Option<&UiModel>,
    pipeline: &Pipeline,
) -> Result<Vec<ResolvedEntry>> {
    if pipeline.requires_ui() && ui.is_none() {
        return Err(Error::InvalidParameter(format!(
            "pipeline {pipeline} requires a UI model"
        )));
    }
    let by_id = index_items(items)?;

    match pipeline {
        Pipeline::Single | Pipeline::SingleGated => ids
            .iter()
            .map(|id| {
                let item = lookup(&by_id, id)?;
                let ers = ui.map(|u| compute_ers(&item.embedding, u)).transpose()?;
                Ok(ResolvedEntry {
                    subject: item.subject_id.clone(),
                    embedding: item.embedding.clone(),
                    ers,
                })
            })
            .collect(),
        Pipeline::Template {
            strategy,
            media_pool,
        }
        | Pipeline::TemplateGated {
            strategy,
            media_pool,
        } => {
            let specs = index_templates(templates)?;
            ids.iter()
                .map(|id| {
                    let spec = *specs
                        .get(id)
                        .ok_or_else(|| Error::UnresolvableId(id.to_string()))?;
                    let fused = fuse_template(spec, &by_id, ui, *strategy, *media_pool)?;
                    Ok(ResolvedEntry {
                        subject: spec.subject_id.clone(),
                        embedding: fused.embedding,
                        ers: Some(fused.ers),
                    })
                })
                .collect()
        }
        Pipeline::EnhancedAverage => {
            let ui = ui.expect("checked above");
            let specs = index_templates(templates)?;
            ids.iter()
                .map(|id| {
                    let spec = *specs
                        .get(id)
                        .ok_or_else(|| Error::UnresolvableId(id.to_string()))?;
                    if spec.item_ids.is_empty() {
                        return Err(Error::Empty("template members"));
                    }
                    let enhanced: Vec<Embedding> = spec
                        .item_ids
                        .iter()
                        .map(|mid| {
                            let item = lookup(&by_id, mid)?;
                            enhance_embedding(&item.embedding, ui)
                        })
                        .collect::<Result<_>>()?;
                    let embedding = mean_direction(&enhanced)?;
                    let ers = compute_ers(&embedding, ui)?;
                    Ok(ResolvedEntry {
                        subject: spec.subject_id.clone(),
                        embedding,
                        ers: Some(ers),
                    })
                })
                .collect()
        }
    }
}

fn index_templates(templates: &[TemplateSpec]) -> Result<HashMap<&str, &TemplateSpec>> {
    let mut by_id = HashMap::with_capacity(templates.len());
    for spec in templates {
        if by_id.insert(spec.template_id.as_str(), spec).is_some() {
            return Err(Error::DuplicateId(spec.template_id.clone()));
        }
    }
    Ok(by_id)
}

fn fuse_template(
    spec: &TemplateSpec,
    by_id: &HashMap<&str, &LabeledEmbedding>,
    ui: Option<&UiModel>,
    strategy: WeightingStrategy,
    media_pool: bool,
) -> Result<AggregateResult> {
    let members: Vec<TemplateMember> = spec
        .item_ids
        .iter()
        .map(|id| {
            let item = lookup(by_id, id)?;
            // Without a UI model only uniform weighting is reachable
            // (checked in resolve_entries); the placeholder keeps member
            // weights equal and is never read as a real score.
            let ers = match ui {
                Some(u) => compute_ers(&item.embedding, u)?,
                None => ErsValue::from_raw(1.0),
            };
            Ok(TemplateMember {
                embedding: item.embedding.clone(),
                ers,
                media_id: item.media_id.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let template = Template {
        template_id: spec.template_id.clone(),
        subject_id: spec.subject_id.clone(),
        members,
    };
    if media_pool {
        aggregate_media_pooled(&template, strategy)
    } else {
        aggregate(&template, strategy)
    }
}

// ---------------------------------------------------------------------------
// Verification evaluation
// ---------------------------------------------------------------------------

/// Score a pair protocol through a pipeline and sweep FAR targets.
///
/// Protocol ids refer to item ids for single pipelines and template ids
/// otherwise. Gated pipelines replace suppressed comparisons with
/// [`GATED_SCORE`] so genuine/impostor counts match the protocol exactly.
#[allow(clippy::too_many_arguments)]
pub fn eval_verification(
    items: &[LabeledEmbedding],
    templates: &[TemplateSpec],
    ui: Option<&UiModel>,
    pairs: &[ProtocolPair],
    pipeline: &Pipeline,
    cfg: &DecisionConfig,
    far_targets: &[f64],
) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair protocol"));
    }

    // Resolve each distinct referenced id once.
    let mut distinct: Vec<&str> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for pair in pairs {
        for id in [pair.id_a.as_str(), pair.id_b.as_str()] {
            if !seen.contains_key(id) {
                seen.insert(id, distinct.len());
                distinct.push(id);
            }
        }
    }
    let entries = resolve_entries(&distinct, items, templates, ui, pipeline)?;

    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for pair in pairs {
        let a = &entries[seen[pair.id_a.as_str()]];
        let b = &entries[seen[pair.id_b.as_str()]];
        let mut score = a.embedding.cosine_similarity(&b.embedding)?;
        if pipeline.gated() {
            let ea = a.ers.expect("gated pipelines always resolve scores");
            let eb = b.ers.expect("gated pipelines always resolve scores");
            if ea.capped() < cfg.gamma() || eb.capped() < cfg.gamma() {
                score = GATED_SCORE;
            }
        }
        if pair.genuine {
            genuine.push(score);
        } else {
            impostor.push(score);
        }
    }

    let operating_points = roc_sweep(&genuine, &impostor, far_targets)?;
    Ok(EvalReport {
        pipeline: pipeline.to_string(),
        positives: genuine.len(),
        negatives: impostor.len(),
        operating_points,
        identification_points: Vec::new(),
        rank_accuracy: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Open-set identification evaluation
// ---------------------------------------------------------------------------

/// Evaluate open-set identification: FNIR at target FPIRs plus rank-k
/// accuracy over mated probes.
///
/// Gallery and probe ids follow the pipeline's id space (items or
/// templates). Every gallery subject must be unique. Thresholds are
/// calibrated on the non-mated probes' best scores (at least one non-mated
/// probe is required); a gated probe keeps its protocol slot with
/// [`GATED_SCORE`] as its best score and can never be identified, and a
/// mated probe whose argmax lands on the wrong identity counts as
/// unidentifiable at every threshold.
#[allow(clippy::too_many_arguments)]
pub fn eval_search(
    items: &[LabeledEmbedding],
    templates: &[TemplateSpec],
    ui: Option<&UiModel>,
    gallery_ids: &[String],
    probe_ids: &[String],
    pipeline: &Pipeline,
    cfg: &DecisionConfig,
    fpir_targets: &[f64],
    ranks: &[usize],
) -> Result<EvalReport> {
    if gallery_ids.is_empty() {
        return Err(Error::Empty("gallery"));
    }
    if probe_ids.is_empty() {
        return Err(Error::Empty("probe set"));
    }
    validate_targets(fpir_targets)?;
    if ranks.contains(&0) {
        return Err(Error::InvalidParameter("rank k must be >= 1".into()));
    }

    let gallery_refs: Vec<&str> = gallery_ids.iter().map(String::as_str).collect();
    let probe_refs: Vec<&str> = probe_ids.iter().map(String::as_str).collect();
    let gallery = resolve_entries(&gallery_refs, items, templates, ui, pipeline)?;
    let probes = resolve_entries(&probe_refs, items, templates, ui, pipeline)?;

    let mut subjects: HashMap<&str, usize> = HashMap::with_capacity(gallery.len());
    for (idx, entry) in gallery.iter().enumerate() {
        if entry.subject.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "gallery entry `{}` has no subject label",
                gallery_ids[idx]
            )));
        }
        if subjects.insert(entry.subject.as_str(), idx).is_some() {
            return Err(Error::InvalidParameter(format!(
                "subject `{}` enrolled more than once in the gallery",
                entry.subject
            )));
        }
    }

    // Gallery-side gating: drop unrecognizable enrollments from the
    // candidate set once, before any probe is scored.
    let eligible: Vec<usize> = if pipeline.gated() && cfg.gate_gallery() {
        (0..gallery.len())
            .filter(|&i| {
                gallery[i]
                    .ers
                    .expect("gated pipelines always resolve scores")
                    .capped()
                    >= cfg.gamma()
            })
            .collect()
    } else {
        (0..gallery.len()).collect()
    };

    let mut non_mated_best: Vec<f64> = Vec::new();
    // Effective score per mated probe: its best similarity when the argmax
    // identity is correct, otherwise -inf (never identifiable).
    let mut mated_effective: Vec<f64> = Vec::new();
    let mut rank_hits = vec![0usize; ranks.len()];
    let mut mated_count = 0usize;

    for (p_idx, probe) in probes.iter().enumerate() {
        if probe.subject.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "probe `{}` has no subject label",
                probe_ids[p_idx]
            )));
        }
        let mated = subjects.get(probe.subject.as_str()).copied();
        if mated.is_some() {
            mated_count += 1;
        }

        let query_gated = pipeline.gated()
            && probe
                .ers
                .expect("gated pipelines always resolve scores")
                .capped()
                < cfg.gamma();

        if query_gated || eligible.is_empty() {
            // No usable comparison: a non-mated probe can't false-alarm, a
            // mated probe can't be found at any rank.
            if mated.is_some() {
                mated_effective.push(f64::NEG_INFINITY);
            } else {
                non_mated_best.push(GATED_SCORE);
            }
            continue;
        }

        let mut best = f64::NEG_INFINITY;
        let mut best_idx = usize::MAX;
        let mut sims: Vec<(usize, f64)> = Vec::with_capacity(eligible.len());
        for &g_idx in &eligible {
            let s = probe.embedding.cosine_similarity(&gallery[g_idx].embedding)?;
            sims.push((g_idx, s));
            // Strict > keeps the earliest gallery index on ties, matching
            // the decision functions' argmax convention.
            if s > best {
                best = s;
                best_idx = g_idx;
            }
        }

        match mated {
            None => non_mated_best.push(best),
            Some(m_idx) => {
                let correct_sim = sims.iter().find(|(g, _)| *g == m_idx).map(|&(_, s)| s);
                match correct_sim {
                    None => {
                        // The correct identity was gated out of the gallery:
                        // unidentifiable at any threshold or rank.
                        mated_effective.push(f64::NEG_INFINITY);
                    }
                    Some(cs) => {
                        // An entry outranks the correct one when it scores
                        // strictly higher, or ties from an earlier index.
                        let better = sims
                            .iter()
                            .filter(|&&(g, s)| {
                                g != m_idx && (s > cs || (s == cs && g < m_idx))
                            })
                            .count();
                        for (slot, &k) in ranks.iter().enumerate() {
                            if better < k {
                                rank_hits[slot] += 1;
                            }
                        }
                        mated_effective.push(if best_idx == m_idx {
                            best
                        } else {
                            f64::NEG_INFINITY
                        });
                    }
                }
            }
        }
    }

    if non_mated_best.is_empty() {
        return Err(Error::NoNonMatedProbes);
    }

    let mut nm_desc = non_mated_best.clone();
    nm_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut candidates = non_mated_best.clone();
    candidates.push(nm_desc[0].next_up());
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let n_nm = nm_desc.len() as f64;
    let identification_points = fpir_targets
        .iter()
        .map(|&target| {
            let threshold = pick_threshold(&nm_desc, &candidates, target);
            let achieved_fpir = count_geq(&nm_desc, threshold) as f64 / n_nm;
            let fnir = if mated_count == 0 {
                None
            } else {
                let found = mated_effective.iter().filter(|&&s| s >= threshold).count();
                Some(1.0 - found as f64 / mated_count as f64)
            };
            IdentificationPoint {
                fpir_target: target,
                threshold,
                achieved_fpir,
                fnir,
                unattainable: target * n_nm < 1.0,
            }
        })
        .collect();

    let rank_accuracy = if mated_count == 0 {
        Vec::new()
    } else {
        ranks
            .iter()
            .zip(&rank_hits)
            .map(|(&k, &hits)| (k, hits as f64 / mated_count as f64))
            .collect()
    };

    Ok(EvalReport {
        pipeline: pipeline.to_string(),
        positives: mated_count,
        negatives: non_mated_best.len(),
        operating_points: Vec::new(),
        identification_points,
        rank_accuracy,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roc_sweep_hand_computed() {
        let genuine = [0.9, 0.8, 0.4];
        let impostor = [0.7, 0.3, 0.1, 0.05];
        let points = roc_sweep(&genuine, &impostor, &[0.25, 0.5, 0.0, 0.2]).unwrap();

        // Budget 1 of 4: the smallest threshold letting one impostor pass
        // is the genuine score 0.4 (0.3 would let two through).
        assert_eq!(points[0].threshold, 0.4);
        assert_eq!(points[0].achieved_far, 0.25);
        assert_eq!(points[0].frr, 0.0);
        assert!(!points[0].unattainable);

        // Budget 2: threshold drops to 0.3.
        assert_eq!(points[1].threshold, 0.3);
        assert_eq!(points[1].achieved_far, 0.5);
        assert_eq!(points[1].frr, 0.0);

        // Budget 0: must clear the top impostor 0.7. The sentinel candidate
        // one ulp above it is the tightest such threshold; the genuine
        // scores 0.8 and 0.9 still clear it, 0.4 is lost.
        assert_eq!(points[2].threshold, 0.7f64.next_up());
        assert_eq!(points[2].achieved_far, 0.0);
        assert!((points[2].frr - 1.0 / 3.0).abs() < 1e-12);
        assert!(points[2].unattainable); // 0 < 1/4

        // Target 0.2 also gives budget 0 and is below 1/4: flagged.
        assert_eq!(points[3].threshold, 0.7f64.next_up());
        assert!(points[3].unattainable);
        assert!((points[3].tar() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn roc_sweep_threshold_comparison_is_inclusive() {
        // A genuine score sitting exactly on the threshold is accepted.
        let points = roc_sweep(&[0.5], &[0.5, 0.2], &[0.5]).unwrap();
        assert_eq!(points[0].threshold, 0.5);
        assert_eq!(points[0].achieved_far, 0.5);
        assert_eq!(points[0].frr, 0.0);
    }

    #[test]
    fn roc_sweep_validates_input() {
        assert!(matches!(
            roc_sweep(&[], &[0.1], &[0.5]),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            roc_sweep(&[0.1], &[], &[0.5]),
            Err(Error::Empty(_))
        ));
        assert!(roc_sweep(&[0.1], &[0.1], &[1.5]).is_err());
        assert!(roc_sweep(&[0.1], &[0.1], &[-0.1]).is_err());
        assert!(roc_sweep(&[f64::NAN], &[0.1], &[0.5]).is_err());
    }

    #[test]
    fn error_reduction_matches_hand_value() {
        let report = |frr: f64| EvalReport {
            pipeline: "test".into(),
            positives: 1,
            negatives: 1,
            operating_points: vec![OperatingPoint {
                far_target: 1e-3,
                threshold: 0.5,
                achieved_far: 1e-3,
                frr,
                unattainable: false,
            }],
            identification_points: Vec::new(),
            rank_accuracy: Vec::new(),
        };
        let r = error_reduction(&report(0.5), &report(0.4), 1e-3).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
        assert!(matches!(
            error_reduction(&report(0.0), &report(0.4), 1e-3),
            Err(Error::ZeroBaselineFrr)
        ));
        assert!(matches!(
            error_reduction(&report(0.5), &report(0.4), 0.5),
            Err(Error::MissingOperatingPoint(_))
        ));
    }

    // -- pipeline-level tests ------------------------------------------------

    fn unit(values: &[f64]) -> Embedding {
        Embedding::new(values.to_vec()).unwrap()
    }

    fn item(id: &str, subject: &str, values: &[f64]) -> LabeledEmbedding {
        LabeledEmbedding {
            item_id: id.into(),
            subject_id: subject.into(),
            media_id: None,
            embedding: unit(values),
        }
    }

    fn ui_at(values: &[f64]) -> UiModel {
        UiModel {
            centroid: unit(values),
            source_cluster_size: 1,
            params: crate::cluster::ClusterParams::default(),
            source_tag: "test".into(),
        }
    }

    /// Corpus: subjects x/y on distinct axes plus one junk item at the UI
    /// centroid claiming subject x.
    fn small_corpus() -> (Vec<LabeledEmbedding>, UiModel) {
        let corpus = vec![
            item("x1", "x", &[0.0, 1.0, 0.0, 0.0]),
            item("x2", "x", &[0.02, 0.9998, 0.0, 0.0]),
            item("y1", "y", &[0.0, 0.0, 1.0, 0.0]),
            item("y2", "y", &[0.02, 0.0, 0.9998, 0.0]),
            // Unrecognizable: sits on the UI centroid, subject x.
            item("junk", "x", &[1.0, 0.0, 0.0, 0.0]),
        ];
        (corpus, ui_at(&[1.0, 0.0, 0.0, 0.0]))
    }

    #[test]
    fn single_gated_suppresses_junk_pairs_without_changing_counts() {
        let (corpus, ui) = small_corpus();
        let pairs = vec![
            ProtocolPair {
                id_a: "x1".into(),
                id_b: "x2".into(),
                genuine: true,
            },
            ProtocolPair {
                id_a: "x1".into(),
                id_b: "junk".into(),
                genuine: true,
            },
            ProtocolPair {
                id_a: "x1".into(),
                id_b: "y1".into(),
                genuine: false,
            },
            ProtocolPair {
                id_a: "junk".into(),
                id_b: "y2".into(),
                genuine: false,
            },
        ];
        let cfg = DecisionConfig::new(0.5).unwrap();
        let targets = [1.0];

        let plain = eval_verification(
            &corpus,
            &[],
            Some(&ui),
            &pairs,
            &Pipeline::Single,
            &cfg,
            &targets,
        )
        .unwrap();
        let gated = eval_verification(
            &corpus,
            &[],
            Some(&ui),
            &pairs,
            &Pipeline::SingleGated,
            &cfg,
            &targets,
        )
        .unwrap();

        // Same protocol, same denominators.
        assert_eq!(plain.positives, 2);
        assert_eq!(plain.negatives, 2);
        assert_eq!(gated.positives, 2);
        assert_eq!(gated.negatives, 2);

        // At FAR target 1.0 everything real is accepted; the gated run
        // rejects the junk-involving genuine pair, so its FRR is higher,
        // which is the expected cost on genuine pairs.
        assert!(gated.operating_points[0].frr >= plain.operating_points[0].frr);
    }

    #[test]
    fn single_pipeline_without_ui_is_fine_but_gated_requires_it() {
        let (corpus, _) = small_corpus();
        let pairs = vec![ProtocolPair {
            id_a: "x1".into(),
            id_b: "y1".into(),
            genuine: false,
        }, ProtocolPair {
            id_a: "x1".into(),
            id_b: "x2".into(),
            genuine: true,
        }];
        let cfg = DecisionConfig::new(0.5).unwrap();
        assert!(eval_verification(
            &corpus,
            &[],
            None,
            &pairs,
            &Pipeline::Single,
            &cfg,
            &[0.5],
        )
        .is_ok());
        assert!(matches!(
            eval_verification(
                &corpus,
                &[],
                None,
                &pairs,
                &Pipeline::SingleGated,
                &cfg,
                &[0.5],
            ),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unresolvable_protocol_id_names_the_id() {
        let (corpus, ui) = small_corpus();
        let pairs = vec![ProtocolPair {
            id_a: "x1".into(),
            id_b: "ghost".into(),
            genuine: true,
        }];
        let err = eval_verification(
            &corpus,
            &[],
            Some(&ui),
            &pairs,
            &Pipeline::Single,
            &DecisionConfig::new(0.5).unwrap(),
            &[0.5],
        )
        .unwrap_err();
        match err {
            Error::UnresolvableId(id) => assert_eq!(id, "ghost"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn template_pipeline_fuses_members_before_scoring() {
        let (corpus, ui) = small_corpus();
        let templates = vec![
            TemplateSpec {
                template_id: "tx".into(),
                subject_id: "x".into(),
                item_ids: vec!["x1".into(), "x2".into(), "junk".into()],
            },
            TemplateSpec {
                template_id: "ty".into(),
                subject_id: "y".into(),
                item_ids: vec!["y1".into(), "y2".into()],
            },
        ];
        let pairs = vec![
            ProtocolPair {
                id_a: "tx".into(),
                id_b: "ty".into(),
                genuine: false,
            },
            ProtocolPair {
                id_a: "tx".into(),
                id_b: "tx".into(),
                genuine: true,
            },
        ];
        let cfg = DecisionConfig::new(0.5).unwrap();
        let report = eval_verification(
            &corpus,
            &templates,
            Some(&ui),
            &pairs,
            &Pipeline::Template {
                strategy: WeightingStrategy::Square,
                media_pool: false,
            },
            &cfg,
            &[1.0],
        )
        .unwrap();
        assert_eq!(report.positives, 1);
        assert_eq!(report.negatives, 1);
        // Self-pair of a fused template scores exactly 1.
        assert_eq!(report.operating_points[0].frr, 0.0);
    }

    #[test]
    fn search_hand_computed() {
        let (corpus, ui) = small_corpus();
        let gallery: Vec<String> = vec!["x1".into(), "y1".into()];
        // Probes: x2 (mated, correct argmax), junk (mated subject x but
        // unrecognizable -> gated), y2 (mated to y), plus one non-mated
        // probe from a stranger subject.
        let mut items = corpus.clone();
        items.push(item("z1", "z", &[0.0, 0.6, 0.8, 0.0]));
        let probes: Vec<String> = vec!["x2".into(), "junk".into(), "y2".into(), "z1".into()];
        let cfg = DecisionConfig::new(0.5).unwrap();

        let report = eval_search(
            &items,
            &[],
            Some(&ui),
            &gallery,
            &probes,
            &Pipeline::SingleGated,
            &cfg,
            &[1.0, 0.0],
            &[1, 2],
        )
        .unwrap();

        assert_eq!(report.positives, 3); // x2, junk, y2 are mated
        assert_eq!(report.negatives, 1); // z1

        // z1's best score is cos(z1, y1) = 0.8. At FPIR target 1.0 the
        // threshold drops to the smallest candidate (0.8), so z1 false
        // alarms; x2 and y2 are found (their argmaxes are correct and
        // score ~0.9998), junk is gated and never found: FNIR = 1/3.
        let p = &report.identification_points[0];
        assert_eq!(p.threshold, 0.8);
        assert_eq!(p.achieved_fpir, 1.0);
        assert!((p.fnir.unwrap() - 1.0 / 3.0).abs() < 1e-12);

        // At FPIR target 0 the threshold moves just above 0.8; x2 and y2
        // still clear it. Flagged unattainable with one non-mated probe.
        let p = &report.identification_points[1];
        assert_eq!(p.achieved_fpir, 0.0);
        assert!((p.fnir.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(p.unattainable);

        // Rank accuracy ignores thresholds: x2 and y2 rank first, junk is
        // gated out entirely -> 2/3 at both k=1 and k=2.
        assert_eq!(report.rank_accuracy, vec![(1, 2.0 / 3.0), (2, 2.0 / 3.0)]);
    }

    #[test]
    fn search_requires_non_mated_probes() {
        let (corpus, ui) = small_corpus();
        let gallery: Vec<String> = vec!["x1".into()];
        let probes: Vec<String> = vec!["x2".into()];
        let r = eval_search(
            &corpus,
            &[],
            Some(&ui),
            &gallery,
            &probes,
            &Pipeline::Single,
            &DecisionConfig::new(0.5).unwrap(),
            &[0.5],
            &[1],
        );
        assert!(matches!(r, Err(Error::NoNonMatedProbes)));
    }

    #[test]
    fn search_without_mated_probes_reports_fnir_as_undefined() {
        let (corpus, ui) = small_corpus();
        let mut items = corpus.clone();
        items.push(item("z1", "z", &[0.0, 0.6, 0.8, 0.0]));
        let gallery: Vec<String> = vec!["x1".into()];
        let probes: Vec<String> = vec!["z1".into()];
        let report = eval_search(
            &items,
            &[],
            Some(&ui),
            &gallery,
            &probes,
            &Pipeline::Single,
            &DecisionConfig::new(0.5).unwrap(),
            &[0.5],
            &[1],
        )
        .unwrap();
        assert_eq!(report.positives, 0);
        assert_eq!(report.identification_points[0].fnir, None);
        assert!(report.rank_accuracy.is_empty());
    }

    #[test]
    fn duplicate_gallery_subject_is_rejected() {
        let (corpus, ui) = small_corpus();
        let gallery: Vec<String> = vec!["x1".into(), "x2".into()];
        let probes: Vec<String> = vec!["y1".into()];
        let r = eval_search(
            &corpus,
            &[],
            Some(&ui),
            &gallery,
            &probes,
            &Pipeline::Single,
            &DecisionConfig::new(0.5).unwrap(),
            &[0.5],
            &[1],
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    proptest! {
        // Sweeping a finer FAR budget can only move the threshold down,
        // so achieved FAR stays within target and FRR is monotone in the
        // target.
        #[test]
        fn roc_sweep_is_monotone_and_within_target(
            genuine in proptest::collection::vec(-1.0f64..1.0, 1..40),
            impostor in proptest::collection::vec(-1.0f64..1.0, 1..40),
            mut targets in proptest::collection::vec(0.0f64..=1.0, 1..8),
        ) {
            targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let points = roc_sweep(&genuine, &impostor, &targets).unwrap();
            for p in &points {
                prop_assert!(p.achieved_far <= p.far_target + 1e-12);
            }
            for w in points.windows(2) {
                prop_assert!(w[1].frr <= w[0].frr + 1e-12);
                prop_assert!(w[1].threshold <= w[0].threshold);
            }
        }
    }
}
