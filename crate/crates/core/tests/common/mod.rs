//! Naive reference implementations shared by the integration tests.
//!
//! Everything here trades speed for obviousness: full rescans, no caching,
//! no incremental updates. The optimized library code is checked against
//! these for exact agreement, so keep them simple enough to audit by eye
//! and resist the urge to make them fast.

use erskit::cluster::{ClusterParams, Linkage};
use erskit::decisions::DecisionConfig;
use erskit::embedding::{Embedding, LabeledEmbedding};
use erskit::ers::compute_ers;
use erskit::cluster::UiModel;
use erskit::metrics::GATED_SCORE;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Random fixtures
// ---------------------------------------------------------------------------

/// A random labeled corpus of unit vectors; ids are shuffled-order strings
/// so input order never coincides with id order.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<LabeledEmbedding> {
    let mut items: Vec<LabeledEmbedding> = (0..n)
        .map(|i| {
            let values: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            LabeledEmbedding {
                item_id: format!("p{i:04}"),
                subject_id: String::new(),
                media_id: None,
                embedding: Embedding::new(values).expect("random vector is non-degenerate"),
            }
        })
        .collect();
    // Shuffle presentation order (Fisher-Yates) without extra dev-deps.
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
    items
}

// ---------------------------------------------------------------------------
// Clustering oracle
// ---------------------------------------------------------------------------

fn cluster_distance(linkage: Linkage, a: &[usize], b: &[usize], dist: &[Vec<f64>]) -> f64 {
    match linkage {
        Linkage::Single => {
            let mut best = f64::INFINITY;
            for &i in a {
                for &j in b {
                    best = best.min(dist[i][j]);
                }
            }
            best
        }
        Linkage::Complete => {
            let mut worst = f64::NEG_INFINITY;
            for &i in a {
                for &j in b {
                    worst = worst.max(dist[i][j]);
                }
            }
            worst
        }
        Linkage::Average => {
            let mut sum = 0.0;
            for &i in a {
                for &j in b {
                    sum += dist[i][j];
                }
            }
            sum / (a.len() * b.len()) as f64
        }
    }
}

/// Agglomerative clustering by brute force: every step rescans every active
/// pair and recomputes its linkage distance from the pointwise matrix.
/// Ties break on (distance, smaller min-member rank, larger min-member
/// rank), ranks being positions in the id-sorted order. Returns clusters as
/// id-sorted member lists, largest first, ties on the smallest member id.
pub fn naive_hac(corpus: &[LabeledEmbedding], params: ClusterParams) -> Vec<Vec<String>> {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| corpus[a].item_id.cmp(&corpus[b].item_id));
    let ids: Vec<&str> = order.iter().map(|&i| corpus[i].item_id.as_str()).collect();
    let points: Vec<&Embedding> = order.iter().map(|&i| &corpus[i].embedding).collect();

    let n = points.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i]
                .chordal_distance(points[j])
                .expect("corpus dimensions agree");
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    // Each cluster keeps its member ranks sorted, so members[0] is the rank
    // that names the cluster for tie-breaking.
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best_key: Option<(f64, usize, usize)> = None;
        let mut best_pair = (0usize, 0usize);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = cluster_distance(params.linkage, &clusters[a], &clusters[b], &dist);
                let (ra, rb) = (clusters[a][0], clusters[b][0]);
                let key = (d, ra.min(rb), ra.max(rb));
                let better = match best_key {
                    None => true,
                    Some((bd, bl, bh)) => {
                        key.0 < bd || (key.0 == bd && (key.1, key.2) < (bl, bh))
                    }
                };
                if better {
                    best_key = Some(key);
                    best_pair = (a, b);
                }
            }
        }
        let (d, _, _) = best_key.expect("at least one pair");
        if d > params.threshold {
            break;
        }
        let (a, b) = best_pair;
        let absorbed = clusters.remove(b);
        clusters[a].extend(absorbed);
        clusters[a].sort_unstable();
    }

    let mut out: Vec<Vec<String>> = clusters
        .iter()
        .map(|c| c.iter().map(|&r| ids[r].to_string()).collect())
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

/// Canonicalizes library output for comparison against [`naive_hac`]:
/// members sorted within each cluster, clusters by (size desc, min id asc).
pub fn canonical_clusters(clusters: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = clusters
        .iter()
        .map(|c| {
            let mut ids = c.clone();
            ids.sort();
            ids
        })
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

// ---------------------------------------------------------------------------
// Threshold-selection oracle
// ---------------------------------------------------------------------------

/// One verification operating point computed the slow way: sort nothing,
/// scan every candidate, count every score.
pub struct OraclePoint {
    pub threshold: f64,
    pub achieved_far: f64,
    pub frr: f64,
    pub unattainable: bool,
}

pub fn roc_oracle(genuine: &[f64], impostor: &[f64], target: f64) -> OraclePoint {
    let budget = (target * impostor.len() as f64 + 1e-9).floor() as usize;

    let max_neg = impostor.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<f64> = genuine.iter().chain(impostor.iter()).cloned().collect();
    candidates.push(max_neg.next_up());
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let count_geq = |t: f64| impostor.iter().filter(|&&s| s >= t).count();
    let threshold = candidates
        .iter()
        .cloned()
        .find(|&c| count_geq(c) <= budget)
        .expect("the sentinel candidate always clears the budget");

    let accepted = genuine.iter().filter(|&&s| s >= threshold).count();
    OraclePoint {
        threshold,
        achieved_far: count_geq(threshold) as f64 / impostor.len() as f64,
        frr: 1.0 - accepted as f64 / genuine.len() as f64,
        unattainable: target * (impostor.len() as f64) < 1.0,
    }
}

// ---------------------------------------------------------------------------
// Open-set search oracle
// ---------------------------------------------------------------------------

pub struct SearchOracleReport {
    /// (fpir_target, threshold, achieved_fpir, fnir, unattainable)
    pub points: Vec<(f64, f64, f64, Option<f64>, bool)>,
    pub rank_accuracy: Vec<(usize, f64)>,
}

/// Open-set identification by brute force for the plain and gated
/// single-embedding pipelines. `gated` carries (ui, gamma, gate_gallery).
#[allow(clippy::type_complexity)]
pub fn search_oracle(
    items: &[LabeledEmbedding],
    gallery_ids: &[String],
    probe_ids: &[String],
    gated: Option<(&UiModel, &DecisionConfig)>,
    fpir_targets: &[f64],
    ranks: &[usize],
) -> SearchOracleReport {
    let find = |id: &str| -> &LabeledEmbedding {
        items
            .iter()
            .find(|it| it.item_id == id)
            .expect("protocol ids resolve")
    };
    let gallery: Vec<&LabeledEmbedding> = gallery_ids.iter().map(|id| find(id)).collect();
    let probes: Vec<&LabeledEmbedding> = probe_ids.iter().map(|id| find(id)).collect();

    let passes_gate = |e: &LabeledEmbedding| -> bool {
        match gated {
            None => true,
            Some((ui, cfg)) => {
                compute_ers(&e.embedding, ui).expect("dimensions agree").capped() >= cfg.gamma()
            }
        }
    };
    let eligible: Vec<usize> = match gated {
        Some((_, cfg)) if cfg.gate_gallery() => (0..gallery.len())
            .filter(|&i| passes_gate(gallery[i]))
            .collect(),
        _ => (0..gallery.len()).collect(),
    };

    let mut non_mated_best: Vec<f64> = Vec::new();
    let mut mated_effective: Vec<f64> = Vec::new();
    let mut rank_hits = vec![0usize; ranks.len()];
    let mut mated_count = 0usize;

    for probe in &probes {
        let mated = gallery
            .iter()
            .position(|g| g.subject_id == probe.subject_id);
        if mated.is_some() {
            mated_count += 1;
        }

        let probe_gated = gated.is_some() && !passes_gate(probe);
        if probe_gated || eligible.is_empty() {
            match mated {
                Some(_) => mated_effective.push(f64::NEG_INFINITY),
                None => non_mated_best.push(GATED_SCORE),
            }
            continue;
        }

        let sims: Vec<(usize, f64)> = eligible
            .iter()
            .map(|&g| {
                (
                    g,
                    probe
                        .embedding
                        .cosine_similarity(&gallery[g].embedding)
                        .expect("dimensions agree"),
                )
            })
            .collect();
        let (best_idx, best) = sims
            .iter()
            .fold((usize::MAX, f64::NEG_INFINITY), |(bi, bs), &(g, s)| {
                if s > bs {
                    (g, s)
                } else {
                    (bi, bs)
                }
            });

        match mated {
            None => non_mated_best.push(best),
            Some(m_idx) => match sims.iter().find(|&&(g, _)| g == m_idx) {
                None => mated_effective.push(f64::NEG_INFINITY),
                Some(&(_, cs)) => {
                    let better = sims
                        .iter()
                        .filter(|&&(g, s)| g != m_idx && (s > cs || (s == cs && g < m_idx)))
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
            },
        }
    }

    assert!(
        !non_mated_best.is_empty(),
        "oracle callers must supply non-mated probes"
    );
    let n_nm = non_mated_best.len() as f64;
    let max_nm = non_mated_best
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut candidates = non_mated_best.clone();
    candidates.push(max_nm.next_up());
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let count_geq = |t: f64| non_mated_best.iter().filter(|&&s| s >= t).count();
    let points = fpir_targets
        .iter()
        .map(|&target| {
            let budget = (target * n_nm + 1e-9).floor() as usize;
            let threshold = candidates
                .iter()
                .cloned()
                .find(|&c| count_geq(c) <= budget)
                .expect("sentinel clears the budget");
            let fnir = if mated_count == 0 {
                None
            } else {
                let found = mated_effective.iter().filter(|&&s| s >= threshold).count();
                Some(1.0 - found as f64 / mated_count as f64)
            };
            (
                target,
                threshold,
                count_geq(threshold) as f64 / n_nm,
                fnir,
                target * n_nm < 1.0,
            )
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

    SearchOracleReport {
        points,
        rank_accuracy,
    }
}

// ---------------------------------------------------------------------------

/// Seeded generator for test instances.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
