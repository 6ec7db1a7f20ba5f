//! Agglomerative clustering and discovery of the unrecognizable-identity
//! centroid.
//!
//! Embeddings of low-quality inputs collapse toward a common region of the
//! hypersphere regardless of their true identity, while recognizable inputs
//! stay near identity-specific directions. Running hierarchical agglomerative
//! clustering (HAC) over chordal distance therefore produces one outsized
//! heterogeneous cluster — the unrecognizable-identity (UI) cluster — plus
//! many small per-identity clusters. The UI centroid is the reference point
//! recognizability scores are measured against.
//!
//! The merge loop follows the classic stored-matrix scheme with
//! Lance-Williams distance updates and a per-row nearest-neighbor cache that
//! is validated lazily (cached entries are exact values of cells that may
//! have since been overwritten, so a cache hit is confirmed against the
//! matrix before use). This keeps the loop close to O(n^2) in practice while
//! staying byte-deterministic.
//!
//! Determinism contract: items are ranked by `item_id` before anything else
//! happens, candidate merges are ordered by (distance, smaller cluster
//! representative, larger representative) where a cluster's representative is
//! the rank of its smallest item id, and every reduction runs in a fixed
//! order. Permuting the input corpus cannot change the output.

use rayon::prelude::*;

use crate::embedding::{mean_direction, Embedding, LabeledEmbedding};
use crate::{Error, Result};

/// Default merge threshold on chordal distance. The valid range of the
/// metric is [0, 2]; merging up to half of it absorbs the diffuse UI blob
/// without fusing distinct identities in realistic embedding spaces.
pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// How inter-cluster distance is derived from member pairwise distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linkage {
    /// Mean pairwise distance between members (UPGMA). The default: robust
    /// to the UI cluster's internal spread.
    Average,
    /// Maximum pairwise distance.
    Complete,
    /// Minimum pairwise distance. Prone to chaining; offered for comparison.
    Single,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::InvalidParameter(format!(
                "unknown linkage `{other}` (expected average|complete|single)"
            ))),
        }
    }
}

/// Parameters of a clustering run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterParams {
    pub linkage: Linkage,
    /// Stop merging once the closest pair of clusters is farther apart than
    /// this chordal distance. Must lie in (0, 2].
    pub threshold: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            linkage: Linkage::Average,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// A finished clustering: every corpus item appears in exactly one cluster.
#[derive(Clone, Debug)]
pub struct ClusterResult {
    /// Clusters ordered by (size descending, smallest member id ascending);
    /// within each cluster, member item ids are sorted ascending.
    pub clusters: Vec<Vec<String>>,
    /// Cluster sizes in the same order as `clusters` (non-increasing).
    pub sizes_descending: Vec<usize>,
    /// Parameters the run used, echoed for provenance.
    pub params: ClusterParams,
}

/// The unrecognizable-identity model: the centroid that recognizability is
/// measured against, plus enough provenance to audit where it came from.
#[derive(Clone, Debug)]
pub struct UiModel {
    /// Mean direction of the UI cluster's members.
    pub centroid: Embedding,
    /// Number of embeddings that formed the centroid.
    pub source_cluster_size: usize,
    /// Clustering parameters that produced the source cluster.
    pub params: ClusterParams,
    /// Free-form provenance string (input file, corpus description, ...).
    pub source_tag: String,
}

// ---------------------------------------------------------------------------
// HAC internals
// ---------------------------------------------------------------------------

/// Index into the condensed upper-triangle distance matrix for ranks i < j.
#[inline]
fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

#[inline]
fn lance_williams(linkage: Linkage, d_ik: f64, d_jk: f64, si: usize, sj: usize) -> f64 {
    match linkage {
        Linkage::Single => d_ik.min(d_jk),
        Linkage::Complete => d_ik.max(d_jk),
        Linkage::Average => {
            let (si, sj) = (si as f64, sj as f64);
            (si * d_ik + sj * d_jk) / (si + sj)
        }
    }
}

struct MergeState {
    n: usize,
    dist: Vec<f64>,
    active: Vec<bool>,
    /// Member ranks per slot; a merged cluster lives at the smaller slot, so
    /// a slot index is always the smallest member rank of its cluster.
    members: Vec<Vec<usize>>,
    /// Cached per-slot nearest neighbor among slots to the right. Entries
    /// are exact matrix values from when they were computed; a later merge
    /// can invalidate them, which `closest_pair` detects by re-reading the
    /// matrix cell.
    nn_dist: Vec<f64>,
    nn_tgt: Vec<usize>,
}

impl MergeState {
    fn new(n: usize, dist: Vec<f64>) -> Self {
        let mut state = MergeState {
            n,
            dist,
            active: vec![true; n],
            members: (0..n).map(|i| vec![i]).collect(),
            nn_dist: vec![f64::INFINITY; n],
            nn_tgt: vec![usize::MAX; n],
        };
        for i in 0..n {
            state.recompute_nn(i);
        }
        state
    }

    /// Exact scan of row `i` over active slots j > i; keeps the smallest
    /// target index on distance ties so merge ordering stays canonical.
    fn recompute_nn(&mut self, i: usize) {
        let mut best = f64::INFINITY;
        let mut tgt = usize::MAX;
        for j in (i + 1)..self.n {
            if !self.active[j] {
                continue;
            }
            let d = self.dist[condensed_index(self.n, i, j)];
            if d < best {
                best = d;
                tgt = j;
            }
        }
        self.nn_dist[i] = best;
        self.nn_tgt[i] = tgt;
    }

    /// Globally closest pair of active clusters, ordered by
    /// (distance, left slot, right slot). Returns None when fewer than two
    /// clusters remain.
    fn closest_pair(&mut self) -> Option<(usize, usize, f64)> {
        loop {
            let mut best = f64::INFINITY;
            let mut pair: Option<(usize, usize)> = None;
            for i in 0..self.n {
                if !self.active[i] || self.nn_tgt[i] == usize::MAX {
                    continue;
                }
                // Strict < keeps the smallest left slot on ties; cached
                // entries always point at the smallest tying right slot.
                if self.nn_dist[i] < best {
                    best = self.nn_dist[i];
                    pair = Some((i, self.nn_tgt[i]));
                }
            }
            let (i, j) = pair?;
            // Validate the winning cache entry: its target must still be
            // alive and the matrix cell must still hold the cached value.
            if self.active[j] && self.dist[condensed_index(self.n, i, j)] == self.nn_dist[i] {
                return Some((i, j, best));
            }
            self.recompute_nn(i);
        }
    }

    /// Merge slot `j` into slot `i` (i < j), updating distances of all other
    /// active clusters via Lance-Williams and patching the nn cache.
    fn merge(&mut self, i: usize, j: usize, linkage: Linkage) {
        let (si, sj) = (self.members[i].len(), self.members[j].len());
        for k in 0..self.n {
            if k == i || k == j || !self.active[k] {
                continue;
            }
            let d_ik = self.dist[condensed_index(self.n, i.min(k), i.max(k))];
            let d_jk = self.dist[condensed_index(self.n, j.min(k), j.max(k))];
            let merged = lance_williams(linkage, d_ik, d_jk, si, sj);
            self.dist[condensed_index(self.n, i.min(k), i.max(k))] = merged;
            if k < i {
                // Row k's cell (k, i) just changed. Decreases (and equal
                // values with a smaller target) must be folded into the
                // cache eagerly; increases are caught later by validation.
                if merged < self.nn_dist[k] || (merged == self.nn_dist[k] && i < self.nn_tgt[k]) {
                    self.nn_dist[k] = merged;
                    self.nn_tgt[k] = i;
                }
            }
        }
        self.active[j] = false;
        let mut absorbed = std::mem::take(&mut self.members[j]);
        self.members[i].append(&mut absorbed);
        self.recompute_nn(i);
    }
}

/// Cluster a corpus bottom-up until the closest pair of clusters is farther
/// apart than `params.threshold` under the chosen linkage.
///
/// Fails on an empty corpus, duplicate item ids, mixed dimensions, or a
/// threshold outside (0, 2].
pub fn hac_cluster(corpus: &[LabeledEmbedding], params: ClusterParams) -> Result<ClusterResult> {
    if corpus.is_empty() {
        return Err(Error::Empty("clustering corpus"));
    }
    if !(params.threshold > 0.0 && params.threshold <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {} outside (0, 2]",
            params.threshold
        )));
    }
    let dim = corpus[0].embedding.dim();
    for item in corpus {
        if item.embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: item.embedding.dim(),
            });
        }
    }

    // Rank items by id so that slot indices double as canonical cluster
    // representatives, making the whole run independent of input order.
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| corpus[a].item_id.cmp(&corpus[b].item_id));
    for w in order.windows(2) {
        if corpus[w[0]].item_id == corpus[w[1]].item_id {
            return Err(Error::DuplicateId(corpus[w[0]].item_id.clone()));
        }
    }

    let n = order.len();
    let mut dist = vec![0.0f64; n * (n - 1) / 2];

    // Fill the condensed matrix one row per task. Cells are written exactly
    // once and depend only on their own pair, so parallel scheduling cannot
    // change a single bit of the result.
    {
        let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n.saturating_sub(1));
        let mut rest: &mut [f64] = &mut dist;
        for i in 0..n.saturating_sub(1) {
            let (row, tail) = rest.split_at_mut(n - 1 - i);
            rows.push((i, row));
            rest = tail;
        }
        rows.into_par_iter().for_each(|(i, row)| {
            let a = corpus[order[i]].embedding.values();
            for (off, cell) in row.iter_mut().enumerate() {
                let b = corpus[order[i + 1 + off]].embedding.values();
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                *cell = (2.0 - 2.0 * dot.clamp(-1.0, 1.0)).max(0.0).sqrt();
            }
        });
    }

    let mut state = MergeState::new(n, dist);
    while let Some((i, j, d)) = state.closest_pair() {
        if d > params.threshold {
            break;
        }
        state.merge(i, j, params.linkage);
    }

    // Canonical output: clusters by (size desc, smallest member rank asc),
    // members by item id ascending.
    let mut slots: Vec<Vec<usize>> = (0..n)
        .filter(|&i| state.active[i])
        .map(|i| {
            let mut m = std::mem::take(&mut state.members[i]);
            m.sort_unstable();
            m
        })
        .collect();
    slots.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let clusters: Vec<Vec<String>> = slots
        .iter()
        .map(|m| m.iter().map(|&r| corpus[order[r]].item_id.clone()).collect())
        .collect();
    let sizes_descending = slots.iter().map(Vec::len).collect();

    Ok(ClusterResult {
        clusters,
        sizes_descending,
        params,
    })
}

/// Pick the UI cluster out of a clustering and build its centroid model.
///
/// The UI cluster is simply the largest one (ties already resolved by the
/// canonical cluster ordering). A warning is logged when it fails to
/// dominate — less than 10x the median cluster size — since that usually
/// means the corpus lacked enough unrecognizable inputs for a stable
/// centroid.
pub fn find_ui_cluster(result: &ClusterResult, corpus: &[LabeledEmbedding]) -> Result<UiModel> {
    let largest = result
        .clusters
        .first()
        .ok_or(Error::Empty("cluster result"))?;

    let mut by_id: std::collections::HashMap<&str, &Embedding> =
        std::collections::HashMap::with_capacity(corpus.len());
    for item in corpus {
        if by_id.insert(item.item_id.as_str(), &item.embedding).is_some() {
            return Err(Error::DuplicateId(item.item_id.clone()));
        }
    }
    let members: Vec<Embedding> = largest
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .cloned()
                .ok_or_else(|| Error::UnresolvableId(id.clone()))
        })
        .collect::<Result<_>>()?;
    let centroid = mean_direction(&members)?;

    let median = median_size(&result.sizes_descending);
    if (largest.len() as f64) < 10.0 * median {
        log::warn!(
            "UI cluster size {} is below 10x the median cluster size {:.1}; \
             the corpus may contain too few unrecognizable inputs for a reliable centroid",
            largest.len(),
            median
        );
    }

    Ok(UiModel {
        centroid,
        source_cluster_size: largest.len(),
        params: result.params,
        source_tag: format!(
            "hac linkage={} threshold={} corpus_size={} clusters={}",
            result.params.linkage,
            result.params.threshold,
            corpus.len(),
            result.clusters.len()
        ),
    })
}

fn median_size(sizes_descending: &[usize]) -> f64 {
    let n = sizes_descending.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sizes_descending[n / 2] as f64
    } else {
        (sizes_descending[n / 2 - 1] + sizes_descending[n / 2]) as f64 / 2.0
    }
}

/// (size, count) pairs sorted by size descending — a quick shape check for
/// whether one cluster dominates the rest.
pub fn cluster_size_histogram(result: &ClusterResult) -> Vec<(usize, usize)> {
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for &s in &result.sizes_descending {
        *counts.entry(s).or_insert(0) += 1;
    }
    counts.into_iter().rev().collect()
}

/// Pairwise chordal distances between the centroids of several UI models —
/// used to check that independently discovered centroids agree.
pub fn centroid_stability(models: &[UiModel]) -> Result<Vec<Vec<f64>>> {
    let mut matrix = vec![vec![0.0f64; models.len()]; models.len()];
    for i in 0..models.len() {
        for j in (i + 1)..models.len() {
            let d = models[i].centroid.chordal_distance(&models[j].centroid)?;
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    Ok(matrix)
}

// ---------------------------------------------------------------------------
