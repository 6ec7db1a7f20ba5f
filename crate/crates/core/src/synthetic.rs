//! Deterministic synthetic benchmarks with a planted unrecognizable blob.
//!
//! The generator builds a corpus that mirrors the geometry this toolkit is
//! designed around: identities are von Mises-Fisher (vMF) clusters around
//! well-separated mean directions, unrecognizable inputs form one diffuse
//! vMF blob around a dedicated direction, and degraded items are identity
//! samples blended toward that blob. Because every item records its true
//! blend factor and true recognizability, generated corpora double as
//! ground truth for end-to-end tests.
//!
//! Determinism: a single ChaCha8 stream seeded from `config.seed` drives
//! every draw in a fixed documented order (UI mean, identity means, items
//! subject-by-subject, blob items, protocol sampling). ChaCha8 is a
//! portable keyed generator, so equal configs produce bit-identical
//! corpora on every platform and at every thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::embedding::{Embedding, LabeledEmbedding, DEGENERATE_NORM};
use crate::metrics::{ProtocolPair, TemplateSpec};
use crate::{Error, Result};

/// Subject label given to blob items; never used for a real identity.
pub const UI_SUBJECT: &str = "ui";

/// Everything the generator needs. See [`GeneratorConfig::default`] for a
/// small but representative starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    /// Embedding dimension (>= 2; vMF sampling needs a tangent direction).
    pub dim: usize,
    /// Number of identities.
    pub subjects: usize,
    /// Items generated per identity.
    pub items_per_subject: usize,
    /// Size of the unrecognizable blob.
    pub ui_items: usize,
    /// Fraction of each identity's items to degrade; the count is
    /// floor(fraction * items_per_subject), taken from the tail of each
    /// subject's item list.
    pub degraded_fraction: f64,
    /// Blend range for degraded items; each draws t uniformly from
    /// [t_min, t_max]. t = 0 is untouched, t = 1 sits on the blob mean.
    pub t_min: f64,
    pub t_max: f64,
    /// vMF concentration of identity clusters (higher = tighter).
    pub kappa_identity: f64,
    /// vMF concentration of the unrecognizable blob.
    pub kappa_ui: f64,
    /// Per-component Gaussian noise added during degradation.
    pub degradation_noise: f64,
    /// Upper bound on |cos| between any two planted means (identity and
    /// blob). Placement is by rejection and fails if infeasible.
    pub separation: f64,
    /// Impostor pairs emitted per genuine pair in the generated protocols.
    pub impostor_ratio: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            dim: 64,
            subjects: 20,
            items_per_subject: 10,
            ui_items: 400,
            degraded_fraction: 0.3,
            t_min: 0.6,
            t_max: 0.9,
            kappa_identity: 400.0,
            kappa_ui: 150.0,
            degradation_noise: 0.05,
            separation: 0.3,
            impostor_ratio: 3.0,
            seed: 17,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.dim < 2 {
            return bad(format!("dim {} must be >= 2", self.dim));
        }
        if self.subjects == 0 {
            return bad("subjects must be >= 1".into());
        }
        if self.items_per_subject == 0 {
            return bad("items_per_subject must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.degraded_fraction) {
            return bad(format!(
                "degraded_fraction {} outside [0, 1]",
                self.degraded_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.t_min)
            || !(0.0..=1.0).contains(&self.t_max)
            || self.t_min > self.t_max
        {
            return bad(format!(
                "blend range [{}, {}] must satisfy 0 <= t_min <= t_max <= 1",
                self.t_min, self.t_max
            ));
        }
        for (name, kappa) in [
            ("kappa_identity", self.kappa_identity),
            ("kappa_ui", self.kappa_ui),
        ] {
            if !(kappa > 0.0 && kappa <= 1e6) {
                return bad(format!("{name} {kappa} outside (0, 1e6]"));
            }
        }
        if !(self.degradation_noise >= 0.0 && self.degradation_noise.is_finite()) {
            return bad(format!(
                "degradation_noise {} must be finite and >= 0",
                self.degradation_noise
            ));
        }
        if !(self.separation > 0.0 && self.separation < 1.0) {
            return bad(format!("separation {} outside (0, 1)", self.separation));
        }
        if !(self.impostor_ratio >= 0.0 && self.impostor_ratio.is_finite()) {
            return bad(format!(
                "impostor_ratio {} must be finite and >= 0",
                self.impostor_ratio
            ));
        }
        Ok(())
    }

    fn degraded_per_subject(&self) -> usize {
        // The epsilon guards exact products against float dust
        // (0.3 * 10 must degrade exactly 3 items).
        ((self.degraded_fraction * self.items_per_subject as f64) + 1e-9).floor() as usize
    }
}

/// Per-item generator truth, for calibrating and testing against.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthRecord {
    pub item_id: String,
    pub subject_id: String,
    /// Blend factor toward the blob mean: 0 for clean identity items,
    /// 1 for blob items.
    pub t: f64,
    /// Capped recognizability against the true (generator) blob mean.
    pub true_ers: f64,
}

/// A generated corpus plus ready-to-use protocols and full ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticBenchmark {
    pub config: GeneratorConfig,
    /// The true blob mean the generator planted (discovery should recover
    /// a centroid close to this).
    pub ui_mean: Embedding,
    pub identity_means: Vec<Embedding>,
    /// Identity items (subject by subject, clean before degraded) followed
    /// by blob items.
    pub items: Vec<LabeledEmbedding>,
    /// One record per item, in the same order as `items`.
    pub ground_truth: Vec<GroundTruthRecord>,
    /// Verification protocol over item ids: all within-subject genuine
    /// pairs plus sampled cross-subject impostor pairs.
    pub pairs: Vec<ProtocolPair>,
    /// Two templates per subject (members split round-robin).
    pub templates: Vec<TemplateSpec>,
    /// Verification protocol over template ids.
    pub template_pairs: Vec<ProtocolPair>,
    /// Search protocol over item ids: first item of each subject enrolled,
    /// everything else (including all blob items) probing.
    pub gallery_ids: Vec<String>,
    pub probe_ids: Vec<String>,
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

fn raw_uniform_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= DEGENERATE_NORM {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A direction drawn uniformly from the unit sphere.
pub fn sample_uniform_direction<R: Rng>(rng: &mut R, dim: usize) -> Result<Embedding> {
    if dim == 0 {
        return Err(Error::Empty("embedding has no components"));
    }
    Embedding::new(raw_uniform_direction(rng, dim))
}

/// Draw from the von Mises-Fisher distribution vMF(mean, kappa) using
/// Wood's rejection scheme: sample the cosine `w` of the angle to the mean
/// from the marginal via a Beta envelope, pick a uniform tangent direction,
/// and combine.
pub fn sample_vmf<R: Rng>(rng: &mut R, mean: &Embedding, kappa: f64) -> Result<Embedding> {
    let dim = mean.dim();
    if dim < 2 {
        return Err(Error::InvalidParameter(
            "vMF sampling needs dim >= 2".into(),
        ));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kappa {kappa} must be positive and finite"
        )));
    }
    let d = dim as f64;
    // Envelope parameter in its cancellation-free form:
    // b = (d-1) / (sqrt(4k^2 + (d-1)^2) + 2k).
    let b = (d - 1.0) / ((4.0 * kappa * kappa + (d - 1.0) * (d - 1.0)).sqrt() + 2.0 * kappa);
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + (d - 1.0) * (1.0 - x0 * x0).ln();
    let beta = Beta::new((d - 1.0) / 2.0, (d - 1.0) / 2.0)
        .expect("shape (d-1)/2 is positive for d >= 2");

    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        let log_u = if u > 0.0 { u.ln() } else { f64::NEG_INFINITY };
        if kappa * w + (d - 1.0) * (1.0 - x0 * w).ln() - c >= log_u {
            break w;
        }
    };

    // Uniform tangent direction orthogonal to the mean.
    let mu = mean.values();
    let tangent = loop {
        let g = raw_uniform_direction(rng, dim);
        let along: f64 = g.iter().zip(mu).map(|(a, b)| a * b).sum();
        let residual: Vec<f64> = g.iter().zip(mu).map(|(a, b)| a - along * b).collect();
        let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= DEGENERATE_NORM {
            break residual.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };

    let sin = (1.0 - w * w).max(0.0).sqrt();
    let sample: Vec<f64> = tangent
        .iter()
        .zip(mu)
        .map(|(t, m)| sin * t + w * m)
        .collect();
    Embedding::new(sample)
}

/// Place `count` identity means plus the blob mean, all pairwise separated
/// (|cos| below `separation`), by rejection sampling. The first returned
/// embedding is the blob mean.
pub fn gen_separated_means<R: Rng>(
    rng: &mut R,
    dim: usize,
    count: usize,
    separation: f64,
) -> Result<Vec<Embedding>> {
    const MAX_TRIES_PER_MEAN: usize = 10_000;
    let mut means: Vec<Embedding> = Vec::with_capacity(count + 1);
    for _ in 0..=count {
        let mut placed = false;
        for _ in 0..MAX_TRIES_PER_MEAN {
            let candidate = sample_uniform_direction(rng, dim)?;
            let ok = means.iter().try_fold(true, |acc, m| -> Result<bool> {
                Ok(acc && m.cosine_similarity(&candidate)?.abs() < separation)
            })?;
            if ok {
                means.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::SeparationUnachievable {
                count: count + 1,
                bound: separation,
                dim,
            });
        }
    }
    Ok(means)
}

/// Degrade an embedding by blending it toward the blob mean and adding
/// isotropic noise: normalize((1 - t) * f + t * ui + noise * g).
///
/// Fails when the blend cancels to a near-zero vector (possible when `f`
/// and the blob mean are antipodal and t is 0.5).
pub fn gen_degradation<R: Rng>(
    rng: &mut R,
    embedding: &Embedding,
    ui_mean: &Embedding,
    t: f64,
    noise: f64,
) -> Result<Embedding> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t {t} outside [0, 1]")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise {noise} must be finite and >= 0"
        )));
    }
    if embedding.dim() != ui_mean.dim() {
        return Err(Error::DimensionMismatch {
            left: embedding.dim(),
            right: ui_mean.dim(),
        });
    }
    let blended: Vec<f64> = embedding
        .values()
        .iter()
        .zip(ui_mean.values())
        .map(|(f, u)| {
            let g: f64 = rng.sample(StandardNormal);
            (1.0 - t) * f + t * u + noise * g
        })
        .collect();
    Embedding::new(blended)
}

// ---------------------------------------------------------------------------
// Benchmark assembly
// ---------------------------------------------------------------------------

fn capped_true_ers(embedding: &Embedding, ui_mean: &Embedding) -> Result<f64> {
    Ok((1.0 - ui_mean.cosine_similarity(embedding)?).min(1.0))
}

/// Generate a complete benchmark from a config. Equal configs produce
/// bit-identical benchmarks.
pub fn generate_benchmark(config: &GeneratorConfig) -> Result<SyntheticBenchmark> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Draw order is part of the determinism contract; do not reorder.
    let mut means = gen_separated_means(&mut rng, config.dim, config.subjects, config.separation)?;
    let ui_mean = means.remove(0);
    let identity_means = means;

    let degraded_count = config.degraded_per_subject();
    let clean_count = config.items_per_subject - degraded_count;

    let mut items = Vec::with_capacity(config.subjects * config.items_per_subject + config.ui_items);
    let mut ground_truth = Vec::with_capacity(items.capacity());

    for (s_idx, mean) in identity_means.iter().enumerate() {
        let subject_id = format!("s{s_idx:04}");
        for i_idx in 0..config.items_per_subject {
            let item_id = format!("{subject_id}-i{i_idx:04}");
            let clean = sample_vmf(&mut rng, mean, config.kappa_identity)?;
            let (embedding, t) = if i_idx < clean_count {
                (clean, 0.0)
            } else {
                let t = rng.random_range(config.t_min..=config.t_max);
                let degraded =
                    gen_degradation(&mut rng, &clean, &ui_mean, t, config.degradation_noise)?;
                (degraded, t)
            };
            ground_truth.push(GroundTruthRecord {
                item_id: item_id.clone(),
                subject_id: subject_id.clone(),
                t,
                true_ers: capped_true_ers(&embedding, &ui_mean)?,
            });
            items.push(LabeledEmbedding {
                item_id,
                subject_id: subject_id.clone(),
                media_id: None,
                embedding,
            });
        }
    }

    for u_idx in 0..config.ui_items {
        let item_id = format!("ui-{u_idx:05}");
        let embedding = sample_vmf(&mut rng, &ui_mean, config.kappa_ui)?;
        ground_truth.push(GroundTruthRecord {
            item_id: item_id.clone(),
            subject_id: UI_SUBJECT.to_string(),
            t: 1.0,
            true_ers: capped_true_ers(&embedding, &ui_mean)?,
        });
        items.push(LabeledEmbedding {
            item_id,
            subject_id: UI_SUBJECT.to_string(),
            media_id: None,
            embedding,
        });
    }

    let (pairs, templates, template_pairs) = build_protocols(config, &mut rng);

    // Search protocol: enroll each subject's first item, probe with the
    // rest plus the whole blob (guaranteed non-mated).
    let mut gallery_ids = Vec::with_capacity(config.subjects);
    let mut probe_ids = Vec::new();
    for item in &items {
        if item.subject_id != UI_SUBJECT && item.item_id.ends_with("-i0000") {
            gallery_ids.push(item.item_id.clone());
        } else {
            probe_ids.push(item.item_id.clone());
        }
    }

    Ok(SyntheticBenchmark {
        config: config.clone(),
        ui_mean,
        identity_means,
        items,
        ground_truth,
        pairs,
        templates,
        template_pairs,
        gallery_ids,
        probe_ids,
    })
}

fn item_id(s_idx: usize, i_idx: usize) -> String {
    format!("s{s_idx:04}-i{i_idx:04}")
}

fn build_protocols<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> (Vec<ProtocolPair>, Vec<TemplateSpec>, Vec<ProtocolPair>) {
    let (s_count, i_count) = (config.subjects, config.items_per_subject);

    // Item-level pairs: all within-subject combinations...
    let mut pairs = Vec::new();
    for s in 0..s_count {
        for a in 0..i_count {
            for b in (a + 1)..i_count {
                pairs.push(ProtocolPair {
                    id_a: item_id(s, a),
                    id_b: item_id(s, b),
                    genuine: true,
                });
            }
        }
    }
    // ...plus sampled distinct cross-subject impostors.
    let genuine_count = pairs.len();
    let impostor_target = ((config.impostor_ratio * genuine_count as f64) + 1e-9) as usize;
    if s_count > 1 {
        let mut seen = std::collections::HashSet::new();
        let mut attempts = 0usize;
        let max_attempts = impostor_target.saturating_mul(20).max(1000);
        while seen.len() < impostor_target && attempts < max_attempts {
            attempts += 1;
            let sa = rng.random_range(0..s_count);
            let sb = rng.random_range(0..s_count);
            if sa == sb {
                continue;
            }
            let ia = rng.random_range(0..i_count);
            let ib = rng.random_range(0..i_count);
            let key = if (sa, ia) < (sb, ib) {
                (sa, ia, sb, ib)
            } else {
                (sb, ib, sa, ia)
            };
            if seen.insert(key) {
                pairs.push(ProtocolPair {
                    id_a: item_id(key.0, key.1),
                    id_b: item_id(key.2, key.3),
                    genuine: false,
                });
            }
        }
    }

    // Templates: split each subject's items round-robin into two, so both
    // halves carry their share of degraded members.
    let mut templates = Vec::with_capacity(s_count * 2);
    for s in 0..s_count {
        let subject_id = format!("s{s:04}");
        let mut halves: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        for i in 0..i_count {
            halves[i % 2].push(item_id(s, i));
        }
        for (half, members) in halves.into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let tag = if half == 0 { "a" } else { "b" };
            templates.push(TemplateSpec {
                template_id: format!("t{s:04}-{tag}"),
                subject_id: subject_id.clone(),
                item_ids: members,
            });
        }
    }

    // Template-level pairs: each subject's two halves genuine, sampled
    // cross-subject template pairs impostor.
    let mut template_pairs = Vec::new();
    if i_count >= 2 {
        for s in 0..s_count {
            template_pairs.push(ProtocolPair {
                id_a: format!("t{s:04}-a"),
                id_b: format!("t{s:04}-b"),
                genuine: true,
            });
        }
        let impostor_target = ((config.impostor_ratio * s_count as f64) + 1e-9) as usize;
        if s_count > 1 {
            let mut seen = std::collections::HashSet::new();
            let mut attempts = 0usize;
            let max_attempts = impostor_target.saturating_mul(20).max(1000);
            while seen.len() < impostor_target && attempts < max_attempts {
                attempts += 1;
                let sa = rng.random_range(0..s_count);
                let sb = rng.random_range(0..s_count);
                if sa == sb {
                    continue;
                }
                let ha = rng.random_range(0..2usize);
                let hb = rng.random_range(0..2usize);
                let key = if (sa, ha) < (sb, hb) {
                    (sa, ha, sb, hb)
                } else {
                    (sb, hb, sa, ha)
                };
                if seen.insert(key) {
                    let tag = |h: usize| if h == 0 { "a" } else { "b" };
                    template_pairs.push(ProtocolPair {
                        id_a: format!("t{:04}-{}", key.0, tag(key.1)),
                        id_b: format!("t{:04}-{}", key.2, tag(key.3)),
                        genuine: false,
                    });
                }
            }
        }
    }

    (pairs, templates, template_pairs)
}

// ---------------------------------------------------------------------------
