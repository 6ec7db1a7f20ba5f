//! Subcommand implementations and the small pieces they share: argument
//! value parsers, corpus loading helpers, and the `run.config` snapshot
//! builder.

mod aggregate;
mod cluster;
mod eval;
mod matching;
mod score;
mod synth;

use std::path::{Path, PathBuf};

use erskit::io::embedding_file::EmbeddingEncoding;
use erskit::io::ui_model::read_ui_model;
use erskit::{
    DecisionConfig, Embedding, LabeledEmbedding, Linkage, UiModel, WeightingStrategy,
    DEFAULT_GAMMA,
};

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#[derive(clap::Subcommand)]
pub enum Command {
    /// Generate a deterministic synthetic benchmark directory.
    Synth(synth::SynthArgs),
    /// Cluster an embedding corpus and export assignments plus a size
    /// histogram.
    Cluster(cluster::ClusterArgs),
    /// Extract the unrecognizable-identity centroid from a cluster run.
    UiCentroid(cluster::UiCentroidArgs),
    /// Score every embedding's recognizability against a centroid model.
    Score(score::ScoreArgs),
    /// Remove the centroid component from every embedding.
    Enhance(score::EnhanceArgs),
    /// Run 1:1 verification decisions over a pair protocol.
    Verify(matching::VerifyArgs),
    /// Run 1:N open-set search of probes against a gallery.
    Search(matching::SearchArgs),
    /// Fuse multi-item templates into single embeddings with
    /// recognizability-weighted averaging.
    Aggregate(aggregate::AggregateArgs),
    /// Measure verification error rates at fixed false-accept targets.
    EvalVerification(eval::EvalVerificationArgs),
    /// Measure open-set identification error rates and rank accuracy.
    EvalSearch(eval::EvalSearchArgs),
}

/// Whether a finished command left anything for `--strict` to escalate.
pub enum RunStatus {
    Clean,
    UnattainablePoints,
}

/// Marks a semantic flag problem clap could not catch; mapped to exit
/// code 1 instead of the generic data-error code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn run(command: &Command) -> anyhow::Result<RunStatus> {
    match command {
        Command::Synth(args) => synth::run(args),
        Command::Cluster(args) => cluster::run_cluster(args),
        Command::UiCentroid(args) => cluster::run_ui_centroid(args),
        Command::Score(args) => score::run_score(args),
        Command::Enhance(args) => score::run_enhance(args),
        Command::Verify(args) => matching::run_verify(args),
        Command::Search(args) => matching::run_search(args),
        Command::Aggregate(args) => aggregate::run(args),
        Command::EvalVerification(args) => eval::run_verification(args),
        Command::EvalSearch(args) => eval::run_search(args),
    }
}

// ---------------------------------------------------------------------------
// Flag value types and parsers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LinkageArg {
    Average,
    Complete,
    Single,
}

impl From<LinkageArg> for Linkage {
    fn from(value: LinkageArg) -> Linkage {
        match value {
            LinkageArg::Average => Linkage::Average,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Single => Linkage::Single,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EncodingArg {
    /// Compact binary container.
    Binary,
    /// Line-oriented text container (diffable, importable).
    Text,
}

impl From<EncodingArg> for EmbeddingEncoding {
    fn from(value: EncodingArg) -> EmbeddingEncoding {
        match value {
            EncodingArg::Binary => EmbeddingEncoding::Binary,
            EncodingArg::Text => EmbeddingEncoding::Text,
        }
    }
}

/// `identity | square | softmax | top-one | top-fraction:P | uniform`,
/// validated so bad fractions fail at flag-parse time.
pub fn parse_strategy(s: &str) -> erskit::Result<WeightingStrategy> {
    let strategy: WeightingStrategy = s.parse()?;
    if let WeightingStrategy::TopFraction(p) = strategy {
        if !(p > 0.0 && p <= 1.0) {
            return Err(erskit::Error::InvalidParameter(format!(
                "top-fraction {p} outside (0, 1]"
            )));
        }
    }
    Ok(strategy)
}

pub fn parse_tau(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(-1.0..=1.0).contains(&v) {
        return Err(format!("similarity threshold {v} outside [-1, 1]"));
    }
    Ok(v)
}

pub fn parse_gamma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("recognizability gate {v} outside [0, 1]"));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Shared loading / assembly helpers
// ---------------------------------------------------------------------------

/// Wrap bare (id, embedding) records for library entry points that take a
/// labeled corpus; subjects stay empty and carry no meaning here.
pub fn to_labeled(records: Vec<(String, Embedding)>) -> Vec<LabeledEmbedding> {
    records
        .into_iter()
        .map(|(item_id, embedding)| LabeledEmbedding {
            item_id,
            subject_id: String::new(),
            media_id: None,
            embedding,
        })
        .collect()
}

pub fn load_model(path: &Option<PathBuf>) -> anyhow::Result<Option<UiModel>> {
    match path {
        Some(p) => Ok(Some(read_ui_model(p)?)),
        None => Ok(None),
    }
}

/// τ plus the effective gate (the documented default when `--gamma` was not
/// given). Range checks already happened at flag parse time, so the
/// constructor errors cannot trigger from the CLI.
pub fn decision_config(tau: f64, gamma: Option<f64>) -> erskit::Result<DecisionConfig> {
    DecisionConfig::new(tau)?.with_gamma(gamma.unwrap_or(DEFAULT_GAMMA))
}

// ---------------------------------------------------------------------------
// run.config snapshots
// ---------------------------------------------------------------------------

/// Builds the `run.config` snapshot a directory-producing command leaves
/// next to its outputs.
pub struct Snapshot {
    entries: Vec<(String, String)>,
}

impl Snapshot {
    pub fn new(command: &str) -> Snapshot {
        Snapshot {
            entries: vec![("command".to_string(), command.to_string())],
        }
    }

    pub fn push(mut self, key: &str, value: impl std::fmt::Display) -> Snapshot {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_path(self, key: &str, path: &Path) -> Snapshot {
        let rendered = path.display().to_string();
        self.push(key, rendered)
    }

    pub fn push_opt_path(self, key: &str, path: &Option<PathBuf>) -> Snapshot {
        match path {
            Some(p) => self.push_path(key, p),
            None => self,
        }
    }

    pub fn write(self, dir: &Path) -> erskit::Result<()> {
        erskit::io::write_run_config(&dir.join("run.config"), &self.entries)
    }
}

/// Comma-joins numeric target lists for snapshot values.
pub fn join_displayed<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
