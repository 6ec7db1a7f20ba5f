//! `erskit eval-verification` and `erskit eval-search` — full pipeline
//! evaluation against standard biometric protocols.

use std::path::PathBuf;

use anyhow::Context;
use erskit::io::protocol::{read_manifest, read_pairs, read_templates};
use erskit::io::report::{
    write_identification_csv, write_operating_points_csv, write_rank_csv, write_report_text,
};
use erskit::metrics::{eval_search, eval_verification};
use erskit::{EvalReport, Pipeline, TemplateSpec, WeightingStrategy};

use super::{
    decision_config, join_displayed, load_model, parse_gamma, parse_strategy, parse_tau,
    RunStatus, Snapshot, UsageError,
};

// ---------------------------------------------------------------------------
// Shared pipeline flags
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PipelineKind {
    /// Compare raw item embeddings.
    Single,
    /// Compare raw item embeddings behind the recognizability gate.
    SingleGated,
    /// Compare fused templates.
    Template,
    /// Compare fused templates behind the gate on template-level scores.
    TemplateGated,
    /// Remove the centroid component from every member, then average
    /// uniformly.
    EnhancedAverage,
}

#[derive(clap::Args)]
pub struct EvalCommonArgs {
    /// Embeddings container for every item the protocol references.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Subject labels for the items (media ids ride along).
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,

    /// Template membership; protocol ids then name templates, not items.
    #[arg(long, value_name = "FILE",
          required_if_eq_any([("pipeline", "template"), ("pipeline", "template-gated")]))]
    templates: Option<PathBuf>,

    /// Centroid model; required by gated and enhanced pipelines and by any
    /// weighting strategy that consumes recognizability scores.
    #[arg(long, value_name = "FILE",
          required_if_eq_any([
              ("pipeline", "single-gated"),
              ("pipeline", "template-gated"),
              ("pipeline", "enhanced-average"),
          ]))]
    model: Option<PathBuf>,

    /// Scoring pipeline to evaluate.
    #[arg(long, value_enum)]
    pipeline: PipelineKind,

    /// Weighting strategy for template pipelines.
    #[arg(long, default_value = "square", value_parser = parse_strategy)]
    strategy: WeightingStrategy,

    /// Pool items of one medium first, then weight across media
    /// (template pipelines only).
    #[arg(long)]
    media_pool: bool,

    /// Similarity acceptance threshold, in [-1, 1]. Evaluation sweeps its
    /// own thresholds; this one only configures the gate context.
    #[arg(long, default_value_t = 0.0, value_parser = parse_tau)]
    tau: f64,

    /// Recognizability gate, in [0, 1]; needs --model. Defaults to 0.6.
    #[arg(long, value_parser = parse_gamma, requires = "model")]
    gamma: Option<f64>,

    /// Output directory for the report files and run.config.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

impl EvalCommonArgs {
    fn build_pipeline(&self) -> anyhow::Result<Pipeline> {
        let pipeline = match self.pipeline {
            PipelineKind::Single => Pipeline::Single,
            PipelineKind::SingleGated => Pipeline::SingleGated,
            PipelineKind::Template => Pipeline::Template {
                strategy: self.strategy,
                media_pool: self.media_pool,
            },
            PipelineKind::TemplateGated => Pipeline::TemplateGated {
                strategy: self.strategy,
                media_pool: self.media_pool,
            },
            PipelineKind::EnhancedAverage => Pipeline::EnhancedAverage,
        };
        // Only the plain average (top-fraction over everything) can fuse
        // without recognizability scores; clap cannot see the strategy
        // value, so this usage check lives here.
        let strategy_needs_scores =
            !matches!(self.strategy, WeightingStrategy::TopFraction(p) if p >= 1.0);
        if matches!(pipeline, Pipeline::Template { .. })
            && self.model.is_none()
            && strategy_needs_scores
        {
            return Err(UsageError(format!(
                "--pipeline template with strategy `{}` requires --model \
                 (only `uniform` runs without one)",
                self.strategy
            ))
            .into());
        }
        Ok(pipeline)
    }

    fn load_templates(&self) -> anyhow::Result<Vec<TemplateSpec>> {
        match &self.templates {
            Some(path) => Ok(read_templates(path)?),
            None => Ok(Vec::new()),
        }
    }

    fn snapshot(&self, command: &str, pipeline: &Pipeline, gamma: f64) -> Snapshot {
        Snapshot::new(command)
            .push_path("embeddings", &self.embeddings)
            .push_opt_path("labels", &self.labels)
            .push_opt_path("templates", &self.templates)
            .push_opt_path("model", &self.model)
            .push("pipeline", pipeline)
            .push("tau", self.tau)
            .push("gamma", gamma)
    }
}

/// Prints the written report to stdout and warns about every operating
/// point whose target was unattainable; returns the status `--strict`
/// escalates on.
fn finish(report: &EvalReport, report_path: &std::path::Path) -> anyhow::Result<RunStatus> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading back {}", report_path.display()))?;
    print!("{text}");

    let mut unattainable = false;
    for op in report.operating_points.iter().filter(|op| op.unattainable) {
        unattainable = true;
        eprintln!(
            "warning: FAR target {} is unattainable with {} impostor comparisons; \
             reported the zero-accept threshold",
            op.far_target, report.negatives
        );
    }
    for ip in report.identification_points.iter().filter(|ip| ip.unattainable) {
        unattainable = true;
        eprintln!(
            "warning: FPIR target {} is unattainable with {} non-mated probes; \
             reported the zero-accept threshold",
            ip.fpir_target, report.negatives
        );
    }
    Ok(if unattainable {
        RunStatus::UnattainablePoints
    } else {
        RunStatus::Clean
    })
}

// ---------------------------------------------------------------------------
// eval-verification
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct EvalVerificationArgs {
    #[command(flatten)]
    common: EvalCommonArgs,

    /// Comparison pairs; ids follow the pipeline (items or templates).
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,

    /// False-accept-rate targets to sweep, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    far_targets: Vec<f64>,
}

pub fn run_verification(args: &EvalVerificationArgs) -> anyhow::Result<RunStatus> {
    let common = &args.common;
    let items = read_dataset_args(common)?;
    let templates = common.load_templates()?;
    let model = load_model(&common.model)?;
    let pipeline = common.build_pipeline()?;
    let cfg = decision_config(common.tau, common.gamma)?;
    let pairs = read_pairs(&args.pairs)?;

    let report = eval_verification(
        &items,
        &templates,
        model.as_ref(),
        &pairs,
        &pipeline,
        &cfg,
        &args.far_targets,
    )?;

    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let report_path = common.out.join("report.txt");
    write_report_text(&report_path, &report)?;
    write_operating_points_csv(&common.out.join("operating-points.csv"), &report)?;
    common
        .snapshot("eval-verification", &pipeline, cfg.gamma())
        .push_path("pairs", &args.pairs)
        .push("far_targets", join_displayed(&args.far_targets))
        .write(&common.out)?;

    finish(&report, &report_path)
}

// ---------------------------------------------------------------------------
// eval-search
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct EvalSearchArgs {
    #[command(flatten)]
    common: EvalCommonArgs,

    /// Manifest of enrolled ids (each resolving to a distinct subject).
    #[arg(long, value_name = "FILE")]
    gallery: PathBuf,

    /// Manifest of probe ids.
    #[arg(long, value_name = "FILE")]
    probes: PathBuf,

    /// False-positive-identification-rate targets, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    fpir_targets: Vec<f64>,

    /// Rank depths for closed-set accuracy over mated probes.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1usize, 5, 10])]
    ranks: Vec<usize>,

    /// Also drop gallery entries below the gate from the candidate set.
    #[arg(long, requires = "model")]
    gate_gallery: bool,
}

pub fn run_search(args: &EvalSearchArgs) -> anyhow::Result<RunStatus> {
    let common = &args.common;
    let items = read_dataset_args(common)?;
    let templates = common.load_templates()?;
    let model = load_model(&common.model)?;
    let pipeline = common.build_pipeline()?;
    let cfg = decision_config(common.tau, common.gamma)?.with_gallery_gating(args.gate_gallery);
    let gallery_ids = read_manifest(&args.gallery).context("reading gallery manifest")?;
    let probe_ids = read_manifest(&args.probes).context("reading probe manifest")?;

    let report = eval_search(
        &items,
        &templates,
        model.as_ref(),
        &gallery_ids,
        &probe_ids,
        &pipeline,
        &cfg,
        &args.fpir_targets,
        &args.ranks,
    )?;

    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let report_path = common.out.join("report.txt");
    write_report_text(&report_path, &report)?;
    write_identification_csv(&common.out.join("identification.csv"), &report)?;
    write_rank_csv(&common.out.join("rank.csv"), &report)?;
    common
        .snapshot("eval-search", &pipeline, cfg.gamma())
        .push_path("gallery", &args.gallery)
        .push_path("probes", &args.probes)
        .push("fpir_targets", join_displayed(&args.fpir_targets))
        .push("ranks", join_displayed(&args.ranks))
        .push("gate_gallery", args.gate_gallery)
        .write(&common.out)?;

    finish(&report, &report_path)
}

fn read_dataset_args(common: &EvalCommonArgs) -> anyhow::Result<Vec<erskit::LabeledEmbedding>> {
    Ok(erskit::io::embedding_file::read_dataset(
        &common.embeddings,
        common.labels.as_deref(),
    )?)
}
