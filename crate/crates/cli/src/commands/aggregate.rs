//! `erskit aggregate` — fuse multi-item templates into single embeddings.

use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use erskit::aggregation::{aggregate, aggregate_media_pooled};
use erskit::ers::compute_ers;
use erskit::io::embedding_file::{read_dataset, write_embeddings};
use erskit::io::protocol::{read_templates, write_ers_table};
use erskit::io::ui_model::read_ui_model;
use erskit::{
    Embedding, ErsValue, LabeledEmbedding, Template, TemplateMember, WeightingStrategy,
};

use super::{parse_strategy, EncodingArg, RunStatus, Snapshot};

#[derive(clap::Args)]
pub struct AggregateArgs {
    /// Embeddings container holding every template member.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Template membership (template_id,subject_id,item_id rows).
    #[arg(long, value_name = "FILE")]
    templates: PathBuf,

    /// Centroid model used to score members.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Labels file supplying media ids (needed by --media-pool).
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,

    /// How member scores become fusion weights.
    #[arg(long, default_value = "square", value_parser = parse_strategy)]
    strategy: WeightingStrategy,

    /// Pool items of one medium with a plain mean first, then weight
    /// across media.
    #[arg(long, requires = "labels")]
    media_pool: bool,

    /// Directory for templates.ersk, template-ers.csv and run.config.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Encoding of the fused embeddings container.
    #[arg(long, value_enum, default_value = "binary")]
    encoding: EncodingArg,
}

pub fn run(args: &AggregateArgs) -> anyhow::Result<RunStatus> {
    let corpus = read_dataset(&args.embeddings, args.labels.as_deref())?;
    let model = read_ui_model(&args.model)?;
    let specs = read_templates(&args.templates)?;
    if specs.is_empty() {
        bail!("{} lists no templates", args.templates.display());
    }

    let mut by_id: HashMap<&str, &LabeledEmbedding> = HashMap::with_capacity(corpus.len());
    for item in &corpus {
        if by_id.insert(item.item_id.as_str(), item).is_some() {
            bail!("duplicate item id `{}` in {}", item.item_id, args.embeddings.display());
        }
    }

    let mut fused: Vec<(String, Embedding)> = Vec::with_capacity(specs.len());
    let mut scores: Vec<(String, ErsValue)> = Vec::with_capacity(specs.len());
    for spec in &specs {
        let members: Vec<TemplateMember> = spec
            .item_ids
            .iter()
            .map(|id| {
                let item = by_id.get(id.as_str()).ok_or_else(|| {
                    anyhow!("template `{}` references unknown item `{id}`", spec.template_id)
                })?;
                Ok(TemplateMember {
                    embedding: item.embedding.clone(),
                    ers: compute_ers(&item.embedding, &model)?,
                    media_id: item.media_id.clone(),
                })
            })
            .collect::<anyhow::Result<_>>()?;
        let template = Template {
            template_id: spec.template_id.clone(),
            subject_id: spec.subject_id.clone(),
            members,
        };
        let result = if args.media_pool {
            aggregate_media_pooled(&template, args.strategy)
        } else {
            aggregate(&template, args.strategy)
        }
        .with_context(|| format!("fusing template `{}`", spec.template_id))?;
        fused.push((spec.template_id.clone(), result.embedding));
        scores.push((spec.template_id.clone(), result.ers));
    }

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_embeddings(&args.out.join("templates.ersk"), &fused, args.encoding.into())?;
    write_ers_table(&args.out.join("template-ers.csv"), &scores)?;
    Snapshot::new("aggregate")
        .push_path("embeddings", &args.embeddings)
        .push_path("templates", &args.templates)
        .push_path("model", &args.model)
        .push_opt_path("labels", &args.labels)
        .push("strategy", args.strategy)
        .push("media_pool", args.media_pool)
        .write(&args.out)?;

    println!(
        "fused {} templates with `{}` weighting{} -> {}",
        fused.len(),
        args.strategy,
        if args.media_pool { " (media pooled)" } else { "" },
        args.out.display()
    );
    Ok(RunStatus::Clean)
}
