//! `erskit score` and `erskit enhance` — per-embedding recognizability
//! scoring and centroid-component removal.

use std::path::PathBuf;

use anyhow::Context;
use erskit::ers::{batch_ers, enhance_embedding};
use erskit::io::embedding_file::{read_embeddings, write_embeddings};
use erskit::io::protocol::write_ers_table;
use erskit::io::ui_model::read_ui_model;
use erskit::Embedding;

use super::{to_labeled, EncodingArg, RunStatus};

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct ScoreArgs {
    /// Embeddings container to score.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Centroid model to score against.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Path for the score table (item_id,ers,raw).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

pub fn run_score(args: &ScoreArgs) -> anyhow::Result<RunStatus> {
    let corpus = to_labeled(read_embeddings(&args.embeddings)?);
    let model = read_ui_model(&args.model)?;
    let rows = batch_ers(&corpus, &model)?;
    write_ers_table(&args.out, &rows)?;

    let summary = if rows.is_empty() {
        String::from("no items")
    } else {
        let mean = rows.iter().map(|(_, v)| v.capped()).sum::<f64>() / rows.len() as f64;
        format!("{} items, mean capped score {mean:.4}", rows.len())
    };
    println!("scored {summary} -> {}", args.out.display());
    Ok(RunStatus::Clean)
}

// ---------------------------------------------------------------------------
// enhance
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct EnhanceArgs {
    /// Embeddings container to enhance.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Centroid model whose component is removed.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Path for the enhanced embeddings container.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Encoding of the output container.
    #[arg(long, value_enum, default_value = "binary")]
    encoding: EncodingArg,
}

pub fn run_enhance(args: &EnhanceArgs) -> anyhow::Result<RunStatus> {
    let records = read_embeddings(&args.embeddings)?;
    let model = read_ui_model(&args.model)?;
    let enhanced: Vec<(String, Embedding)> = records
        .iter()
        .map(|(id, embedding)| {
            enhance_embedding(embedding, &model)
                .map(|e| (id.clone(), e))
                .with_context(|| format!("enhancing item `{id}`"))
        })
        .collect::<anyhow::Result<_>>()?;
    write_embeddings(&args.out, &enhanced, args.encoding.into())?;

    println!("enhanced {} items -> {}", enhanced.len(), args.out.display());
    Ok(RunStatus::Clean)
}
