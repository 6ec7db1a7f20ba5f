//! `erskit verify` and `erskit search` — 1:1 and 1:N decisions, optionally
//! behind the recognizability gate.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use erskit::decisions::{identify, identify_with_ers, verify, verify_with_ers};
use erskit::ers::compute_ers;
use erskit::io::embedding_file::read_embeddings;
use erskit::io::protocol::read_pairs;
use erskit::{Embedding, ErsValue, UiModel};

use super::{decision_config, load_model, parse_gamma, parse_tau, RunStatus};

fn rate(hits: usize, total: usize) -> String {
    if total == 0 {
        String::from("n/a")
    } else {
        format!("{:.6}", hits as f64 / total as f64)
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Embeddings container holding every item the pairs reference.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Comparison pairs (id_a,id_b,genuine).
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,

    /// Centroid model; enables the recognizability gate.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,

    /// Similarity acceptance threshold, in [-1, 1].
    #[arg(long, value_parser = parse_tau)]
    tau: f64,

    /// Recognizability gate, in [0, 1]; needs --model. Defaults to 0.6.
    #[arg(long, value_parser = parse_gamma, requires = "model")]
    gamma: Option<f64>,

    /// Write per-pair decisions (id_a,id_b,genuine,similarity,accepted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

struct VerifyEntry {
    embedding: Embedding,
    ers: Option<ErsValue>,
}

pub fn run_verify(args: &VerifyArgs) -> anyhow::Result<RunStatus> {
    let records = read_embeddings(&args.embeddings)?;
    let pairs = read_pairs(&args.pairs)?;
    let model = load_model(&args.model)?;
    let cfg = decision_config(args.tau, args.gamma)?;

    let mut entries: HashMap<String, VerifyEntry> = HashMap::with_capacity(records.len());
    for (id, embedding) in records {
        let ers = match &model {
            Some(m) => Some(compute_ers(&embedding, m)?),
            None => None,
        };
        if entries.insert(id.clone(), VerifyEntry { embedding, ers }).is_some() {
            bail!("duplicate item id `{id}` in {}", args.embeddings.display());
        }
    }
    let lookup = |id: &str| {
        entries
            .get(id)
            .ok_or_else(|| anyhow!("pair protocol references unknown item `{id}`"))
    };

    let mut accepted_by_kind = [0usize; 2]; // [impostor, genuine]
    let mut total_by_kind = [0usize; 2];
    let mut rows: Vec<(String, String, bool, f64, bool)> = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let a = lookup(&pair.id_a)?;
        let b = lookup(&pair.id_b)?;
        let similarity = a.embedding.cosine_similarity(&b.embedding)?;
        let accepted = match (a.ers, b.ers) {
            (Some(ers_a), Some(ers_b)) => {
                verify_with_ers(&a.embedding, &b.embedding, ers_a, ers_b, &cfg)?
            }
            _ => verify(&a.embedding, &b.embedding, &cfg)?,
        };
        let kind = pair.genuine as usize;
        total_by_kind[kind] += 1;
        accepted_by_kind[kind] += accepted as usize;
        rows.push((pair.id_a.clone(), pair.id_b.clone(), pair.genuine, similarity, accepted));
    }

    if let Some(out) = &args.out {
        write_decisions(out, &rows)?;
    }

    let gate = match model {
        Some(_) => format!(", gate {}", cfg.gamma()),
        None => String::new(),
    };
    println!(
        "verified {} pairs at threshold {}{gate}",
        pairs.len(),
        cfg.tau()
    );
    println!(
        "genuine accepted: {}/{} (FRR {})",
        accepted_by_kind[1],
        total_by_kind[1],
        rate(total_by_kind[1] - accepted_by_kind[1], total_by_kind[1])
    );
    println!(
        "impostor accepted: {}/{} (FAR {})",
        accepted_by_kind[0],
        total_by_kind[0],
        rate(accepted_by_kind[0], total_by_kind[0])
    );
    Ok(RunStatus::Clean)
}

fn write_decisions(path: &Path, rows: &[(String, String, bool, f64, bool)]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["id_a", "id_b", "genuine", "similarity", "accepted"])?;
    for (id_a, id_b, genuine, similarity, accepted) in rows {
        writer.write_record([
            id_a.as_str(),
            id_b.as_str(),
            if *genuine { "1" } else { "0" },
            &similarity.to_string(),
            if *accepted { "1" } else { "0" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct SearchArgs {
    /// Embeddings container of enrolled gallery entries.
    #[arg(long, value_name = "FILE")]
    gallery: PathBuf,

    /// Embeddings container of probe queries.
    #[arg(long, value_name = "FILE")]
    probes: PathBuf,

    /// Centroid model; enables the recognizability gate.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,

    /// Similarity acceptance threshold, in [-1, 1].
    #[arg(long, value_parser = parse_tau)]
    tau: f64,

    /// Recognizability gate, in [0, 1]; needs --model. Defaults to 0.6.
    #[arg(long, value_parser = parse_gamma, requires = "model")]
    gamma: Option<f64>,

    /// Also drop gallery entries below the gate from the candidate set.
    #[arg(long, requires = "model")]
    gate_gallery: bool,

    /// Write per-probe outcomes
    /// (probe_id,matched,match_index,match_id,best_similarity).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn run_search(args: &SearchArgs) -> anyhow::Result<RunStatus> {
    let gallery_records = read_embeddings(&args.gallery).context("reading gallery")?;
    let probe_records = read_embeddings(&args.probes).context("reading probes")?;
    let model = load_model(&args.model)?;
    let cfg = decision_config(args.tau, args.gamma)?.with_gallery_gating(args.gate_gallery);

    let gallery: Vec<Embedding> = gallery_records.iter().map(|(_, e)| e.clone()).collect();
    let gallery_ers: Option<Vec<ErsValue>> = match &model {
        Some(m) => Some(score_all(&gallery, m)?),
        None => None,
    };

    let mut matched_count = 0usize;
    let mut rows: Vec<(String, bool, usize, String, f64)> =
        Vec::with_capacity(probe_records.len());
    for (probe_id, probe) in &probe_records {
        let outcome = match &model {
            Some(m) => identify_with_ers(
                probe,
                compute_ers(probe, m)?,
                &gallery,
                gallery_ers.as_deref(),
                &cfg,
            )?,
            None => identify(probe, &gallery, &cfg)?,
        };
        matched_count += outcome.matched as usize;
        // Index 0 is the conventional no-match marker; real entries are
        // numbered from 1 in gallery file order.
        let match_index = outcome.gallery_index.unwrap_or(0);
        let match_id = outcome
            .gallery_index
            .map(|i| gallery_records[i - 1].0.clone())
            .unwrap_or_default();
        rows.push((
            probe_id.clone(),
            outcome.matched,
            match_index,
            match_id,
            outcome.best_similarity,
        ));
    }

    if let Some(out) = &args.out {
        write_outcomes(out, &rows)?;
    }

    println!(
        "searched {} probes against {} gallery entries: {} matched",
        probe_records.len(),
        gallery.len(),
        matched_count
    );
    Ok(RunStatus::Clean)
}

fn score_all(embeddings: &[Embedding], model: &UiModel) -> erskit::Result<Vec<ErsValue>> {
    embeddings.iter().map(|e| compute_ers(e, model)).collect()
}

fn write_outcomes(path: &Path, rows: &[(String, bool, usize, String, f64)]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["probe_id", "matched", "match_index", "match_id", "best_similarity"])?;
    for (probe_id, matched, match_index, match_id, best) in rows {
        writer.write_record([
            probe_id.as_str(),
            if *matched { "1" } else { "0" },
            &match_index.to_string(),
            match_id.as_str(),
            &best.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
