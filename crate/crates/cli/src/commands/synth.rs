//! `erskit synth` — write a complete synthetic benchmark directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use erskit::io::embedding_file::write_embeddings;
use erskit::io::protocol::{
    write_ground_truth, write_labels, write_manifest, write_pairs, write_templates, LabelRecord,
};
use erskit::synthetic::generate_benchmark;
use erskit::{Embedding, GeneratorConfig};

use super::{EncodingArg, RunStatus};

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Generator configuration as key=value lines (same keys as the
    /// run.config this command writes); omitted keys keep their defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the seed from --config or the default.
    #[arg(long)]
    seed: Option<u64>,

    /// Encoding of the embeddings container.
    #[arg(long, value_enum, default_value = "binary")]
    encoding: EncodingArg,

    /// Directory to write the benchmark into (created if missing).
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

pub fn run(args: &SynthArgs) -> anyhow::Result<RunStatus> {
    let mut config = GeneratorConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let bench = generate_benchmark(&config)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = args.out_dir.as_path();

    let records: Vec<(String, Embedding)> = bench
        .items
        .iter()
        .map(|item| (item.item_id.clone(), item.embedding.clone()))
        .collect();
    write_embeddings(&dir.join("embeddings.ersk"), &records, args.encoding.into())?;

    let labels: Vec<LabelRecord> = bench
        .items
        .iter()
        .map(|item| LabelRecord {
            item_id: item.item_id.clone(),
            subject_id: item.subject_id.clone(),
            media_id: item.media_id.clone(),
        })
        .collect();
    write_labels(&dir.join("labels.csv"), &labels)?;

    write_pairs(&dir.join("pairs.csv"), &bench.pairs)?;
    write_templates(&dir.join("templates.csv"), &bench.templates)?;
    write_pairs(&dir.join("template-pairs.csv"), &bench.template_pairs)?;
    write_manifest(&dir.join("gallery.csv"), &bench.gallery_ids)?;
    write_manifest(&dir.join("probes.csv"), &bench.probe_ids)?;
    write_ground_truth(&dir.join("ground-truth.csv"), &bench.ground_truth)?;
    // The snapshot is the effective configuration and parses back via
    // --config, so any benchmark directory can reproduce itself.
    erskit::io::write_run_config(&dir.join("run.config"), &config_entries(&config))?;

    println!(
        "generated {} items ({} subjects x {}, {} unrecognizable), \
         {} pairs, {} templates, {} template pairs -> {}",
        bench.items.len(),
        config.subjects,
        config.items_per_subject,
        config.ui_items,
        bench.pairs.len(),
        bench.templates.len(),
        bench.template_pairs.len(),
        dir.display()
    );
    Ok(RunStatus::Clean)
}

// ---------------------------------------------------------------------------
// Configuration file round trip
// ---------------------------------------------------------------------------

// `config_entries` and `apply_entry` must cover exactly the same keys:
// together they make the emitted run.config a valid --config input.

fn config_entries(config: &GeneratorConfig) -> Vec<(String, String)> {
    [
        ("dim", config.dim.to_string()),
        ("subjects", config.subjects.to_string()),
        ("items_per_subject", config.items_per_subject.to_string()),
        ("ui_items", config.ui_items.to_string()),
        ("degraded_fraction", config.degraded_fraction.to_string()),
        ("t_min", config.t_min.to_string()),
        ("t_max", config.t_max.to_string()),
        ("kappa_identity", config.kappa_identity.to_string()),
        ("kappa_ui", config.kappa_ui.to_string()),
        ("degradation_noise", config.degradation_noise.to_string()),
        ("separation", config.separation.to_string()),
        ("impostor_ratio", config.impostor_ratio.to_string()),
        ("seed", config.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn apply_config_file(config: &mut GeneratorConfig, path: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading generator config {}", path.display()))?;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let location = || format!("{}:{}", path.display(), idx + 1);
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}: expected key=value, found `{line}`", location()))?;
        apply_entry(config, key.trim(), value.trim()).with_context(location)?;
    }
    Ok(())
}

fn apply_entry(config: &mut GeneratorConfig, key: &str, value: &str) -> anyhow::Result<()> {
    fn parsed<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
        value
            .parse()
            .map_err(|_| anyhow::anyhow!("bad value `{value}` for key `{key}`"))
    }
    match key {
        "dim" => config.dim = parsed(key, value)?,
        "subjects" => config.subjects = parsed(key, value)?,
        "items_per_subject" => config.items_per_subject = parsed(key, value)?,
        "ui_items" => config.ui_items = parsed(key, value)?,
        "degraded_fraction" => config.degraded_fraction = parsed(key, value)?,
        "t_min" => config.t_min = parsed(key, value)?,
        "t_max" => config.t_max = parsed(key, value)?,
        "kappa_identity" => config.kappa_identity = parsed(key, value)?,
        "kappa_ui" => config.kappa_ui = parsed(key, value)?,
        "degradation_noise" => config.degradation_noise = parsed(key, value)?,
        "separation" => config.separation = parsed(key, value)?,
        "impostor_ratio" => config.impostor_ratio = parsed(key, value)?,
        "seed" => config.seed = parsed(key, value)?,
        other => bail!("unknown generator key `{other}`"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emitted_config_parses_back_to_the_same_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.config");
        let original = GeneratorConfig {
            subjects: 7,
            degraded_fraction: 0.25,
            seed: 99,
            ..GeneratorConfig::default()
        };

        let entries = config_entries(&original);
        erskit::io::write_run_config(&path, &entries).unwrap();

        let mut restored = GeneratorConfig::default();
        apply_config_file(&mut restored, &path).unwrap();
        assert_eq!(restored, original);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.config");
        std::fs::write(&path, "dim=8\nwidgets=3\n").unwrap();
        let mut config = GeneratorConfig::default();
        let err = apply_config_file(&mut config, &path).unwrap_err();
        let rendered = format!("{err:#}");
        assert!(rendered.contains("bad.config:2"), "{rendered}");
        assert!(rendered.contains("widgets"), "{rendered}");
    }
}
