//! `erskit cluster` and `erskit ui-centroid` — discover the
//! unrecognizable-identity cluster and turn it into a centroid model.

use std::path::{Path, PathBuf};

use anyhow::Context;
use erskit::cluster::{find_ui_cluster, hac_cluster};
use erskit::io::embedding_file::read_embeddings;
use erskit::io::protocol::{
    read_cluster_assignments, write_cluster_assignments, write_size_histogram,
};
use erskit::io::ui_model::write_ui_model;
use erskit::{ClusterParams, ClusterResult, Linkage, DEFAULT_THRESHOLD};

use super::{to_labeled, LinkageArg, RunStatus, Snapshot};

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct ClusterArgs {
    /// Embeddings container to cluster.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Merge cutoff on chordal distance, in (0, 2].
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,

    /// How inter-cluster distance is derived from member distances.
    #[arg(long, value_enum, default_value = "average")]
    linkage: LinkageArg,

    /// Directory for clusters.csv, histogram.csv and run.config.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

pub fn run_cluster(args: &ClusterArgs) -> anyhow::Result<RunStatus> {
    let corpus = to_labeled(read_embeddings(&args.embeddings)?);
    let params = ClusterParams {
        linkage: args.linkage.into(),
        threshold: args.threshold,
    };
    let result = hac_cluster(&corpus, params)?;

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_cluster_assignments(&args.out.join("clusters.csv"), &result.clusters)?;
    write_size_histogram(&args.out.join("histogram.csv"), &result.sizes_descending)?;
    Snapshot::new("cluster")
        .push_path("embeddings", &args.embeddings)
        .push("linkage", params.linkage)
        .push("threshold", params.threshold)
        .write(&args.out)?;

    println!(
        "clustered {} items into {} clusters (largest {}) -> {}",
        corpus.len(),
        result.clusters.len(),
        result.sizes_descending.first().copied().unwrap_or(0),
        args.out.display()
    );
    Ok(RunStatus::Clean)
}

// ---------------------------------------------------------------------------
// ui-centroid
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct UiCentroidArgs {
    /// Output directory of a previous `cluster` run (clusters.csv plus the
    /// run.config recording its parameters).
    #[arg(long, value_name = "DIR")]
    clusters: PathBuf,

    /// The embeddings the clusters were computed from.
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,

    /// Provenance note stored in the model file; defaults to a summary of
    /// the clustering run.
    #[arg(long)]
    tag: Option<String>,

    /// Path for the centroid model file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

pub fn run_ui_centroid(args: &UiCentroidArgs) -> anyhow::Result<RunStatus> {
    let mut clusters = read_cluster_assignments(&args.clusters.join("clusters.csv"))?;
    let params = params_from_run_config(&args.clusters.join("run.config"))?;

    // Restore the canonical ordering the clustering command wrote: member
    // ids ascending within a cluster, clusters by size descending with ties
    // broken by smallest member id. The centroid comes from the first
    // (largest) cluster, so ordering is not cosmetic here.
    for members in &mut clusters {
        members.sort();
    }
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let sizes_descending = clusters.iter().map(Vec::len).collect();
    let result = ClusterResult {
        clusters,
        sizes_descending,
        params,
    };

    let corpus = to_labeled(read_embeddings(&args.embeddings)?);
    let mut model = find_ui_cluster(&result, &corpus)?;
    if let Some(tag) = &args.tag {
        model.source_tag = tag.clone();
    }
    write_ui_model(&args.out, &model)?;

    println!(
        "centroid of the largest cluster ({} members, dim {}) -> {}",
        model.source_cluster_size,
        model.centroid.dim(),
        args.out.display()
    );
    Ok(RunStatus::Clean)
}

fn params_from_run_config(path: &Path) -> anyhow::Result<ClusterParams> {
    let entries = erskit::io::read_run_config(path)?;
    let find = |key: &str| -> anyhow::Result<&str> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .with_context(|| format!("{} lacks a `{key}` entry", path.display()))
    };
    let linkage: Linkage = find("linkage")?.parse()?;
    let threshold: f64 = find("threshold")?
        .parse()
        .with_context(|| format!("bad threshold in {}", path.display()))?;
    Ok(ClusterParams { linkage, threshold })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_restores_cluster_params() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.config");
        std::fs::write(&path, "command=cluster\nlinkage=complete\nthreshold=0.75\n").unwrap();
        let params = params_from_run_config(&path).unwrap();
        assert_eq!(params.linkage, Linkage::Complete);
        assert_eq!(params.threshold, 0.75);

        std::fs::write(&path, "command=cluster\nthreshold=0.75\n").unwrap();
        let err = params_from_run_config(&path).unwrap_err();
        assert!(format!("{err:#}").contains("linkage"));
    }
}
