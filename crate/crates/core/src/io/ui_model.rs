//! Text serialization for the unrecognizable-identity centroid model.
//!
//! The format is line-oriented so models diff cleanly under version control:
//!
//! ```text
//! ersk-ui-model v1
//! dim=512
//! linkage=average
//! threshold=1
//! source_cluster_size=8231
//! source_tag=hac linkage=average threshold=1 corpus_size=10000 clusters=45
//! centroid=0.0125… -0.0342… …
//! ```
//!
//! Centroid components use the shortest decimal form that round-trips
//! exactly, so write → read → write reproduces the file byte for byte.

use std::io::Write as _;
use std::path::Path;

use crate::cluster::{ClusterParams, UiModel};
use crate::embedding::Embedding;
use crate::{Error, Result};

const HEADER: &str = "ersk-ui-model v1";

pub fn write_ui_model(path: &Path, model: &UiModel) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&format!("dim={}\n", model.centroid.dim()));
    out.push_str(&format!("linkage={}\n", model.params.linkage));
    out.push_str(&format!("threshold={}\n", model.params.threshold));
    out.push_str(&format!(
        "source_cluster_size={}\n",
        model.source_cluster_size
    ));
    out.push_str(&format!("source_tag={}\n", model.source_tag));
    out.push_str("centroid=");
    for (i, v) in model.centroid.values().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(display.clone(), e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(display, e))
}

pub fn read_ui_model(path: &Path) -> Result<UiModel> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut lines = text.lines().enumerate();

    match lines.next() {
        Some((_, line)) if line == HEADER => {}
        Some((_, line)) => {
            return Err(Error::malformed(
                display,
                1,
                format!("expected `{HEADER}`, found `{line}`"),
            ))
        }
        None => return Err(Error::malformed(display, 1, "empty file")),
    }

    let mut dim: Option<usize> = None;
    let mut linkage = None;
    let mut threshold = None;
    let mut source_cluster_size = None;
    let mut source_tag = None;
    let mut centroid: Option<Vec<f64>> = None;

    for (idx, line) in lines {
        let line_no = idx as u64 + 1;
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::malformed(display.clone(), line_no, "expected key=value line")
        })?;
        let bad = |what: &str| Error::malformed(display.clone(), line_no, format!("bad {what} `{value}`"));
        match key {
            "dim" => dim = Some(value.parse().map_err(|_| bad("dim"))?),
            "linkage" => linkage = Some(value.parse().map_err(|_| bad("linkage"))?),
            "threshold" => threshold = Some(value.parse().map_err(|_| bad("threshold"))?),
            "source_cluster_size" => {
                source_cluster_size = Some(value.parse().map_err(|_| bad("source_cluster_size"))?)
            }
            "source_tag" => source_tag = Some(value.to_string()),
            "centroid" => {
                let mut values = Vec::new();
                for piece in value.split(' ') {
                    values.push(piece.parse().map_err(|_| {
                        Error::malformed(
                            display.clone(),
                            line_no,
                            format!("bad centroid component `{piece}`"),
                        )
                    })?);
                }
                centroid = Some(values);
            }
            other => {
                return Err(Error::malformed(
                    display,
                    line_no,
                    format!("unknown key `{other}`"),
                ))
            }
        }
    }

    let missing = |what: &str| Error::malformed(display.clone(), 0, format!("missing `{what}` line"));
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let values = centroid.ok_or_else(|| missing("centroid"))?;
    if values.len() != dim {
        return Err(Error::malformed(
            display,
            0,
            format!("dim says {dim} but centroid has {} components", values.len()),
        ));
    }
    let centroid = Embedding::new(values)
        .map_err(|e| Error::malformed(display.clone(), 0, format!("invalid centroid: {e}")))?;

    Ok(UiModel {
        centroid,
        source_cluster_size: source_cluster_size.ok_or_else(|| missing("source_cluster_size"))?,
        params: ClusterParams {
            linkage: linkage.ok_or_else(|| missing("linkage"))?,
            threshold: threshold.ok_or_else(|| missing("threshold"))?,
        },
        source_tag: source_tag.ok_or_else(|| missing("source_tag"))?,
    })
}

// ---------------------------------------------------------------------------
