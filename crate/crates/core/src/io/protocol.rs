//! CSV protocol files: labels, comparison pairs, template membership,
//! search manifests, generator ground truth, and score tables.
//!
//! Every file carries an exact header row; readers reject anything whose
//! header doesn't match, so silently mis-mapped columns can't happen.

use std::path::Path;

use crate::ers::ErsValue;
use crate::metrics::{ProtocolPair, TemplateSpec};
use crate::synthetic::GroundTruthRecord;
use crate::{Error, Result};

/// One row of a labels file, tying an item to its subject and medium.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelRecord {
    pub item_id: String,
    pub subject_id: String,
    /// Empty column reads as `None`.
    pub media_id: Option<String>,
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::malformed(path, line, e.to_string())
}

fn open_reader(path: &Path, expected_header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                // Surface missing files as I/O errors, not format errors.
                Error::io(display.clone(), std::io::Error::other(e.to_string()))
            }
            _ => csv_error(&display, e),
        })?;
    let headers = reader.headers().map_err(|e| csv_error(&display, e))?;
    let actual: Vec<&str> = headers.iter().collect();
    if actual != expected_header {
        return Err(Error::malformed(
            display,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected_header.join(","),
                actual.join(",")
            ),
        ));
    }
    Ok(reader)
}

fn make_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(&path.display().to_string(), e))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// labels.csv: item_id,subject_id,media_id
// ---------------------------------------------------------------------------

pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["item_id", "subject_id", "media_id"])?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        labels.push(LabelRecord {
            item_id: record[0].to_string(),
            subject_id: record[1].to_string(),
            media_id: if record[2].is_empty() {
                None
            } else {
                Some(record[2].to_string())
            },
        });
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[LabelRecord]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["item_id", "subject_id", "media_id"])
        .map_err(|e| csv_error(&display, e))?;
    for label in labels {
        writer
            .write_record([
                label.item_id.as_str(),
                label.subject_id.as_str(),
                label.media_id.as_deref().unwrap_or(""),
            ])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// pairs.csv: id_a,id_b,genuine
// ---------------------------------------------------------------------------

pub fn read_pairs(path: &Path) -> Result<Vec<ProtocolPair>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["id_a", "id_b", "genuine"])?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let genuine = match &record[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::malformed(
                    display,
                    record_line(&record),
                    format!("genuine flag must be 0 or 1, found `{other}`"),
                ))
            }
        };
        pairs.push(ProtocolPair {
            id_a: record[0].to_string(),
            id_b: record[1].to_string(),
            genuine,
        });
    }
    Ok(pairs)
}

pub fn write_pairs(path: &Path, pairs: &[ProtocolPair]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["id_a", "id_b", "genuine"])
        .map_err(|e| csv_error(&display, e))?;
    for pair in pairs {
        writer
            .write_record([
                pair.id_a.as_str(),
                pair.id_b.as_str(),
                if pair.genuine { "1" } else { "0" },
            ])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// templates.csv: template_id,subject_id,item_id (one row per member)
// ---------------------------------------------------------------------------

pub fn read_templates(path: &Path) -> Result<Vec<TemplateSpec>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["template_id", "subject_id", "item_id"])?;
    let mut specs: Vec<TemplateSpec> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let (template_id, subject_id, item_id) =
            (&record[0], &record[1], record[2].to_string());
        match index.get(template_id) {
            Some(&idx) => {
                if specs[idx].subject_id != subject_id {
                    return Err(Error::malformed(
                        display,
                        record_line(&record),
                        format!(
                            "template `{template_id}` claims subject `{subject_id}` \
                             but earlier rows said `{}`",
                            specs[idx].subject_id
                        ),
                    ));
                }
                specs[idx].item_ids.push(item_id);
            }
            None => {
                index.insert(template_id.to_string(), specs.len());
                specs.push(TemplateSpec {
                    template_id: template_id.to_string(),
                    subject_id: subject_id.to_string(),
                    item_ids: vec![item_id],
                });
            }
        }
    }
    Ok(specs)
}

pub fn write_templates(path: &Path, specs: &[TemplateSpec]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["template_id", "subject_id", "item_id"])
        .map_err(|e| csv_error(&display, e))?;
    for spec in specs {
        for item_id in &spec.item_ids {
            writer
                .write_record([
                    spec.template_id.as_str(),
                    spec.subject_id.as_str(),
                    item_id.as_str(),
                ])
                .map_err(|e| csv_error(&display, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// manifest.csv: id (gallery / probe listings)
// ---------------------------------------------------------------------------

pub fn read_manifest(path: &Path) -> Result<Vec<String>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["id"])?;
    let mut ids = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        ids.push(record[0].to_string());
    }
    Ok(ids)
}

pub fn write_manifest(path: &Path, ids: &[String]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["id"])
        .map_err(|e| csv_error(&display, e))?;
    for id in ids {
        writer
            .write_record([id.as_str()])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// groundtruth.csv: item_id,subject_id,t,true_ers
// ---------------------------------------------------------------------------

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["item_id", "subject_id", "t", "true_ers"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.parse().map_err(|_| {
                Error::malformed(
                    display.clone(),
                    record_line(&record),
                    format!("bad {name} value `{field}`"),
                )
            })
        };
        out.push(GroundTruthRecord {
            item_id: record[0].to_string(),
            subject_id: record[1].to_string(),
            t: parse(&record[2], "t")?,
            true_ers: parse(&record[3], "true_ers")?,
        });
    }
    Ok(out)
}

pub fn write_ground_truth(path: &Path, records: &[GroundTruthRecord]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["item_id", "subject_id", "t", "true_ers"])
        .map_err(|e| csv_error(&display, e))?;
    for r in records {
        writer
            .write_record([
                r.item_id.as_str(),
                r.subject_id.as_str(),
                &r.t.to_string(),
                &r.true_ers.to_string(),
            ])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// ers.csv: item_id,ers,raw
// ---------------------------------------------------------------------------

pub fn read_ers_table(path: &Path) -> Result<Vec<(String, ErsValue)>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["item_id", "ers", "raw"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let line = record_line(&record);
        let raw: f64 = record[2].parse().map_err(|_| {
            Error::malformed(display.clone(), line, format!("bad raw value `{}`", &record[2]))
        })?;
        let capped: f64 = record[1].parse().map_err(|_| {
            Error::malformed(display.clone(), line, format!("bad ers value `{}`", &record[1]))
        })?;
        let value = ErsValue::from_raw(raw);
        if (value.capped() - capped).abs() > 1e-9 {
            return Err(Error::malformed(
                display,
                line,
                format!(
                    "ers column {capped} does not match min(raw, 1) = {}",
                    value.capped()
                ),
            ));
        }
        out.push((record[0].to_string(), value));
    }
    Ok(out)
}

pub fn write_ers_table(path: &Path, rows: &[(String, ErsValue)]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["item_id", "ers", "raw"])
        .map_err(|e| csv_error(&display, e))?;
    for (id, value) in rows {
        writer
            .write_record([
                id.as_str(),
                &value.capped().to_string(),
                &value.raw().to_string(),
            ])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// clusters.csv: cluster,item_id (one row per member, clusters numbered from 1)
// ---------------------------------------------------------------------------

pub fn read_cluster_assignments(path: &Path) -> Result<Vec<Vec<String>>> {
    let display = path.display().to_string();
    let mut reader = open_reader(path, &["cluster", "item_id"])?;
    let mut clusters: Vec<Vec<String>> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let (cluster, item_id) = (&record[0], record[1].to_string());
        if !seen.insert(item_id.clone()) {
            return Err(Error::malformed(
                display,
                record_line(&record),
                format!("item `{item_id}` is assigned to more than one cluster"),
            ));
        }
        match index.get(cluster) {
            Some(&idx) => clusters[idx].push(item_id),
            None => {
                index.insert(cluster.to_string(), clusters.len());
                clusters.push(vec![item_id]);
            }
        }
    }
    Ok(clusters)
}

pub fn write_cluster_assignments(path: &Path, clusters: &[Vec<String>]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["cluster", "item_id"])
        .map_err(|e| csv_error(&display, e))?;
    for (rank, members) in clusters.iter().enumerate() {
        let label = (rank + 1).to_string();
        for item_id in members {
            writer
                .write_record([label.as_str(), item_id.as_str()])
                .map_err(|e| csv_error(&display, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// histogram.csv: rank,size (cluster sizes in descending order)
// ---------------------------------------------------------------------------

pub fn write_size_histogram(path: &Path, sizes: &[usize]) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = make_writer(path)?;
    writer
        .write_record(["rank", "size"])
        .map_err(|e| csv_error(&display, e))?;
    for (rank, size) in sizes.iter().enumerate() {
        writer
            .write_record([(rank + 1).to_string(), size.to_string()])
            .map_err(|e| csv_error(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
