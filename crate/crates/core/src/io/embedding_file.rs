//! The embeddings container: item ids plus float32 unit vectors.
//!
//! Two encodings share the `ERSK1` magic and carry identical data:
//!
//! Binary (compact, the default):
//! ```text
//! bytes 0..5   magic "ERSK1"
//! byte  5      encoding tag 'B'
//! bytes 6..10  dimension, u32 little-endian
//! bytes 10..18 record count, u64 little-endian
//! per record   id length (u16 LE), id bytes (UTF-8), dim * f32 LE
//! ```
//!
//! Text (diffable, imports from anywhere):
//! ```text
//! ERSK1 text <dim> <count>
//! <id>,<c1>,...,<cdim>      one line per record
//! ```
//!
//! Components are float32 in both encodings — text lines print the float32
//! value with 10 significant digits, which round-trips it exactly — so a
//! corpus converted between encodings compares bit-identical. Reading
//! re-checks the unit-norm invariant; float32 quantization of a unit
//! vector stays well inside the constructor's tolerance band, so values
//! pass through unchanged.

use std::io::Write;
use std::path::Path;

use crate::embedding::{Embedding, LabeledEmbedding};
use crate::io::protocol::LabelRecord;
use crate::{Error, Result};

const MAGIC: &[u8; 5] = b"ERSK1";

/// Which encoding to write; reading sniffs the header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingEncoding {
    Binary,
    Text,
}

/// Write (id, embedding) records. All embeddings must share one dimension
/// and ids must fit in 65535 bytes; an empty set is rejected because the
/// header could not record a dimension.
pub fn write_embeddings(
    path: &Path,
    records: &[(String, Embedding)],
    encoding: EmbeddingEncoding,
) -> Result<()> {
    let first = records.first().ok_or(Error::Empty("embedding records"))?;
    let dim = first.1.dim();
    for (id, embedding) in records {
        if embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: embedding.dim(),
            });
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "item id `{}...` exceeds 65535 bytes",
                &id[..32.min(id.len())]
            )));
        }
    }

    let display = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(display.clone(), e);

    match encoding {
        EmbeddingEncoding::Binary => {
            out.write_all(MAGIC).map_err(io_err)?;
            out.write_all(b"B").map_err(io_err)?;
            out.write_all(&(dim as u32).to_le_bytes()).map_err(io_err)?;
            out.write_all(&(records.len() as u64).to_le_bytes())
                .map_err(io_err)?;
            for (id, embedding) in records {
                out.write_all(&(id.len() as u16).to_le_bytes())
                    .map_err(io_err)?;
                out.write_all(id.as_bytes()).map_err(io_err)?;
                for &v in embedding.values() {
                    out.write_all(&(v as f32).to_le_bytes()).map_err(io_err)?;
                }
            }
        }
        EmbeddingEncoding::Text => {
            writeln!(out, "ERSK1 text {} {}", dim, records.len()).map_err(io_err)?;
            for (id, embedding) in records {
                if id.contains(',') || id.contains('\n') || id.contains('\r') {
                    return Err(Error::InvalidParameter(format!(
                        "item id `{id}` contains a separator; not representable in text encoding"
                    )));
                }
                let mut line = String::with_capacity(id.len() + embedding.dim() * 18);
                line.push_str(id);
                for &v in embedding.values() {
                    line.push(',');
                    // 10 significant digits: exact for float32.
                    line.push_str(&format!("{:.9e}", v as f32 as f64));
                }
                writeln!(out, "{line}").map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

/// Read an embeddings file of either encoding (sniffed from the header).
pub fn read_embeddings(path: &Path) -> Result<Vec<(String, Embedding)>> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(display.clone(), e))?;
    if bytes.len() < 6 || &bytes[..5] != MAGIC {
        return Err(Error::malformed(display, 1, "missing ERSK1 magic"));
    }
    match bytes[5] {
        b'B' => read_binary(&display, &bytes[6..]),
        b' ' => read_text(&display, &bytes),
        other => Err(Error::malformed(
            display,
            1,
            format!("unknown encoding tag 0x{other:02x}"),
        )),
    }
}

fn read_binary(display: &str, body: &[u8]) -> Result<Vec<(String, Embedding)>> {
    // "Lines" in binary errors are 1-based record ordinals.
    let truncated = |record: u64| Error::malformed(display, record, "unexpected end of file");
    if body.len() < 12 {
        return Err(truncated(0));
    }
    let dim = u32::from_le_bytes(body[0..4].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(body[4..12].try_into().unwrap());
    if dim == 0 {
        return Err(Error::malformed(display, 0, "dimension is zero"));
    }

    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut offset = 12usize;
    for record in 1..=count {
        let id_len =
            u16::from_le_bytes(body.get(offset..offset + 2).ok_or(truncated(record))?.try_into().unwrap())
                as usize;
        offset += 2;
        let id_bytes = body.get(offset..offset + id_len).ok_or(truncated(record))?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| Error::malformed(display, record, "item id is not valid UTF-8"))?
            .to_string();
        offset += id_len;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let raw = body.get(offset..offset + 4).ok_or(truncated(record))?;
            values.push(f32::from_le_bytes(raw.try_into().unwrap()) as f64);
            offset += 4;
        }
        let embedding = Embedding::new(values).map_err(|e| {
            Error::malformed(display, record, format!("record `{id}`: {e}"))
        })?;
        records.push((id, embedding));
    }
    if offset != body.len() {
        return Err(Error::malformed(
            display,
            count,
            format!("{} trailing bytes after the last record", body.len() - offset),
        ));
    }
    Ok(records)
}

fn read_text(display: &str, bytes: &[u8]) -> Result<Vec<(String, Embedding)>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::malformed(display, 1, "text encoding is not valid UTF-8"))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 || fields[0] != "ERSK1" || fields[1] != "text" {
        return Err(Error::malformed(
            display,
            1,
            "expected header `ERSK1 text <dim> <count>`",
        ));
    }
    let dim: usize = fields[2]
        .parse()
        .map_err(|_| Error::malformed(display, 1, "bad dimension in header"))?;
    let count: usize = fields[3]
        .parse()
        .map_err(|_| Error::malformed(display, 1, "bad record count in header"))?;
    if dim == 0 {
        return Err(Error::malformed(display, 1, "dimension is zero"));
    }

    let mut records = Vec::with_capacity(count);
    let mut line_no = 1u64;
    for line in lines {
        line_no += 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or_default().to_string();
        let mut values = Vec::with_capacity(dim);
        for part in parts {
            // Components are stored at f32 precision in both encodings, so
            // parse at that precision and widen; this keeps text and binary
            // readers bit-identical for the same logical file.
            let v: f32 = part.trim().parse().map_err(|_| {
                Error::malformed(display, line_no, format!("bad component `{part}`"))
            })?;
            values.push(v as f64);
        }
        if values.len() != dim {
            return Err(Error::malformed(
                display,
                line_no,
                format!("expected {dim} components, found {}", values.len()),
            ));
        }
        let embedding = Embedding::new(values).map_err(|e| {
            Error::malformed(display, line_no, format!("record `{id}`: {e}"))
        })?;
        records.push((id, embedding));
    }
    if records.len() != count {
        return Err(Error::malformed(
            display,
            line_no,
            format!("header promised {count} records, found {}", records.len()),
        ));
    }
    Ok(records)
}

/// Load a corpus: embeddings joined with an optional labels file.
///
/// Label rows must reference existing item ids (typos fail loudly); items
/// missing from the labels file keep an empty subject. Without a labels
/// file every item gets an empty subject and no media id, which is enough
/// for clustering and scoring but not for protocol evaluation.
pub fn read_dataset(
    embeddings_path: &Path,
    labels_path: Option<&Path>,
) -> Result<Vec<LabeledEmbedding>> {
    let records = read_embeddings(embeddings_path)?;
    let mut index: std::collections::HashMap<&str, usize> =
        std::collections::HashMap::with_capacity(records.len());
    for (idx, (id, _)) in records.iter().enumerate() {
        if index.insert(id.as_str(), idx).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut subjects: Vec<String> = vec![String::new(); records.len()];
    let mut media: Vec<Option<String>> = vec![None; records.len()];
    if let Some(labels_path) = labels_path {
        for label in crate::io::protocol::read_labels(labels_path)? {
            let LabelRecord {
                item_id,
                subject_id,
                media_id,
            } = label;
            match index.get(item_id.as_str()) {
                Some(&idx) => {
                    subjects[idx] = subject_id;
                    media[idx] = media_id;
                }
                None => return Err(Error::UnresolvableId(item_id)),
            }
        }
    }

    Ok(records
        .into_iter()
        .zip(subjects)
        .zip(media)
        .map(|(((item_id, embedding), subject_id), media_id)| LabeledEmbedding {
            item_id,
            subject_id,
            media_id,
            embedding,
        })
        .collect())
}

// ---------------------------------------------------------------------------
