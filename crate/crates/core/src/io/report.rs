//! Evaluation report output: a human-readable summary plus machine-readable
//! CSV tables for verification operating points, open-set search operating
//! points, and rank accuracy.

use std::io::Write as _;
use std::path::Path;

use crate::metrics::EvalReport;
use crate::{Error, Result};

/// Writes a plain-text summary of an evaluation run.
pub fn write_report_text(path: &Path, report: &EvalReport) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::new();
    out.push_str(&format!("pipeline: {}\n", report.pipeline));
    out.push_str(&format!(
        "comparisons: {} genuine, {} impostor\n",
        report.positives, report.negatives
    ));
    if !report.operating_points.is_empty() {
        out.push_str("verification:\n");
        for op in &report.operating_points {
            out.push_str(&format!(
                "  FAR target {:>10}: threshold {:.6}, achieved FAR {:.6}, TAR {:.6}, FRR {:.6}{}\n",
                op.far_target,
                op.threshold,
                op.achieved_far,
                op.tar(),
                op.frr,
                if op.unattainable { "  [unattainable]" } else { "" }
            ));
        }
    }
    if !report.identification_points.is_empty() {
        out.push_str("open-set search:\n");
        for ip in &report.identification_points {
            let fnir = ip
                .fnir
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "n/a".to_string());
            out.push_str(&format!(
                "  FPIR target {:>10}: threshold {:.6}, achieved FPIR {:.6}, FNIR {}{}\n",
                ip.fpir_target,
                ip.threshold,
                ip.achieved_fpir,
                fnir,
                if ip.unattainable { "  [unattainable]" } else { "" }
            ));
        }
    }
    if !report.rank_accuracy.is_empty() {
        out.push_str("rank accuracy:\n");
        for (k, acc) in &report.rank_accuracy {
            out.push_str(&format!("  rank-{k}: {acc:.6}\n"));
        }
    }

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(display.clone(), e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(display, e))
}

/// Writes verification operating points as CSV.
pub fn write_operating_points_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("far_target,threshold,achieved_far,frr,tar,unattainable\n");
    for op in &report.operating_points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            op.far_target,
            op.threshold,
            op.achieved_far,
            op.frr,
            op.tar(),
            if op.unattainable { 1 } else { 0 }
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(display, e))
}

/// Writes open-set identification operating points as CSV. A probe set with
/// no mated probes has no false-negative rate; the column is left empty.
pub fn write_identification_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("fpir_target,threshold,achieved_fpir,fnir,unattainable\n");
    for ip in &report.identification_points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            ip.fpir_target,
            ip.threshold,
            ip.achieved_fpir,
            ip.fnir.map(|v| v.to_string()).unwrap_or_default(),
            if ip.unattainable { 1 } else { 0 }
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(display, e))
}

/// Writes rank-K accuracy as CSV.
pub fn write_rank_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("k,accuracy\n");
    for (k, acc) in &report.rank_accuracy {
        out.push_str(&format!("{k},{acc}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{IdentificationPoint, OperatingPoint};

    fn sample_report() -> EvalReport {
        EvalReport {
            pipeline: "single".into(),
            positives: 10,
            negatives: 100,
            operating_points: vec![OperatingPoint {
                far_target: 0.01,
                threshold: 0.62,
                achieved_far: 0.01,
                frr: 0.2,
                unattainable: false,
            }],
            identification_points: vec![IdentificationPoint {
                fpir_target: 0.1,
                threshold: 0.55,
                achieved_fpir: 0.1,
                fnir: None,
                unattainable: true,
            }],
            rank_accuracy: vec![(1, 0.875)],
        }
    }

    #[test]
    fn text_report_mentions_every_section() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        write_report_text(&path, &sample_report()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("pipeline: single"));
        assert!(text.contains("10 genuine, 100 impostor"));
        assert!(text.contains("TAR 0.800000"));
        assert!(text.contains("FNIR n/a"));
        assert!(text.contains("[unattainable]"));
        assert!(text.contains("rank-1: 0.875000"));
    }

    #[test]
    fn csv_outputs_have_exact_headers() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();

        let ops = dir.path().join("ops.csv");
        write_operating_points_csv(&ops, &report).unwrap();
        let text = std::fs::read_to_string(&ops).unwrap();
        assert!(text.starts_with("far_target,threshold,achieved_far,frr,tar,unattainable\n"));
        assert!(text.contains("0.01,0.62,0.01,0.2,0.8,0"));

        let idents = dir.path().join("ident.csv");
        write_identification_csv(&idents, &report).unwrap();
        let text = std::fs::read_to_string(&idents).unwrap();
        assert!(text.starts_with("fpir_target,threshold,achieved_fpir,fnir,unattainable\n"));
        // Missing FNIR serializes as an empty column.
        assert!(text.contains("0.1,0.55,0.1,,1"));

        let ranks = dir.path().join("rank.csv");
        write_rank_csv(&ranks, &report).unwrap();
        assert_eq!(std::fs::read_to_string(&ranks).unwrap(), "k,accuracy\n1,0.875\n");
    }
}
