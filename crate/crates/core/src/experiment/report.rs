use std::fs;
use std::path::Path;

use super::RunArtifact;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    /// One row per algorithm.
    Csv,
    /// One row per (algorithm, metric).
    CsvLong,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "csv-long" | "csv_long" => Ok(ReportFormat::CsvLong),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::config(format!("unknown report format '{other}'"))),
        }
    }
}

/// Column name, header label, value.
fn columns(r: &MetricsReport) -> [(&'static str, &'static str, Option<f64>); 11] {
    [
        ("precision_at_k", "Precision@K", Some(r.precision_at_k)),
        ("recall_at_k", "Recall@K", Some(r.recall_at_k)),
        ("ndcg_at_k", "NDCG@K", Some(r.ndcg_at_k)),
        ("jain_index", "Jain", r.jain_index),
        (
            "demographic_parity",
            "Demographic Parity",
            r.demographic_parity,
        ),
        ("crecall", "CRecall", Some(r.crecall)),
        ("cprecision", "CPrecision", Some(r.cprecision)),
        ("fairness_score", "Fairness", r.fairness_score),
        ("bias_alpha", "Bias alpha", r.bias_alpha),
        ("bias_beta", "Bias beta", r.bias_beta),
        (
            "mean_list_entropy",
            "List entropy",
            Some(r.mean_list_entropy),
        ),
    ]
}

fn plain(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_error(e: csv::Error) -> Error {
    Error::config(format!("csv encoding failed: {e}"))
}

pub fn render_csv(artifact: &RunArtifact, long: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if long {
        w.write_record(["algorithm", "metric", "value"])
            .map_err(csv_error)?;
        for r in &artifact.reports {
            for (name, _, v) in columns(r) {
                w.write_record([r.algorithm.as_str(), name, &plain(v)])
                    .map_err(csv_error)?;
            }
        }
    } else {
        let mut header = vec!["algorithm"];
        if let Some(r) = artifact.reports.first() {
            header.extend(columns(r).iter().map(|c| c.0));
        }
        w.write_record(&header).map_err(csv_error)?;
        for r in &artifact.reports {
            let mut row = vec![r.algorithm.as_str().to_string()];
            row.extend(columns(r).iter().map(|c| plain(c.2)));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// A comparison table with one row per algorithm, four decimals, no styling.
pub fn render_markdown(artifact: &RunArtifact) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    let mut out = format!(
        "K = {}, seed = {}, dataset {}\n\n",
        artifact.config.k,
        artifact.config.seed,
        &artifact.dataset_digest[..12.min(artifact.dataset_digest.len())]
    );
    let Some(first) = artifact.reports.first() else {
        return out + "no algorithms were run\n";
    };
    let labels: Vec<&str> = columns(first).iter().map(|c| c.1).collect();
    out += &format!("| Algorithm | {} |\n", labels.join(" | "));
    out += &format!("|---|{}\n", "---|".repeat(labels.len()));
    for r in &artifact.reports {
        let cells: Vec<String> = columns(r).iter().map(|c| fmt(c.2)).collect();
        out += &format!("| {} | {} |\n", r.algorithm, cells.join(" | "));
    }
    if let Some(b) = &artifact.bias_reduction {
        let pct =
            |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.1}%", 100.0 * x));
        out += &format!(
            "\nBias reduction, FAIR-MATCH vs CF: popularity {}, demographic {}, group parity {}\n",
            pct(b.popularity),
            pct(b.demographic),
            pct(b.group_parity)
        );
    }
    out
}

pub fn render_report(artifact: &RunArtifact, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(artifact)? + "\n",
        ReportFormat::Csv => render_csv(artifact, false)?,
        ReportFormat::CsvLong => render_csv(artifact, true)?,
        ReportFormat::Markdown => render_markdown(artifact),
    })
}

pub fn emit_report(artifact: &RunArtifact, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(artifact, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentConfig, Timings};
    use crate::recommenders::Algorithm;

    fn artifact() -> RunArtifact {
        let row = |algorithm| MetricsReport {
            algorithm,
            k: 10,
            seed: 4,
            precision_at_k: 0.125,
            recall_at_k: 0.5,
            ndcg_at_k: 0.25,
            crecall: 0.5,
            cprecision: 0.0625,
            jain_index: Some(0.75),
            demographic_parity: None,
            fairness_score: Some(0.9),
            bias_alpha: Some(1.5),
            bias_beta: Some(-0.1),
            bias_log_likelihood: Some(-100.0),
            mean_list_entropy: 0.8,
            cold_start_lists: 0,
            infeasible_lists: 1,
        };
        RunArtifact {
            config: ExperimentConfig::new(4),
            dataset_digest: "0123456789abcdef".into(),
            users: 20,
            train_edges: 30,
            heldout_matches: 4,
            reports: vec![row(Algorithm::FairMatch), row(Algorithm::Cf)],
            bias_reduction: None,
            timings: Some(Timings::default()),
        }
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let art = artifact();
        emit_report(&art, ReportFormat::Json, &path).unwrap();
        let back: RunArtifact = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, art);
    }

    #[test]
    fn csv_layouts() {
        let art = artifact();
        let wide = render_csv(&art, false).unwrap();
        let lines: Vec<&str> = wide.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("algorithm,precision_at_k,recall_at_k"));
        assert!(lines[1].starts_with("fair_match,0.125,0.5,"));
        let long = render_csv(&art, true).unwrap();
        assert_eq!(long.lines().count(), 1 + 2 * 11);
        assert!(long.contains("cf,demographic_parity,\n"));
    }

    #[test]
    fn markdown_is_plain() {
        let md = render_markdown(&artifact());
        assert!(md.contains(
            "| Algorithm | Precision@K | Recall@K | NDCG@K | Jain | Demographic Parity |"
        ));
        assert!(md.contains("| fair_match | 0.1250 | 0.5000 |"));
        assert!(md.contains("n/a"));
        assert!(!md.contains("**"));
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "md".parse::<ReportFormat>().unwrap(),
            ReportFormat::Markdown
        );
        assert_eq!(
            "csv-long".parse::<ReportFormat>().unwrap(),
            ReportFormat::CsvLong
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
