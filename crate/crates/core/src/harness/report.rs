use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Pooling;
use crate::error::{Error, Result};
use crate::score::Component;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric_name: String,
    pub component: Component,
    pub aspect: String,
    /// `None` marks an undefined correlation.
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    pub n_units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub dataset_name: String,
    pub pooling: Pooling,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    #[default]
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

const COLUMNS: [&str; 6] = ["metric", "component", "aspect", "spearman", "pearson", "n_units"];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "NA".to_string(),
    }
}

fn fields(row: &ReportRow) -> [String; 6] {
    [
        row.metric_name.clone(),
        row.component.to_string(),
        row.aspect.clone(),
        cell(row.spearman),
        cell(row.pearson),
        row.n_units.to_string(),
    ]
}

pub fn render_report(report: &CorrelationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            w.write_record(COLUMNS).expect("in-memory write");
            for row in &report.rows {
                w.write_record(fields(row)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "dataset: {}, pooling: {}\n",
                report.dataset_name,
                report.pooling.as_str()
            );
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|---|---|---|---:|---:|---:|");
            for row in &report.rows {
                let f = fields(row).map(|s| s.replace('|', "\\|"));
                let _ = writeln!(out, "| {} |", f.join(" | "));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(rows: Vec<ReportRow>) -> CorrelationReport {
        CorrelationReport {
            dataset_name: "tiny".into(),
            pooling: Pooling::PerDocMean,
            rows,
        }
    }

    fn row(spearman: Option<f64>) -> ReportRow {
        ReportRow {
            metric_name: "rouge1".into(),
            component: Component::R,
            aspect: "relevance".into(),
            spearman,
            pearson: Some(0.12345),
            n_units: 4,
        }
    }

    #[test]
    fn csv_one_row() {
        let text = render_report(&report(vec![row(Some(0.5))]), ReportFormat::Csv);
        assert_eq!(
            text,
            "metric,component,aspect,spearman,pearson,n_units\nrouge1,r,relevance,0.500,0.123,4\n"
        );
    }

    #[test]
    fn undefined_is_na() {
        let text = render_report(&report(vec![row(None)]), ReportFormat::Csv);
        assert!(text.lines().nth(1).unwrap().contains(",NA,"));
        let md = render_report(&report(vec![row(None)]), ReportFormat::Markdown);
        assert!(md.contains("| NA |"));
        assert!(md.starts_with("dataset: tiny, pooling: per_doc_mean\n"));
    }
}
