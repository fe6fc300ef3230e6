//! Scores computed outside the engine, e.g. baseline metrics.
//!
//! ```text
//! # metric=blanc
//! doc_id,system_id,score
//! d1,M8,0.132
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::MetricRun;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::score::Component;

pub fn ingest_external_scores(path: impl AsRef<Path>) -> Result<MetricRun> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external_scores(&raw)
}

pub fn parse_external_scores(raw: &str) -> Result<MetricRun> {
    let (first, rest) = raw.split_once('\n').unwrap_or((raw, ""));
    let name = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|c| c.strip_prefix("metric="))
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "expected `# metric=<name>` comment line".into(),
        })?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 2,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "system_id", "score"] {
        return Err(Error::Parse {
            line: 2,
            message: format!("expected header doc_id,system_id,score, got {headers:?}"),
        });
    }

    let mut scores = BTreeMap::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 3;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let (doc_id, system_id, cell) = (&rec[0], &rec[1], &rec[2]);
        let score: f64 = cell.parse().map_err(|_| Error::Parse {
            line,
            message: format!("score {cell:?} is not a number"),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("score {cell:?} is not finite"),
            });
        }
        if scores
            .insert((doc_id.to_string(), system_id.to_string()), score)
            .is_some()
        {
            return Err(Error::Parse {
                line,
                message: format!("duplicate pair ({doc_id}, {system_id})"),
            });
        }
    }

    Ok(MetricRun {
        metric_name: name.to_string(),
        component: Component::Scalar,
        config_digest: super::digest(&format!("external:{name}:{raw}")),
        scores,
    })
}

/// One warning per dataset summary the run does not score, and per score with no summary.
pub fn coverage_warnings(run: &MetricRun, dataset: &Dataset) -> Vec<String> {
    let mut warnings: Vec<String> = dataset
        .summaries
        .iter()
        .filter(|s| !run.scores.contains_key(&s.key()))
        .map(|s| format!("{}: no score for ({}, {})", run.metric_name, s.doc_id, s.system_id))
        .collect();
    let keys: std::collections::HashSet<_> = dataset.summaries.iter().map(|s| s.key()).collect();
    warnings.extend(
        run.scores
            .keys()
            .filter(|k| !keys.contains(*k))
            .map(|(d, s)| format!("{}: score for unknown pair ({d}, {s})", run.metric_name)),
    );
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "# metric=blanc\ndoc_id,system_id,score\na,s1,0.1\na,s2,0.2\na,s3,0.3\nb,s1,0.4\nb,s2,0.5\nb,s3,0.6\n";

    #[test]
    fn parses_rows() {
        let run = parse_external_scores(CSV).unwrap();
        assert_eq!(run.metric_name, "blanc");
        assert_eq!(run.scores.len(), 6);
        assert_eq!(run.scores[&("b".to_string(), "s2".to_string())], 0.5);
        assert_eq!(run.component, Component::Scalar);
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let bad = CSV.replace("0.4", "n/a");
        match parse_external_scores(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_comment_line() {
        assert!(parse_external_scores("doc_id,system_id,score\n").is_err());
    }
}
