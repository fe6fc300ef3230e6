//! Meta-evaluation: score every summary of a rated dataset, then correlate
//! metric scores with human ratings at the summary level.

mod external;
mod report;
pub mod stats;
mod suite;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{compute_idf, Backend, IdfTable};
use crate::dataset::{Dataset, Document, SummaryRecord};
use crate::error::{Error, Result};
use crate::lexical::{rouge_reffree, RougeVariant};
use crate::score::{Component, MetricValue};
use crate::sentence::{leadword_filter, multi_doc_score, sentence_bertscore, SentenceSimConfig};
use crate::token_metrics::{bertscore_reffree, moverscore_greedy, GreedyMatchConfig};

pub use external::{coverage_warnings, ingest_external_scores, parse_external_scores};
pub use report::{render_report, CorrelationReport, ReportFormat, ReportRow};
pub use suite::{BackendEntry, MetricEntry, SuiteConfig};

pub(crate) fn digest(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))[..16].to_string()
}

/// Scores of one metric component for every summary it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRun {
    pub metric_name: String,
    pub component: Component,
    /// Keyed by `(doc_id, system_id)`.
    pub scores: BTreeMap<(String, String), f64>,
    pub config_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Correlate within each document, then average over documents.
    #[default]
    PerDocMean,
    /// One correlation over all summaries.
    Pooled,
}

impl Pooling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pooling::PerDocMean => "per_doc_mean",
            Pooling::Pooled => "pooled",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_doc_mean" => Ok(Pooling::PerDocMean),
            "pooled" => Ok(Pooling::Pooled),
            other => Err(Error::InvalidArgument(format!("unknown pooling {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    /// Documents (or 1 when pooled) that contributed a defined value.
    pub n_units: usize,
}

impl Correlation {
    const UNDEFINED: Correlation = Correlation {
        spearman: None,
        pearson: None,
        n_units: 0,
    };
}

fn correlate(xs: &[f64], ys: &[f64]) -> Result<Option<(f64, f64)>> {
    if xs.len() < 2 {
        return Ok(None);
    }
    Ok(match (stats::spearman(xs, ys)?, stats::pearson(xs, ys)?) {
        (Some(s), Some(p)) => Some((s, p)),
        _ => None,
    })
}

/// Correlation between `run` and the `aspect` ratings. Summaries without a
/// rating for the aspect, or without a score, are left out.
pub fn summary_level_correlation(
    dataset: &Dataset,
    run: &MetricRun,
    aspect: &str,
    pooling: Pooling,
) -> Result<Correlation> {
    if !dataset.aspects.iter().any(|a| a == aspect) {
        return Err(Error::InvalidArgument(format!(
            "dataset {} has no aspect {aspect:?}",
            dataset.name
        )));
    }
    // doc_id -> (scores, ratings), in first-appearance order
    let mut groups: Vec<(&str, Vec<f64>, Vec<f64>)> = Vec::new();
    for s in &dataset.summaries {
        let (Some(&rating), Some(&score)) = (s.ratings.get(aspect), run.scores.get(&s.key())) else {
            continue;
        };
        let slot = match pooling {
            Pooling::Pooled => "",
            Pooling::PerDocMean => s.doc_id.as_str(),
        };
        match groups.iter_mut().find(|g| g.0 == slot) {
            Some(g) => {
                g.1.push(score);
                g.2.push(rating);
            }
            None => groups.push((slot, vec![score], vec![rating])),
        }
    }

    let mut defined = Vec::new();
    for (_, scores, ratings) in &groups {
        if let Some(v) = correlate(scores, ratings)? {
            defined.push(v);
        }
    }
    if defined.is_empty() {
        return Ok(Correlation::UNDEFINED);
    }
    let n = defined.len() as f64;
    Ok(Correlation {
        spearman: Some(defined.iter().map(|v| v.0).sum::<f64>() / n),
        pearson: Some(defined.iter().map(|v| v.1).sum::<f64>() / n),
        n_units: defined.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    BertScore { use_idf: bool },
    MoverScore,
    Rouge(RougeVariant),
    SentenceBertScore(SentenceSimConfig),
    /// Precomputed scores, e.g. from [`ingest_external_scores`].
    External(MetricRun),
}

/// One entry of a benchmark suite.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub components: Vec<Component>,
    /// Keep only this leading fraction of each document's sentences.
    pub leadword_k: Option<f64>,
    pub label: Option<String>,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        let components = match kind {
            MetricKind::MoverScore | MetricKind::External(_) => vec![Component::Scalar],
            _ => vec![Component::F],
        };
        MetricSpec {
            kind,
            components,
            leadword_k: None,
            label: None,
        }
    }

    pub fn components(mut self, components: Vec<Component>) -> Self {
        self.components = components;
        self
    }

    pub fn leadword(mut self, k: f64) -> Self {
        self.leadword_k = Some(k);
        self
    }

    pub fn name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let base = match &self.kind {
            MetricKind::BertScore { use_idf: false } => "bertscore".to_string(),
            MetricKind::BertScore { use_idf: true } => "bertscore_idf".to_string(),
            MetricKind::MoverScore => "moverscore".to_string(),
            MetricKind::Rouge(v) => v.to_string(),
            MetricKind::SentenceBertScore(c) => {
                format!("sentence_bertscore[{},{}]", c.sim_kind, c.weighting)
            }
            MetricKind::External(run) => run.metric_name.clone(),
        };
        match self.leadword_k {
            Some(k) => format!("{base}@lead{k}"),
            None => base,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidArgument(format!("{}: no components", self.name())));
        }
        let scalar = matches!(self.kind, MetricKind::MoverScore | MetricKind::External(_));
        for &c in &self.components {
            if scalar != (c == Component::Scalar) {
                return Err(Error::InvalidArgument(format!(
                    "{} has no component {c}",
                    self.name()
                )));
            }
        }
        if let Some(k) = self.leadword_k {
            if !(k > 0.0 && k <= 1.0) {
                return Err(Error::InvalidArgument(format!("leadword ratio {k} outside (0, 1]")));
            }
            if matches!(self.kind, MetricKind::External(_)) {
                return Err(Error::InvalidArgument(
                    "leadword does not apply to external scores".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Backends available to a benchmark run.
#[derive(Clone, Copy, Default)]
pub struct Backends<'a> {
    /// Token and sentence embeddings.
    pub embed: Option<&'a dyn Backend>,
    /// Premise/hypothesis classification for the NLI sentence similarities.
    pub nli: Option<&'a dyn Backend>,
}

impl<'a> Backends<'a> {
    fn embed(&self, metric: &str) -> Result<&'a dyn Backend> {
        self.embed
            .ok_or_else(|| Error::InvalidArgument(format!("{metric} needs an embedding backend")))
    }

    fn nli(&self, metric: &str) -> Result<&'a dyn Backend> {
        self.nli
            .ok_or_else(|| Error::InvalidArgument(format!("{metric} needs an NLI backend")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub runs: Vec<MetricRun>,
    pub report: CorrelationReport,
    pub warnings: Vec<String>,
}

/// Idf weights over the dataset's source documents, tokenized by `backend`.
pub fn dataset_idf(dataset: &Dataset, backend: &dyn Backend) -> Result<IdfTable> {
    let docs = dataset
        .documents
        .iter()
        .map(|d| backend.tokenize(&d.text))
        .collect::<Result<Vec<_>>>()?;
    compute_idf(&docs)
}

struct Scorer<'a> {
    spec: &'a MetricSpec,
    backend: Option<&'a dyn Backend>,
    greedy: GreedyMatchConfig,
}

impl Scorer<'_> {
    fn pair(&self, summary: &str, doc: &Document) -> Result<MetricValue> {
        let backend = || self.backend.expect("backend checked before scoring");
        Ok(match &self.spec.kind {
            MetricKind::BertScore { .. } => {
                bertscore_reffree(summary, &doc.text, &self.greedy, backend())?.into()
            }
            MetricKind::MoverScore => {
                MetricValue::Scalar(moverscore_greedy(summary, &doc.text, &self.greedy, backend())?)
            }
            MetricKind::Rouge(v) => rouge_reffree(summary, &doc.text, *v).into(),
            MetricKind::SentenceBertScore(cfg) => {
                sentence_bertscore(summary, &doc.text, cfg, backend())?.into()
            }
            MetricKind::External(_) => unreachable!("external runs are not rescored"),
        })
    }

    fn summary(&self, dataset: &Dataset, s: &SummaryRecord) -> Result<Vec<f64>> {
        let mut docs = Vec::new();
        for d in dataset.group_of(&s.doc_id) {
            docs.push(match self.spec.leadword_k {
                Some(k) => leadword_filter(d, k)?,
                None => d.clone(),
            });
        }
        if docs.is_empty() {
            return Err(Error::Dataset(format!("unknown document {}", s.doc_id)));
        }
        let mut values = Vec::with_capacity(docs.len());
        for d in &docs {
            values.push(self.pair(&s.text, d).map_err(|e| Error::Document {
                doc_id: d.id.clone(),
                source: Box::new(e),
            })?);
        }
        let lookup = |_: &str, d: &Document| -> Result<MetricValue> {
            let i = docs.iter().position(|o| o.id == d.id).expect("scored above");
            Ok(values[i])
        };
        self.spec
            .components
            .iter()
            .map(|&c| multi_doc_score(&docs, &s.text, lookup, c))
            .collect()
    }
}

/// Scores every summary with every suite entry and correlates each
/// `(metric, component)` with each rated aspect.
pub fn run_benchmark(
    dataset: &Dataset,
    suite: &[MetricSpec],
    pooling: Pooling,
    backends: Backends<'_>,
) -> Result<BenchmarkOutput> {
    if suite.is_empty() {
        return Err(Error::InvalidArgument("benchmark suite is empty".into()));
    }
    dataset.validate()?;
    let mut idf: Option<IdfTable> = None;
    let mut runs = Vec::new();
    let mut warnings = Vec::new();

    for spec in suite {
        spec.validate()?;
        let name = spec.name();
        if let MetricKind::External(run) = &spec.kind {
            warnings.extend(coverage_warnings(run, dataset));
            runs.push(MetricRun {
                metric_name: name,
                ..run.clone()
            });
            continue;
        }

        let backend = match &spec.kind {
            MetricKind::Rouge(_) => None,
            MetricKind::SentenceBertScore(c) if c.sim_kind.needs_nli() => Some(backends.nli(&name)?),
            _ => Some(backends.embed(&name)?),
        };
        let greedy = match spec.kind {
            MetricKind::BertScore { use_idf: true } => {
                let embed = backends.embed(&name)?;
                if idf.is_none() {
                    idf = Some(dataset_idf(dataset, embed)?);
                }
                GreedyMatchConfig::with_idf(idf.clone().expect("set above"))
            }
            _ => GreedyMatchConfig::plain(),
        };
        let scorer = Scorer {
            spec,
            backend,
            greedy,
        };

        let per_summary = dataset
            .summaries
            .par_iter()
            .map(|s| {
                scorer.summary(dataset, s).map_err(|e| Error::Pair {
                    metric: name.clone(),
                    doc_id: s.doc_id.clone(),
                    system_id: s.system_id.clone(),
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let model = backend.map(|b| b.model_id()).unwrap_or("-");
        for (ci, &component) in spec.components.iter().enumerate() {
            let scores = dataset
                .summaries
                .iter()
                .zip(&per_summary)
                .map(|(s, v)| (s.key(), v[ci]))
                .collect();
            runs.push(MetricRun {
                metric_name: name.clone(),
                component,
                scores,
                config_digest: digest(&format!("{spec:?}|{model}|{component}|{}", dataset.name)),
            });
        }
    }

    let mut rows = Vec::new();
    for run in &runs {
        for aspect in &dataset.aspects {
            let c = summary_level_correlation(dataset, run, aspect, pooling)?;
            rows.push(ReportRow {
                metric_name: run.metric_name.clone(),
                component: run.component,
                aspect: aspect.clone(),
                spearman: c.spearman,
                pearson: c.pearson,
                n_units: c.n_units,
            });
        }
    }
    Ok(BenchmarkOutput {
        runs,
        report: CorrelationReport {
            dataset_name: dataset.name.clone(),
            pooling,
            rows,
        },
        warnings,
    })
}
