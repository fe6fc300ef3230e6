//! TOML description of a benchmark run.
//!
//! ```toml
//! dataset = "bench_dataset.jsonl"
//! pooling = "per_doc_mean"
//! format = "markdown"
//! output = "report.md"
//!
//! [backend]
//! kind = "onnx"              # or "fixture"
//! path = "mini/encoder.toml" # model config, or fixture file
//! nli = "mini/nli.toml"
//!
//! [[metric]]
//! name = "bertscore"
//! components = ["p", "r", "f"]
//! idf = true
//!
//! [[metric]]
//! name = "external"
//! path = "blanc.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{
    ingest_external_scores, run_benchmark, BenchmarkOutput, Backends, MetricKind, MetricSpec,
    Pooling, ReportFormat,
};
use crate::backend::{Backend, FixtureBackend, OnnxBackend};
use crate::dataset::{load_dataset, DatasetFormat};
use crate::error::{Error, Result};
use crate::lexical::RougeVariant;
use crate::score::Component;
use crate::sentence::{SentenceSimConfig, SimKind, Weighting};

type BoxedBackend = Box<dyn Backend>;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub pooling: Pooling,
    #[serde(default)]
    pub format: ReportFormat,
    pub output: Option<PathBuf>,
    pub backend: Option<BackendEntry>,
    #[serde(rename = "metric", default)]
    pub metrics: Vec<MetricEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendEntry {
    pub kind: String,
    pub path: PathBuf,
    pub nli: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub name: String,
    pub components: Option<Vec<Component>>,
    #[serde(default)]
    pub idf: bool,
    pub leadword: Option<f64>,
    pub sim_kind: Option<SimKind>,
    #[serde(default)]
    pub weighting: Weighting,
    pub path: Option<PathBuf>,
    pub label: Option<String>,
}

impl MetricEntry {
    pub fn to_spec(&self) -> Result<MetricSpec> {
        let kind = match self.name.as_str() {
            "bertscore" => MetricKind::BertScore { use_idf: self.idf },
            "moverscore" => MetricKind::MoverScore,
            "sentence_bertscore" => MetricKind::SentenceBertScore(SentenceSimConfig {
                sim_kind: self.sim_kind.unwrap_or(SimKind::Cosine),
                weighting: self.weighting,
            }),
            "external" => {
                let path = self.path.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("external metric needs a `path`".into())
                })?;
                MetricKind::External(ingest_external_scores(path)?)
            }
            other => match other.parse::<RougeVariant>() {
                Ok(v) => MetricKind::Rouge(v),
                Err(_) => {
                    return Err(Error::InvalidArgument(format!("unknown metric {other:?}")))
                }
            },
        };
        let mut spec = MetricSpec::new(kind);
        if let Some(c) = &self.components {
            spec.components = c.clone();
        }
        spec.leadword_k = self.leadword;
        spec.label = self.label.clone();
        spec.validate()?;
        Ok(spec)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

impl SuiteConfig {
    /// Reads a suite; relative paths are taken from the suite file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: SuiteConfig = toml::from_str(&raw)
            .map_err(|e| Error::InvalidArgument(format!("suite {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset = resolve(base, &cfg.dataset);
        cfg.output = cfg.output.map(|o| resolve(base, &o));
        if let Some(b) = &mut cfg.backend {
            b.path = resolve(base, &b.path);
            b.nli = b.nli.as_ref().map(|n| resolve(base, n));
        }
        for m in &mut cfg.metrics {
            m.path = m.path.as_ref().map(|p| resolve(base, p));
        }
        Ok(cfg)
    }

    pub fn specs(&self) -> Result<Vec<MetricSpec>> {
        if self.metrics.is_empty() {
            return Err(Error::InvalidArgument("suite lists no metrics".into()));
        }
        self.metrics.iter().map(MetricEntry::to_spec).collect()
    }

    /// Embedding and NLI backends named by the `[backend]` table.
    pub fn load_backends(&self) -> Result<(Option<BoxedBackend>, Option<BoxedBackend>)> {
        let Some(b) = &self.backend else {
            return Ok((None, None));
        };
        let embed: Box<dyn Backend> = match b.kind.as_str() {
            "fixture" => Box::new(FixtureBackend::from_path(&b.path)?),
            "onnx" => Box::new(OnnxBackend::from_config_file(&b.path)?),
            other => {
                return Err(Error::InvalidArgument(format!("unknown backend kind {other:?}")))
            }
        };
        let nli: Option<Box<dyn Backend>> = match &b.nli {
            Some(p) => Some(Box::new(OnnxBackend::from_config_file(p)?)),
            None => None,
        };
        Ok((Some(embed), nli))
    }

    pub fn run(&self) -> Result<BenchmarkOutput> {
        let specs = self.specs()?;
        let dataset = load_dataset(&self.dataset, DatasetFormat::Jsonl)?;
        let (embed, nli) = self.load_backends()?;
        let backends = Backends {
            embed: embed.as_deref(),
            nli: nli.as_deref(),
        };
        run_benchmark(&dataset, &specs, self.pooling, backends)
    }
}
