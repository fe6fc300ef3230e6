//! Providers of contextual token embeddings, sentence embeddings and NLI probabilities.

mod cache;
mod fixture;
mod idf;
mod onnx;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{CachedBackend, CACHE_DIR_ENV};
pub use fixture::{load_fixture, save_fixture, FixtureBackend, FixtureItem, FixtureStore};
pub use idf::{compute_idf, IdfTable};
pub use onnx::OnnxBackend;

/// Rows whose norm is further than this from 1 get rescaled.
const NORM_SLACK: f64 = 1e-12;

/// Subword tokens of one text with their contextual vectors (one unit-norm row per token).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub tokens: Vec<String>,
    pub vectors: Array2<f64>,
    pub idf: Option<Vec<f64>>,
    pub model_id: String,
    pub layer: usize,
}

impl EmbeddingSequence {
    /// Validates shapes and finiteness, then L2-normalizes every row.
    pub fn new(
        tokens: Vec<String>,
        vectors: Array2<f64>,
        idf: Option<Vec<f64>>,
        model_id: impl Into<String>,
        layer: usize,
    ) -> Result<Self> {
        if tokens.len() != vectors.nrows() {
            return Err(Error::LengthMismatch {
                left: tokens.len(),
                right: vectors.nrows(),
            });
        }
        if let Some(w) = &idf {
            if w.len() != tokens.len() {
                return Err(Error::LengthMismatch {
                    left: tokens.len(),
                    right: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidArgument(
                    "idf weights must be finite and non-negative".into(),
                ));
            }
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite embedding entry".into()));
        }
        let mut seq = EmbeddingSequence {
            tokens,
            vectors,
            idf,
            model_id: model_id.into(),
            layer,
        };
        seq.normalize()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    fn normalize(&mut self) -> Result<()> {
        for (i, mut row) in self.vectors.axis_iter_mut(Axis(0)).enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "zero embedding for token {i} ({:?})",
                    self.tokens[i]
                )));
            }
            if (norm - 1.0).abs() > NORM_SLACK {
                row.mapv_inplace(|x| x / norm);
            }
        }
        Ok(())
    }

    /// Replaces the idf weights with lookups in `table`.
    pub fn with_idf(mut self, table: &IdfTable) -> Self {
        self.idf = Some(table.weights_for(&self.tokens));
        self
    }

    /// Unit-normalized mean of the token rows.
    pub fn mean_vector(&self) -> Result<Array1<f64>> {
        let mean = self
            .vectors
            .mean_axis(Axis(0))
            .ok_or(Error::Empty("embedding sequence"))?;
        let norm = mean.dot(&mean).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero mean embedding".into()));
        }
        Ok(mean / norm)
    }
}

/// Canonical NLI labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    #[serde(alias = "entailment")]
    Entail,
    Neutral,
    #[serde(alias = "contradiction")]
    Contradict,
}

impl FromStr for NliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entail" | "entailment" => Ok(NliLabel::Entail),
            "neutral" => Ok(NliLabel::Neutral),
            "contradict" | "contradiction" => Ok(NliLabel::Contradict),
            other => Err(Error::InvalidArgument(format!("unknown NLI label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliDistribution {
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

impl NliDistribution {
    /// Softmax over classifier logits whose positions are labelled by `order`.
    pub fn from_logits(logits: &[f64], order: &[NliLabel; 3]) -> Result<Self> {
        if logits.len() != 3 {
            return Err(Error::Model(format!(
                "NLI classifier produced {} logits, expected 3",
                logits.len()
            )));
        }
        check_label_order(order)?;
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut d = NliDistribution {
            entail: 0.0,
            neutral: 0.0,
            contradict: 0.0,
        };
        for (label, e) in order.iter().zip(exps) {
            let p = e / total;
            match label {
                NliLabel::Entail => d.entail = p,
                NliLabel::Neutral => d.neutral = p,
                NliLabel::Contradict => d.contradict = p,
            }
        }
        Ok(d)
    }
}

fn check_label_order(order: &[NliLabel; 3]) -> Result<()> {
    let has = |l| order.contains(&l);
    if has(NliLabel::Entail) && has(NliLabel::Neutral) && has(NliLabel::Contradict) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "nli_label_order {order:?} is not a permutation of entail/neutral/contradict"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LongInputMode {
    #[default]
    Truncate,
    Window,
}

impl fmt::Display for LongInputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LongInputMode::Truncate => "truncate",
            LongInputMode::Window => "window",
        })
    }
}

fn default_max_length() -> usize {
    512
}

/// Everything needed to load an encoder or NLI classifier from local files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub encoder_path: PathBuf,
    pub tokenizer_path: PathBuf,
    /// Hidden layer to read (0 = embedding output). Defaults per model id.
    #[serde(default)]
    pub layer: Option<usize>,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default)]
    pub nli_label_order: Option<[NliLabel; 3]>,
    #[serde(default)]
    pub long_input_mode: LongInputMode,
}

impl ModelConfig {
    /// Reads a TOML (or `.json`) model config; relative paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ModelConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&raw).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?
        };
        if let Some(dir) = path.parent() {
            cfg.encoder_path = dir.join(&cfg.encoder_path);
            cfg.tokenizer_path = dir.join(&cfg.tokenizer_path);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_length < 8 {
            return Err(Error::InvalidArgument(format!(
                "max_length {} is below 8",
                self.max_length
            )));
        }
        if let Some(order) = &self.nli_label_order {
            check_label_order(order)?;
        }
        Ok(())
    }

    /// Configured layer, else the per-model default, else `fallback`.
    pub fn resolved_layer(&self, fallback: usize) -> usize {
        self.layer
            .or_else(|| default_layer(&self.model_id))
            .unwrap_or(fallback)
    }
}

/// Stock per-model hidden layer used for greedy matching.
pub fn default_layer(model_id: &str) -> Option<usize> {
    let layer = match model_id {
        "bert-base-uncased" => 9,
        "distilbert-base-uncased" => 5,
        "roberta-base" => 10,
        "roberta-large" => 17,
        "roberta-large-mnli" => 19,
        "microsoft/deberta-base" => 9,
        "microsoft/deberta-base-mnli" => 9,
        "microsoft/deberta-large" => 16,
        "microsoft/deberta-large-mnli" => 18,
        "microsoft/deberta-xlarge-mnli" => 40,
        "facebook/bart-base" => 6,
        "facebook/bart-large" => 10,
        "facebook/bart-large-mnli" => 11,
        _ => return None,
    };
    Some(layer)
}

/// A source of embeddings and NLI judgements.
///
/// Implementations are deterministic: identical inputs give identical outputs.
pub trait Backend: Send + Sync {
    fn model_id(&self) -> &str;

    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence>;

    /// Unit-normalized mean of the content-token vectors.
    fn embed_sentence(&self, text: &str) -> Result<Array1<f64>> {
        self.embed_tokens(text)?.mean_vector()
    }

    fn nli_probs(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution> {
        let _ = (premise, hypothesis);
        Err(Error::Unsupported {
            backend: self.model_id().to_string(),
            what: "NLI classification".into(),
        })
    }

    /// Content subword tokens of `text`.
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        Ok(self.embed_tokens(text)?.tokens)
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence> {
        (**self).embed_tokens(text)
    }
    fn embed_sentence(&self, text: &str) -> Result<Array1<f64>> {
        (**self).embed_sentence(text)
    }
    fn nli_probs(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution> {
        (**self).nli_probs(premise, hypothesis)
    }
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        (**self).tokenize(text)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence> {
        (**self).embed_tokens(text)
    }
    fn embed_sentence(&self, text: &str) -> Result<Array1<f64>> {
        (**self).embed_sentence(text)
    }
    fn nli_probs(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution> {
        (**self).nli_probs(premise, hypothesis)
    }
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        (**self).tokenize(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rows_are_normalized() {
        let seq = EmbeddingSequence::new(
            vec!["a".into(), "b".into()],
            array![[3.0, 4.0], [0.0, 2.0]],
            None,
            "m",
            0,
        )
        .unwrap();
        assert_eq!(seq.vectors, array![[0.6, 0.8], [0.0, 1.0]]);
    }

    #[test]
    fn shape_and_value_checks() {
        let bad_rows = EmbeddingSequence::new(vec!["a".into()], array![[1.0], [1.0]], None, "m", 0);
        assert!(bad_rows.is_err());
        let bad_idf =
            EmbeddingSequence::new(vec!["a".into()], array![[1.0]], Some(vec![1.0, 2.0]), "m", 0);
        assert!(bad_idf.is_err());
        let nan = EmbeddingSequence::new(vec!["a".into()], array![[f64::NAN]], None, "m", 0);
        assert!(nan.is_err());
        let zero = EmbeddingSequence::new(vec!["a".into()], array![[0.0, 0.0]], None, "m", 0);
        assert!(zero.is_err());
    }

    #[test]
    fn one_token_sentence_vector_is_the_token_vector() {
        let seq =
            EmbeddingSequence::new(vec!["a".into()], array![[1.0, 2.0, 2.0]], None, "m", 0).unwrap();
        let v = seq.mean_vector().unwrap();
        for (a, b) in v.iter().zip(seq.vectors.row(0)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_remaps_label_order() {
        let order = [NliLabel::Contradict, NliLabel::Neutral, NliLabel::Entail];
        let d = NliDistribution::from_logits(&[0.0, 1.0, 3.0], &order).unwrap();
        assert!((d.entail + d.neutral + d.contradict - 1.0).abs() < 1e-12);
        assert!(d.entail > d.neutral && d.neutral > d.contradict);
        let z = (1.0f64).exp() + (3.0f64).exp() + 1.0;
        assert!((d.entail - (3.0f64).exp() / z).abs() < 1e-15);
    }

    #[test]
    fn bad_label_order_and_arity() {
        let dup = [NliLabel::Entail, NliLabel::Entail, NliLabel::Neutral];
        assert!(NliDistribution::from_logits(&[0.0, 0.0, 0.0], &dup).is_err());
        let ok = [NliLabel::Entail, NliLabel::Neutral, NliLabel::Contradict];
        assert!(NliDistribution::from_logits(&[0.0, 0.0], &ok).is_err());
    }

    #[test]
    fn default_layers() {
        assert_eq!(default_layer("roberta-large"), Some(17));
        assert_eq!(default_layer("microsoft/deberta-large-mnli"), Some(18));
        assert_eq!(default_layer("unknown"), None);
    }
}
