//! Sentence-level greedy matching, the lead-sentence filter and multi-document sums.
//!
//! Sentences play the role tokens play in token-level matching. Cross
//! similarities are laid out `[document sentences × summary sentences]`; NLI
//! similarities use the document sentence as premise and the summary sentence
//! as hypothesis.
//!
//! With weighting enabled, document sentences get an importance `w_i` from
//! their similarity to the other document sentences, and summary sentences get
//! a vote `v_j = Σ_i w_i · S(i, j)`. Both are normalized to sum to one before
//! pooling; if a total is not positive the pool falls back to a plain mean.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::dataset::Document;
use crate::error::{Error, Result};
use crate::score::{Component, MetricValue, ScoreTriple};
use crate::text::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimKind {
    #[serde(rename = "cosine")]
    Cosine,
    /// `1 - N`
    #[serde(rename = "nli_1mN")]
    Nli1mN,
    /// `E - C`
    #[serde(rename = "nli_EmC")]
    NliEmC,
    /// `E`
    #[serde(rename = "nli_E")]
    NliE,
}

impl SimKind {
    pub fn needs_nli(&self) -> bool {
        !matches!(self, SimKind::Cosine)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SimKind::Cosine => "cosine",
            SimKind::Nli1mN => "nli_1mN",
            SimKind::NliEmC => "nli_EmC",
            SimKind::NliE => "nli_E",
        }
    }
}

impl FromStr for SimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(SimKind::Cosine),
            "nli_1mN" | "1-N" => Ok(SimKind::Nli1mN),
            "nli_EmC" | "E-C" => Ok(SimKind::NliEmC),
            "nli_E" | "E" => Ok(SimKind::NliE),
            other => Err(Error::InvalidArgument(format!("unknown sim_kind {other:?}"))),
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    None,
    Sum,
    Entropy,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Weighting::None),
            "sum" => Ok(Weighting::Sum),
            "entropy" => Ok(Weighting::Entropy),
            other => Err(Error::InvalidArgument(format!("unknown weighting {other:?}"))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::None => "none",
            Weighting::Sum => "sum",
            Weighting::Entropy => "entropy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSimConfig {
    pub sim_kind: SimKind,
    #[serde(default)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceWeights {
    pub doc_weights: Vec<f64>,
    pub summary_votes: Vec<f64>,
}

fn embed_all<B: Backend + ?Sized>(
    sentences: &[&String],
    backend: &B,
) -> Result<HashMap<String, Array1<f64>>> {
    let mut out = HashMap::new();
    for s in sentences {
        if !out.contains_key(s.as_str()) {
            out.insert((*s).clone(), backend.embed_sentence(s)?);
        }
    }
    Ok(out)
}

/// Similarity of every `left` sentence to every `right` sentence.
pub fn sent_sim_matrix<B: Backend + ?Sized>(
    left: &[String],
    right: &[String],
    kind: SimKind,
    backend: &B,
) -> Result<Array2<f64>> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::Empty("sentence list"));
    }
    let mut m = Array2::zeros((left.len(), right.len()));
    match kind {
        SimKind::Cosine => {
            let all: Vec<&String> = left.iter().chain(right).collect();
            let vecs = embed_all(&all, backend)?;
            for (i, a) in left.iter().enumerate() {
                for (j, b) in right.iter().enumerate() {
                    m[[i, j]] = vecs[a].dot(&vecs[b]);
                }
            }
        }
        _ => {
            for (i, a) in left.iter().enumerate() {
                for (j, b) in right.iter().enumerate() {
                    let d = backend.nli_probs(a, b)?;
                    m[[i, j]] = match kind {
                        SimKind::Nli1mN => 1.0 - d.neutral,
                        SimKind::NliEmC => d.entail - d.contradict,
                        SimKind::NliE => d.entail,
                        SimKind::Cosine => unreachable!(),
                    };
                }
            }
        }
    }
    Ok(m)
}

fn entropy_of_shifted(values: impl Iterator<Item = f64>) -> f64 {
    let shifted: Vec<f64> = values.map(|s| (s + 1.0).max(0.0)).collect();
    let total: f64 = shifted.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -shifted
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Importance of each document sentence from its similarities to the others.
///
/// `Sum` clamps negative totals to zero; `Entropy` shifts similarities by +1
/// before normalizing them into a distribution. A single sentence gets `[1]`;
/// `Weighting::None` gives all ones.
pub fn doc_sentence_weights(self_sim: &Array2<f64>, g: Weighting) -> Result<Vec<f64>> {
    let k = self_sim.nrows();
    if k == 0 || self_sim.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "self-similarity must be square and non-empty, got {:?}",
            self_sim.shape()
        )));
    }
    if k == 1 || g == Weighting::None {
        return Ok(vec![1.0; k]);
    }
    let off_diagonal = |i: usize| {
        self_sim
            .row(i)
            .into_iter()
            .enumerate()
            .filter(move |(j, _)| *j != i)
            .map(|(_, &s)| s)
            .collect::<Vec<f64>>()
    };
    Ok((0..k)
        .map(|i| match g {
            Weighting::Sum => off_diagonal(i).iter().sum::<f64>().max(0.0),
            Weighting::Entropy => entropy_of_shifted(off_diagonal(i).into_iter()),
            Weighting::None => unreachable!(),
        })
        .collect())
}

/// `v_j = Σ_i w_i · cross_sim(i, j)`.
pub fn summary_sentence_votes(w: &[f64], cross_sim: &Array2<f64>) -> Result<Vec<f64>> {
    if w.len() != cross_sim.nrows() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: cross_sim.nrows(),
        });
    }
    Ok(cross_sim
        .columns()
        .into_iter()
        .map(|col| col.iter().zip(w).map(|(s, wi)| wi * s).sum())
        .collect())
}

/// Divides by the total; a non-positive or non-finite total yields uniform weights.
pub fn normalize_weights(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        w.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / w.len() as f64; w.len()]
    }
}

fn pool(values: &[f64], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => values.iter().sum::<f64>() / values.len() as f64,
        Some(w) => values.iter().zip(w).map(|(v, w)| v * w).sum(),
    }
}

/// Sentence-level P/R/F from precomputed similarities.
///
/// `cross` is `[doc × summary]`; `doc_self` is `[doc × doc]` and is only read
/// when `weighting` is not `None`.
pub fn sentence_scores_from_matrices(
    cross: &Array2<f64>,
    doc_self: Option<&Array2<f64>>,
    weighting: Weighting,
) -> Result<(ScoreTriple, Option<SentenceWeights>)> {
    if cross.is_empty() {
        return Err(Error::Empty("sentence similarity matrix"));
    }
    let best_for_summary: Vec<f64> = cross
        .columns()
        .into_iter()
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best_for_doc: Vec<f64> = cross
        .rows()
        .into_iter()
        .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if weighting == Weighting::None {
        let t = ScoreTriple::new(pool(&best_for_summary, None), pool(&best_for_doc, None));
        return Ok((t, None));
    }
    let doc_self = doc_self.ok_or_else(|| {
        Error::InvalidArgument("weighted pooling needs document self-similarities".into())
    })?;
    if doc_self.nrows() != cross.nrows() {
        return Err(Error::LengthMismatch {
            left: doc_self.nrows(),
            right: cross.nrows(),
        });
    }
    let w = doc_sentence_weights(doc_self, weighting)?;
    let v = summary_sentence_votes(&w, cross)?;
    let t = ScoreTriple::new(
        pool(&best_for_summary, Some(&normalize_weights(&v))),
        pool(&best_for_doc, Some(&normalize_weights(&w))),
    );
    Ok((
        t,
        Some(SentenceWeights {
            doc_weights: w,
            summary_votes: v,
        }),
    ))
}

pub fn sentence_bertscore<B: Backend + ?Sized>(
    summary: &str,
    document: &str,
    cfg: &SentenceSimConfig,
    backend: &B,
) -> Result<ScoreTriple> {
    let doc_sents = split_sentences(document);
    let sum_sents = split_sentences(summary);
    if doc_sents.is_empty() {
        return Err(Error::Empty("document sentences"));
    }
    if sum_sents.is_empty() {
        return Err(Error::Empty("summary sentences"));
    }
    let cross = sent_sim_matrix(&doc_sents, &sum_sents, cfg.sim_kind, backend)?;
    let doc_self = match cfg.weighting {
        Weighting::None => None,
        _ => Some(sent_sim_matrix(&doc_sents, &doc_sents, cfg.sim_kind, backend)?),
    };
    Ok(sentence_scores_from_matrices(&cross, doc_self.as_ref(), cfg.weighting)?.0)
}

/// Keeps the first `ceil(k · sentence_count)` sentences. `k = 1` returns the document unchanged.
pub fn leadword_filter(document: &Document, k: f64) -> Result<Document> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::InvalidArgument(format!("leadword ratio {k} outside (0, 1]")));
    }
    let sentences = split_sentences(&document.text);
    if sentences.is_empty() {
        return Err(Error::Empty("document sentences"));
    }
    let n = sentences.len();
    // Guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4.
    let keep = ((k * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    if keep == n {
        return Ok(document.clone());
    }
    Ok(Document {
        id: document.id.clone(),
        text: sentences[..keep].join(" "),
        doc_group: document.doc_group.clone(),
    })
}

/// `Σ_i component(metric(summary, doc_i))` over a multi-document input.
pub fn multi_doc_score<F>(docs: &[Document], summary: &str, metric: F, component: Component) -> Result<f64>
where
    F: Fn(&str, &Document) -> Result<MetricValue>,
{
    if docs.is_empty() {
        return Err(Error::Empty("document list"));
    }
    let mut total = 0.0;
    for d in docs {
        let wrap = |e: Error| Error::Document {
            doc_id: d.id.clone(),
            source: Box::new(e),
        };
        total += metric(summary, d).and_then(|v| v.component(component)).map_err(wrap)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn uniform_sum_weights() {
        let s = array![[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]];
        assert_eq!(doc_sentence_weights(&s, Weighting::Sum).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_sentence_weight() {
        let s = array![[0.3]];
        assert_eq!(doc_sentence_weights(&s, Weighting::Sum).unwrap(), vec![1.0]);
        assert_eq!(doc_sentence_weights(&s, Weighting::Entropy).unwrap(), vec![1.0]);
    }

    #[test]
    fn entropy_of_uniform_row_is_log_count() {
        let s = array![[1.0, 0.2, 0.2, 0.2], [0.2, 1.0, 0.2, 0.2], [0.2, 0.2, 1.0, 0.2], [0.2, 0.2, 0.2, 1.0]];
        let w = doc_sentence_weights(&s, Weighting::Entropy).unwrap();
        for x in w {
            assert!((x - (3.0f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_with_all_minus_one_is_zero() {
        let s = array![[1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        assert_eq!(doc_sentence_weights(&s, Weighting::Entropy).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn non_square_rejected() {
        assert!(doc_sentence_weights(&array![[1.0, 0.0]], Weighting::Sum).is_err());
    }

    #[test]
    fn votes_arithmetic() {
        let v = summary_sentence_votes(&[1.0, 1.0], &array![[0.2], [0.4]]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15);
        let z = summary_sentence_votes(&[0.0, 0.0], &array![[0.2, 0.9], [0.4, 0.1]]).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
        assert!(summary_sentence_votes(&[1.0], &array![[0.2], [0.4]]).is_err());
    }

    #[test]
    fn hand_computed_sum_pipeline() {
        // two document sentences, one summary sentence
        let doc_self = array![[1.0, 0.5], [0.5, 1.0]];
        let cross = array![[0.8], [0.4]];
        let (t, weights) = sentence_scores_from_matrices(&cross, Some(&doc_self), Weighting::Sum).unwrap();
        let weights = weights.unwrap();
        assert_eq!(weights.doc_weights, vec![0.5, 0.5]);
        // v = 0.5*0.8 + 0.5*0.4
        assert!((weights.summary_votes[0] - 0.6).abs() < 1e-15);
        assert!((t.precision - 0.8).abs() < 1e-12);
        assert!((t.recall - 0.6).abs() < 1e-12);
        assert!((t.f1 - 2.0 * 0.8 * 0.6 / 1.4).abs() < 1e-12);
    }

    #[test]
    fn unweighted_means() {
        let cross = array![[0.9, 0.1], [0.2, 0.5], [0.3, 0.4]];
        let (t, w) = sentence_scores_from_matrices(&cross, None, Weighting::None).unwrap();
        assert!(w.is_none());
        assert!((t.precision - (0.9 + 0.5) / 2.0).abs() < 1e-15);
        assert!((t.recall - (0.9 + 0.5 + 0.4) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn leadword_rules() {
        let d = Document::new("d", "One. Two. Three. Four.");
        assert_eq!(leadword_filter(&d, 0.5).unwrap().text, "One. Two.");
        assert_eq!(leadword_filter(&d, 1.0).unwrap(), d);
        let five = Document::new("d", "One. Two. Three. Four. Five.");
        assert_eq!(leadword_filter(&five, 0.5).unwrap().text, "One. Two. Three.");
        let ten = Document::new("d", "A. B. C. D. E. F. G. H. I. J.");
        assert_eq!(leadword_filter(&ten, 0.3).unwrap().text, "A. B. C.");
        assert_eq!(leadword_filter(&d, 0.01).unwrap().text, "One.");
        assert!(leadword_filter(&d, 0.0).is_err());
        assert!(leadword_filter(&d, 1.5).is_err());
        assert!(leadword_filter(&d, f64::NAN).is_err());
    }

    #[test]
    fn multi_doc_sums_and_names_failures() {
        let docs = vec![Document::new("a", "x"), Document::new("b", "y")];
        let scores: HashMap<&str, f64> = [("a", 0.2), ("b", 0.3)].into_iter().collect();
        let total = multi_doc_score(&docs, "s", |_, d| Ok(MetricValue::Scalar(scores[d.id.as_str()])), Component::Scalar)
            .unwrap();
        assert!((total - 0.5).abs() < 1e-15);
        let err = multi_doc_score(
            &docs,
            "s",
            |_, d| {
                if d.id == "b" {
                    Err(Error::Empty("boom"))
                } else {
                    Ok(MetricValue::Scalar(1.0))
                }
            },
            Component::Scalar,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Document { ref doc_id, .. } if doc_id == "b"));
        assert!(multi_doc_score(&[], "s", |_, _| Ok(MetricValue::Scalar(1.0)), Component::Scalar).is_err());
    }

    #[test]
    fn sim_kind_names() {
        assert_eq!("nli_EmC".parse::<SimKind>().unwrap(), SimKind::NliEmC);
        assert_eq!(SimKind::Nli1mN.to_string(), "nli_1mN");
        assert!(SimKind::NliE.needs_nli());
    }
}
