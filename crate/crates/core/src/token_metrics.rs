//! Greedy-matching metrics over contextual token embeddings.
//!
//! Every row is unit length, so a dot product is a cosine similarity. The
//! document always takes the reference slot: precision pools over summary
//! tokens, recall pools over document tokens.

use ndarray::{Array2, ArrayView1};

use crate::backend::{Backend, EmbeddingSequence, IdfTable};
use crate::error::{Error, Result};
use crate::score::ScoreTriple;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyMatchConfig {
    pub use_idf: bool,
    /// Table used to weight tokens when `use_idf` is set. Without one, the
    /// sequences must already carry idf weights.
    pub idf: Option<IdfTable>,
}

impl GreedyMatchConfig {
    pub fn plain() -> Self {
        GreedyMatchConfig::default()
    }

    pub fn with_idf(idf: IdfTable) -> Self {
        GreedyMatchConfig {
            use_idf: true,
            idf: Some(idf),
        }
    }
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Pairwise cosine similarities, `[cand tokens × ref tokens]`.
pub fn similarity_matrix(cand: &EmbeddingSequence, reference: &EmbeddingSequence) -> Result<Array2<f64>> {
    if cand.is_empty() {
        return Err(Error::Empty("candidate sequence"));
    }
    if reference.is_empty() {
        return Err(Error::Empty("reference sequence"));
    }
    if cand.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            left: cand.dim(),
            right: reference.dim(),
        });
    }
    Ok(Array2::from_shape_fn((cand.len(), reference.len()), |(i, j)| {
        dot(cand.vectors.row(i), reference.vectors.row(j))
    }))
}

/// `Σ wᵢ xᵢ / Σ wᵢ`, or 0 when the weights sum to zero.
fn weighted_mean(values: impl Iterator<Item = f64>, weights: Option<&[f64]>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, v) in values.enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        num += w * v;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn weights<'a>(seq: &'a EmbeddingSequence, use_idf: bool, side: &'static str) -> Result<Option<&'a [f64]>> {
    if !use_idf {
        return Ok(None);
    }
    seq.idf.as_deref().map(Some).ok_or(Error::MissingIdf(side))
}

/// BERTScore-style greedy matching of `cand` against `reference`.
pub fn greedy_match_scores(
    cand: &EmbeddingSequence,
    reference: &EmbeddingSequence,
    use_idf: bool,
) -> Result<ScoreTriple> {
    let sim = similarity_matrix(cand, reference)?;
    let cand_w = weights(cand, use_idf, "candidate")?;
    let ref_w = weights(reference, use_idf, "reference")?;
    let best_for_cand = sim
        .rows()
        .into_iter()
        .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let precision = weighted_mean(best_for_cand, cand_w);
    let best_for_ref = sim
        .columns()
        .into_iter()
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let recall = weighted_mean(best_for_ref, ref_w);
    Ok(ScoreTriple::new(precision, recall))
}

fn embed_pair<B: Backend + ?Sized>(
    summary: &str,
    document: &str,
    cfg: &GreedyMatchConfig,
    backend: &B,
) -> Result<(EmbeddingSequence, EmbeddingSequence)> {
    if summary.trim().is_empty() {
        return Err(Error::Empty("summary"));
    }
    if document.trim().is_empty() {
        return Err(Error::Empty("document"));
    }
    let mut sum = backend.embed_tokens(summary)?;
    let mut doc = backend.embed_tokens(document)?;
    if cfg.use_idf {
        if let Some(table) = &cfg.idf {
            sum = sum.with_idf(table);
            doc = doc.with_idf(table);
        }
    }
    Ok((sum, doc))
}

/// Greedy matching with the source document in the reference slot.
pub fn bertscore_reffree<B: Backend + ?Sized>(
    summary: &str,
    document: &str,
    cfg: &GreedyMatchConfig,
    backend: &B,
) -> Result<ScoreTriple> {
    let (sum, doc) = embed_pair(summary, document, cfg, backend)?;
    greedy_match_scores(&sum, &doc, cfg.use_idf)
}

/// Average over document tokens of the best similarity to any summary token.
pub fn moverscore_greedy_sequences(summary: &EmbeddingSequence, document: &EmbeddingSequence) -> Result<f64> {
    if summary.is_empty() {
        return Err(Error::Empty("summary sequence"));
    }
    if document.is_empty() {
        return Err(Error::Empty("document sequence"));
    }
    if summary.dim() != document.dim() {
        return Err(Error::DimensionMismatch {
            left: summary.dim(),
            right: document.dim(),
        });
    }
    let n = document.len() as f64;
    let total: f64 = document
        .vectors
        .rows()
        .into_iter()
        .map(|r| {
            summary
                .vectors
                .rows()
                .into_iter()
                .map(|w| dot(w, r))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(total / n)
}

pub fn moverscore_greedy<B: Backend + ?Sized>(
    summary: &str,
    document: &str,
    cfg: &GreedyMatchConfig,
    backend: &B,
) -> Result<f64> {
    let (sum, doc) = embed_pair(summary, document, cfg, backend)?;
    moverscore_greedy_sequences(&sum, &doc)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn seq(rows: Array2<f64>, idf: Option<Vec<f64>>) -> EmbeddingSequence {
        let tokens = (0..rows.nrows()).map(|i| format!("t{i}")).collect();
        EmbeddingSequence::new(tokens, rows, idf, "test", 0).unwrap()
    }

    #[test]
    fn self_match_is_one() {
        let a = seq(array![[1.0, 2.0, 0.5], [0.0, 1.0, -1.0], [3.0, 0.0, 0.1]], None);
        let t = greedy_match_scores(&a, &a, false).unwrap();
        for v in [t.precision, t.recall, t.f1] {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hand_computed_max_pooling() {
        let cand = seq(array![[1.0, 0.0]], None);
        let reference = seq(array![[1.0, 0.0], [0.0, 1.0]], None);
        let t = greedy_match_scores(&cand, &reference, false).unwrap();
        assert!((t.precision - 1.0).abs() < 1e-9);
        assert!((t.recall - 0.5).abs() < 1e-9);
        assert!((t.f1 - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn idf_weights_the_pool() {
        let cand = seq(array![[1.0, 0.0]], Some(vec![1.0]));
        let reference = seq(array![[1.0, 0.0], [0.0, 1.0]], Some(vec![3.0, 1.0]));
        let t = greedy_match_scores(&cand, &reference, true).unwrap();
        assert!((t.recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let a = seq(array![[1.0, 0.0]], None);
        let b = seq(array![[1.0, 0.0, 0.0]], None);
        assert!(matches!(
            greedy_match_scores(&a, &b, false),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(greedy_match_scores(&a, &a, true), Err(Error::MissingIdf(_))));
        let empty = EmbeddingSequence::new(vec![], Array2::zeros((0, 2)), None, "t", 0).unwrap();
        assert!(matches!(greedy_match_scores(&empty, &a, false), Err(Error::Empty(_))));
    }

    #[test]
    fn zero_total_weight_gives_zero() {
        let a = seq(array![[1.0, 0.0]], Some(vec![0.0]));
        let t = greedy_match_scores(&a, &a, true).unwrap();
        assert_eq!(t.precision, 0.0);
        assert_eq!(t.f1, 0.0);
    }

    #[test]
    fn moverscore_matches_recall() {
        let s = seq(array![[1.0, 0.2], [0.3, -1.0]], None);
        let d = seq(array![[0.5, 0.5], [1.0, 0.0], [-0.2, 1.0]], None);
        let m = moverscore_greedy_sequences(&s, &d).unwrap();
        let r = greedy_match_scores(&s, &d, false).unwrap().recall;
        assert!((m - r).abs() < 1e-12);
    }
}
