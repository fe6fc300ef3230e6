use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Smoothed inverse document frequencies: `log((M + 1) / (df + 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    pub doc_count: usize,
    pub weights: HashMap<String, f64>,
    /// Weight of a token seen in no document, `log(M + 1)`.
    pub default_weight: f64,
}

impl IdfTable {
    pub fn weight(&self, token: &str) -> f64 {
        self.weights
            .get(token)
            .copied()
            .unwrap_or(self.default_weight)
    }

    pub fn weights_for<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        tokens.iter().map(|t| self.weight(t.as_ref())).collect()
    }
}

pub fn compute_idf<D, T>(tokenized_docs: &[D]) -> Result<IdfTable>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if tokenized_docs.is_empty() {
        return Err(Error::Empty("idf corpus"));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in tokenized_docs {
        let unique: HashSet<&str> = doc.as_ref().iter().map(|t| t.as_ref()).collect();
        for t in unique {
            *df.entry(t.to_string()).or_default() += 1;
        }
    }
    let m = tokenized_docs.len() as f64;
    let weights = df
        .into_iter()
        .map(|(t, c)| (t, ((m + 1.0) / (c as f64 + 1.0)).ln()))
        .collect();
    Ok(IdfTable {
        doc_count: tokenized_docs.len(),
        weights,
        default_weight: (m + 1.0).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<&'static str>> {
        vec![vec!["a", "b", "b"], vec!["a", "c"], vec!["a", "c", "d"]]
    }

    #[test]
    fn hand_computed_weights() {
        let t = compute_idf(&corpus()).unwrap();
        assert_eq!(t.doc_count, 3);
        // "b" occurs in one of three docs: log(4/2)
        assert!((t.weight("b") - (4.0_f64 / 2.0).ln()).abs() < 1e-9);
        assert!((t.weight("b") - (2.0f64).ln()).abs() < 1e-15);
        assert_eq!(t.weight("a"), 0.0);
        assert!((t.weight("zzz") - (4.0f64).ln()).abs() < 1e-15);
        assert_eq!(t.default_weight, (4.0f64).ln());
    }

    #[test]
    fn rarer_tokens_weigh_more() {
        let t = compute_idf(&corpus()).unwrap();
        assert!(t.weight("d") > t.weight("c"));
        assert!(t.weight("c") > t.weight("a"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let docs: Vec<Vec<&str>> = Vec::new();
        assert!(compute_idf(&docs).is_err());
    }
}
