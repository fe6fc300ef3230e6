//! ROUGE-N and ROUGE-L with the source document as the reference.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::ScoreTriple;
use crate::text::word_tokenize;

/// Counted n-grams of one token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramMultiset<'a> {
    pub n: usize,
    pub counts: HashMap<&'a [String], usize>,
}

impl<'a> NgramMultiset<'a> {
    pub fn new(tokens: &'a [String], n: usize) -> Self {
        assert!(n >= 1, "n-gram order must be positive");
        let mut counts = HashMap::new();
        if tokens.len() >= n {
            for gram in tokens.windows(n) {
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
        NgramMultiset { n, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Clipped overlap `Σ min(count_self(g), count_other(g))`.
    pub fn overlap(&self, other: &NgramMultiset<'_>) -> usize {
        self.counts
            .iter()
            .filter_map(|(g, &c)| other.counts.get(g).map(|&o| c.min(o)))
            .sum()
    }
}

pub fn rouge_n(cand: &[String], reference: &[String], n: usize) -> Result<ScoreTriple> {
    if n == 0 {
        return Err(Error::InvalidArgument("rouge_n needs n >= 1".into()));
    }
    let c = NgramMultiset::new(cand, n);
    let r = NgramMultiset::new(reference, n);
    let (ct, rt) = (c.total(), r.total());
    if ct == 0 || rt == 0 {
        return Ok(ScoreTriple::zero());
    }
    let overlap = c.overlap(&r) as f64;
    Ok(ScoreTriple::new(overlap / ct as f64, overlap / rt as f64))
}

/// Longest common subsequence length, two-row dynamic program.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(cand: &[String], reference: &[String]) -> ScoreTriple {
    let l = lcs_len(cand, reference) as f64;
    let ratio = |len: usize| if len == 0 { 0.0 } else { l / len as f64 };
    ScoreTriple::new(ratio(cand.len()), ratio(reference.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    R1,
    R2,
    Rl,
}

impl FromStr for RougeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r1" | "rouge1" | "rouge-1" => Ok(RougeVariant::R1),
            "r2" | "rouge2" | "rouge-2" => Ok(RougeVariant::R2),
            "rl" | "rougel" | "rouge-l" => Ok(RougeVariant::Rl),
            other => Err(Error::InvalidArgument(format!("unknown ROUGE variant {other:?}"))),
        }
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RougeVariant::R1 => "rouge1",
            RougeVariant::R2 => "rouge2",
            RougeVariant::Rl => "rougeL",
        })
    }
}

pub fn rouge_reffree(summary: &str, document: &str, variant: RougeVariant) -> ScoreTriple {
    let cand = word_tokenize(summary);
    let reference = word_tokenize(document);
    match variant {
        RougeVariant::R1 => rouge_n(&cand, &reference, 1).expect("n = 1"),
        RougeVariant::R2 => rouge_n(&cand, &reference, 2).expect("n = 2"),
        RougeVariant::Rl => rouge_l(&cand, &reference),
    }
}
