use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision / recall / F1 produced by every pairwise metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    /// Builds the triple with the harmonic mean; a non-positive `precision + recall` gives `f1 = 0`.
    pub fn new(precision: f64, recall: f64) -> Self {
        let denom = precision + recall;
        let f1 = if denom > 0.0 {
            2.0 * precision * recall / denom
        } else {
            0.0
        };
        ScoreTriple {
            precision,
            recall,
            f1,
        }
    }

    pub fn zero() -> Self {
        ScoreTriple::new(0.0, 0.0)
    }

    pub fn component(&self, c: Component) -> Option<f64> {
        match c {
            Component::P => Some(self.precision),
            Component::R => Some(self.recall),
            Component::F => Some(self.f1),
            Component::Scalar => None,
        }
    }
}

/// Which number of a metric's output is being correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    P,
    R,
    F,
    Scalar,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::P => "p",
            Component::R => "r",
            Component::F => "f",
            Component::Scalar => "scalar",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "precision" => Ok(Component::P),
            "r" | "recall" => Ok(Component::R),
            "f" | "f1" => Ok(Component::F),
            "scalar" => Ok(Component::Scalar),
            other => Err(Error::InvalidArgument(format!("unknown component {other:?}"))),
        }
    }
}

/// Output of a pairwise metric: either a P/R/F triple or a single number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Triple(ScoreTriple),
    Scalar(f64),
}

impl MetricValue {
    pub fn component(&self, c: Component) -> Result<f64> {
        match (self, c) {
            (MetricValue::Scalar(v), Component::Scalar) => Ok(*v),
            (MetricValue::Triple(t), c) if c != Component::Scalar => {
                Ok(t.component(c).expect("non-scalar component"))
            }
            (MetricValue::Scalar(_), c) => Err(Error::InvalidArgument(format!(
                "scalar metric has no component {c}"
            ))),
            (MetricValue::Triple(_), _) => Err(Error::InvalidArgument(
                "triple metric needs component p, r or f".into(),
            )),
        }
    }
}

impl From<ScoreTriple> for MetricValue {
    fn from(t: ScoreTriple) -> Self {
        MetricValue::Triple(t)
    }
}
