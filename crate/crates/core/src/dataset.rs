//! Benchmark datasets in the normalized JSONL schema.
//!
//! One JSON object per line, tagged by `kind`:
//!
//! ```text
//! {"kind":"meta","name":"summeval","aspects":["coherence","relevance"]}
//! {"kind":"doc","id":"d1","text":"...","group":null}
//! {"kind":"sum","doc_id":"d1","system_id":"M8","text":"...","ratings":{"coherence":3.5}}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, rename = "group")]
    pub doc_group: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            doc_group: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub doc_id: String,
    pub system_id: String,
    pub text: String,
    #[serde(default)]
    pub ratings: BTreeMap<String, f64>,
}

impl SummaryRecord {
    pub fn key(&self) -> (String, String) {
        (self.doc_id.clone(), self.system_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub documents: Vec<Document>,
    pub summaries: Vec<SummaryRecord>,
    pub aspects: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Jsonl,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Meta {
        name: String,
        aspects: Vec<String>,
    },
    Doc(Document),
    Sum(SummaryRecord),
}

impl Dataset {
    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Documents sharing `doc_id`'s group, in dataset order. A document without
    /// a group forms a group of one.
    pub fn group_of(&self, doc_id: &str) -> Vec<&Document> {
        match self.document(doc_id) {
            None => Vec::new(),
            Some(d) => match &d.doc_group {
                None => vec![d],
                Some(g) => self
                    .documents
                    .iter()
                    .filter(|o| o.doc_group.as_deref() == Some(g.as_str()))
                    .collect(),
            },
        }
    }

    /// Checks every dataset invariant.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for d in &self.documents {
            if d.text.trim().is_empty() {
                return Err(Error::Dataset(format!("document {} has empty text", d.id)));
            }
            if !ids.insert(d.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate document id {}", d.id)));
            }
        }
        let aspects: HashSet<&str> = self.aspects.iter().map(String::as_str).collect();
        let mut keys = HashSet::new();
        for s in &self.summaries {
            if !ids.contains(s.doc_id.as_str()) {
                return Err(Error::Dataset(format!(
                    "summary ({}, {}) references unknown document",
                    s.doc_id, s.system_id
                )));
            }
            if !keys.insert((s.doc_id.as_str(), s.system_id.as_str())) {
                return Err(Error::DuplicateSummary {
                    doc_id: s.doc_id.clone(),
                    system_id: s.system_id.clone(),
                });
            }
            for (aspect, v) in &s.ratings {
                if !aspects.contains(aspect.as_str()) {
                    return Err(Error::Dataset(format!(
                        "summary ({}, {}) rates unknown aspect {aspect}",
                        s.doc_id, s.system_id
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::Dataset(format!(
                        "summary ({}, {}) has non-finite rating for {aspect}",
                        s.doc_id, s.system_id
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DatasetFormat::Jsonl => parse_jsonl(&raw),
    }
}

pub fn parse_jsonl(raw: &str) -> Result<Dataset> {
    let mut meta: Option<(String, Vec<String>)> = None;
    let mut documents = Vec::new();
    let mut summaries = Vec::new();
    let mut sum_lines = Vec::new();
    let mut doc_lines: HashMap<String, usize> = HashMap::new();

    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        match parsed {
            Line::Meta { name, aspects } => {
                if meta.is_some() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "second meta line".into(),
                    });
                }
                meta = Some((name, aspects));
            }
            Line::Doc(d) => {
                if d.text.trim().is_empty() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("document {} has empty text", d.id),
                    });
                }
                if let Some(prev) = doc_lines.insert(d.id.clone(), lineno) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("document id {} already defined on line {prev}", d.id),
                    });
                }
                documents.push(d);
            }
            Line::Sum(s) => {
                summaries.push(s);
                sum_lines.push(lineno);
            }
        }
    }

    let (name, aspects) = meta.ok_or_else(|| Error::Dataset("missing meta line".into()))?;
    let aspect_set: HashSet<&str> = aspects.iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    for (s, &lineno) in summaries.iter().zip(&sum_lines) {
        if !seen.insert((s.doc_id.as_str(), s.system_id.as_str())) {
            return Err(Error::DuplicateSummary {
                doc_id: s.doc_id.clone(),
                system_id: s.system_id.clone(),
            });
        }
        if !doc_lines.contains_key(&s.doc_id) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unknown doc_id {}", s.doc_id),
            });
        }
        if let Some(bad) = s.ratings.keys().find(|a| !aspect_set.contains(a.as_str())) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unknown aspect {bad}"),
            });
        }
    }

    let ds = Dataset {
        name,
        documents,
        summaries,
        aspects,
    };
    ds.validate()?;
    Ok(ds)
}

/// Serializes into the JSONL schema: meta line, then documents, then summaries.
pub fn to_jsonl(ds: &Dataset) -> Result<String> {
    let mut out = String::new();
    let mut push = |line: &Line| -> Result<()> {
        out.push_str(&serde_json::to_string(line).map_err(|e| Error::Dataset(e.to_string()))?);
        out.push('\n');
        Ok(())
    };
    push(&Line::Meta {
        name: ds.name.clone(),
        aspects: ds.aspects.clone(),
    })?;
    for d in &ds.documents {
        push(&Line::Doc(d.clone()))?;
    }
    for s in &ds.summaries {
        push(&Line::Sum(s.clone()))?;
    }
    Ok(out)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = to_jsonl(ds)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}
