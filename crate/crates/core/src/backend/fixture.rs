//! Committed embedding fixtures and the backend that serves them.
//!
//! File layout:
//!
//! ```text
//! {"model_id":str,"layer":int,"dim":int,
//!  "items":[{"id":str,"text":str?,"tokens":[str],"vectors":[[num]],"idf":[num]|null}]}
//! ```
//!
//! `text` is optional; when present the backend can answer `embed_tokens(text)`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Backend, EmbeddingSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureFile {
    model_id: String,
    layer: usize,
    dim: usize,
    items: Vec<FixtureItemRaw>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureItemRaw {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    idf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureItem {
    pub id: String,
    pub text: Option<String>,
    pub sequence: EmbeddingSequence,
}

/// Immutable, validated set of fixture sequences in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureStore {
    pub model_id: String,
    pub layer: usize,
    pub dim: usize,
    items: Vec<FixtureItem>,
    by_id: HashMap<String, usize>,
    by_text: HashMap<String, usize>,
}

impl FixtureStore {
    pub fn new(model_id: impl Into<String>, layer: usize, dim: usize) -> Self {
        FixtureStore {
            model_id: model_id.into(),
            layer,
            dim,
            items: Vec::new(),
            by_id: HashMap::new(),
            by_text: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, text: Option<String>, sequence: EmbeddingSequence) -> Result<()> {
        let id = id.into();
        if sequence.dim() != self.dim {
            return Err(Error::Fixture {
                id,
                message: format!("vector length {} but fixture dim is {}", sequence.dim(), self.dim),
            });
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::Fixture {
                id,
                message: "duplicate id".into(),
            });
        }
        let idx = self.items.len();
        self.by_id.insert(id.clone(), idx);
        if let Some(t) = &text {
            self.by_text.entry(t.clone()).or_insert(idx);
        }
        self.items.push(FixtureItem { id, text, sequence });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[FixtureItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingSequence> {
        self.by_id.get(id).map(|&i| &self.items[i].sequence)
    }

    pub fn by_text(&self, text: &str) -> Option<&FixtureItem> {
        self.by_text.get(text).map(|&i| &self.items[i])
    }

    pub fn sequences(&self) -> HashMap<String, EmbeddingSequence> {
        self.items
            .iter()
            .map(|it| (it.id.clone(), it.sequence.clone()))
            .collect()
    }
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<FixtureStore> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixture(&raw)
}

fn parse_fixture(raw: &str) -> Result<FixtureStore> {
    let file: FixtureFile = serde_json::from_str(raw).map_err(|e| Error::Fixture {
        id: "<file>".into(),
        message: e.to_string(),
    })?;
    let mut store = FixtureStore::new(file.model_id, file.layer, file.dim);
    for item in file.items {
        let id = item.id;
        let fail = |message: String| Error::Fixture {
            id: id.clone(),
            message,
        };
        if item.tokens.len() != item.vectors.len() {
            return Err(fail(format!(
                "{} tokens but {} vectors",
                item.tokens.len(),
                item.vectors.len()
            )));
        }
        if item.tokens.is_empty() {
            return Err(fail("no tokens".into()));
        }
        if let Some((row, v)) = item.vectors.iter().enumerate().find(|(_, v)| v.len() != store.dim) {
            return Err(fail(format!(
                "vector {row} has length {} but fixture dim is {}",
                v.len(),
                store.dim
            )));
        }
        let flat: Vec<f64> = item.vectors.into_iter().flatten().collect();
        let vectors = Array2::from_shape_vec((item.tokens.len(), store.dim), flat)
            .map_err(|e| fail(e.to_string()))?;
        let seq = EmbeddingSequence::new(item.tokens, vectors, item.idf, store.model_id.clone(), store.layer)
            .map_err(|e| fail(e.to_string()))?;
        store.insert(id.clone(), item.text, seq)?;
    }
    Ok(store)
}

/// Writes the store; floats use shortest round-trip decimals.
pub fn save_fixture(store: &FixtureStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = FixtureFile {
        model_id: store.model_id.clone(),
        layer: store.layer,
        dim: store.dim,
        items: store
            .items
            .iter()
            .map(|it| FixtureItemRaw {
                id: it.id.clone(),
                text: it.text.clone(),
                tokens: it.sequence.tokens.clone(),
                vectors: it.sequence.vectors.rows().into_iter().map(|r| r.to_vec()).collect(),
                idf: it.sequence.idf.clone(),
            })
            .collect(),
    };
    let body = serde_json::to_string(&file).map_err(|e| Error::Fixture {
        id: "<file>".into(),
        message: e.to_string(),
    })?;
    fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
}

/// Serves embeddings straight from a [`FixtureStore`], looking texts up exactly.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    store: FixtureStore,
}

impl FixtureBackend {
    pub fn new(store: FixtureStore) -> Self {
        FixtureBackend { store }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(FixtureBackend::new(load_fixture(path)?))
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl Backend for FixtureBackend {
    fn model_id(&self) -> &str {
        &self.store.model_id
    }

    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence> {
        self.store
            .by_text(text)
            .map(|it| it.sequence.clone())
            .ok_or_else(|| Error::FixtureMiss(text.chars().take(60).collect()))
    }
}
