use std::path::{Path, PathBuf};

use ndarray::Array1;
use sha2::{Digest, Sha256};

use super::fixture::{load_fixture, save_fixture, FixtureStore};
use super::{Backend, EmbeddingSequence, NliDistribution};
use crate::error::Result;

/// Environment variable naming the on-disk embedding cache directory.
pub const CACHE_DIR_ENV: &str = "DOCASREF_CACHE_DIR";

/// Wraps a backend and memoizes `embed_tokens` results as one fixture file per text.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    salt: String,
}

impl<B: Backend> CachedBackend<B> {
    /// `salt` must change whenever the inner backend's output could (model, layer, length policy).
    pub fn new(inner: B, dir: impl Into<PathBuf>, salt: impl Into<String>) -> Self {
        CachedBackend {
            inner,
            dir: dir.into(),
            salt: salt.into(),
        }
    }

    /// Cache under `$DOCASREF_CACHE_DIR` when set, otherwise `None`.
    pub fn from_env(inner: B, salt: impl Into<String>) -> std::result::Result<Self, B> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Ok(CachedBackend::new(inner, dir, salt)),
            _ => Err(inner),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry(&self, text: &str) -> PathBuf {
        let mut h = Sha256::new();
        for part in [self.inner.model_id(), self.salt.as_str(), text] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        self.dir.join(format!("{}.json", hex::encode(h.finalize())))
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence> {
        let path = self.entry(text);
        if let Ok(store) = load_fixture(&path) {
            if let Some(item) = store.items().first() {
                if item.text.as_deref() == Some(text) {
                    return Ok(item.sequence.clone());
                }
            }
        }
        let seq = self.inner.embed_tokens(text)?;
        let mut store = FixtureStore::new(seq.model_id.clone(), seq.layer, seq.dim());
        store.insert("cached", Some(text.to_string()), seq.clone())?;
        // A failed write only costs a recomputation next time.
        if std::fs::create_dir_all(&self.dir).is_ok() {
            let _ = save_fixture(&store, &path);
        }
        Ok(seq)
    }

    fn embed_sentence(&self, text: &str) -> Result<Array1<f64>> {
        self.embed_tokens(text)?.mean_vector()
    }

    fn nli_probs(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution> {
        self.inner.nli_probs(premise, hypothesis)
    }

    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        self.inner.tokenize(text)
    }
}
