#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use docasref::backend::{FixtureBackend, OnnxBackend};
use serde::Deserialize;
use serde_json::Value;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Clone, Deserialize)]
pub struct Pair {
    pub id: String,
    pub document: String,
    pub summary: String,
}

pub fn pairs() -> Vec<Pair> {
    #[derive(Deserialize)]
    struct File {
        pairs: Vec<Pair>,
    }
    let raw = std::fs::read_to_string(fixtures().join("pairs.json")).unwrap();
    serde_json::from_str::<File>(&raw).unwrap().pairs
}

pub fn pair(id: &str) -> Pair {
    pairs().into_iter().find(|p| p.id == id).unwrap()
}

pub fn goldens() -> &'static Value {
    static G: OnceLock<Value> = OnceLock::new();
    G.get_or_init(|| {
        let raw = std::fs::read_to_string(fixtures().join("goldens.json")).unwrap();
        serde_json::from_str(&raw).unwrap()
    })
}

pub fn fixture_backend() -> &'static FixtureBackend {
    static B: OnceLock<FixtureBackend> = OnceLock::new();
    B.get_or_init(|| FixtureBackend::from_path(fixtures().join("fixture.json")).unwrap())
}

pub fn encoder() -> &'static OnnxBackend {
    static B: OnceLock<OnnxBackend> = OnceLock::new();
    B.get_or_init(|| OnnxBackend::from_config_file(fixtures().join("mini/encoder.toml")).unwrap())
}

pub fn nli() -> &'static OnnxBackend {
    static B: OnceLock<OnnxBackend> = OnceLock::new();
    B.get_or_init(|| OnnxBackend::from_config_file(fixtures().join("mini/nli.toml")).unwrap())
}

pub fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}
