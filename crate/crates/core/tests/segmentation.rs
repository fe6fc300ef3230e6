mod common;

use docasref::text::{split_sentences, word_tokenize};
use serde::Deserialize;

#[derive(Deserialize)]
struct Labeled {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn hand_labeled_corpus() {
    let raw = std::fs::read_to_string(common::fixtures().join("sentences.json")).unwrap();
    let corpus: Vec<Labeled> = serde_json::from_str(&raw).unwrap();
    let total: usize = corpus.iter().map(|c| c.sentences.len()).sum();
    assert!(total >= 50);
    for c in &corpus {
        assert_eq!(split_sentences(&c.text), c.sentences, "{:?}", c.text);
    }
}

#[test]
fn examples() {
    assert_eq!(split_sentences("A. B? C!"), ["A.", "B?", "C!"]);
    assert!(split_sentences("").is_empty());
    assert_eq!(
        split_sentences("Dr. Smith left. He returned."),
        ["Dr. Smith left.", "He returned."]
    );
    assert_eq!(word_tokenize("The cat sat."), ["the", "cat", "sat"]);
    assert_eq!(word_tokenize("state-of-the-art"), ["state", "of", "the", "art"]);
    assert!(word_tokenize("").is_empty());
}

#[test]
fn splitting_is_lossless_up_to_whitespace() {
    let raw = std::fs::read_to_string(common::fixtures().join("sentences.json")).unwrap();
    let corpus: Vec<Labeled> = serde_json::from_str(&raw).unwrap();
    for c in &corpus {
        let squash = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(squash(&split_sentences(&c.text).join(" ")), squash(&c.text));
    }
}
