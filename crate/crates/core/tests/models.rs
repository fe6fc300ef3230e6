mod common;

use common::{encoder, f, fixture_backend, goldens, nli};
use docasref::backend::Backend;
use docasref::sentence::{sent_sim_matrix, SimKind};

fn cosine(a: &ndarray::Array1<f64>, b: &ndarray::Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn cat_matrix_matches_golden() {
    let g = &goldens()["cat"];
    let seq = encoder().embed_tokens(g["text"].as_str().unwrap()).unwrap();
    let tokens: Vec<&str> = g["tokens"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert_eq!(seq.tokens, tokens);
    let rows = g["vectors"].as_array().unwrap();
    assert_eq!(seq.len(), rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            assert!((seq.vectors[[i, j]] - f(v)).abs() <= 1e-4, "row {i} col {j}");
        }
    }
}

#[test]
fn onnx_matches_every_fixture_item() {
    for item in fixture_backend().store().items() {
        let text = item.text.as_deref().unwrap();
        let seq = encoder().embed_tokens(text).unwrap();
        assert_eq!(seq.tokens, item.sequence.tokens, "{}", item.id);
        let dev = (&seq.vectors - &item.sequence.vectors).mapv(f64::abs).fold(0.0_f64, |a, &b| a.max(b));
        assert!(dev <= 1e-4, "{}: max deviation {dev}", item.id);
    }
}

#[test]
fn embedding_is_deterministic() {
    let text = "Emergency crews pumped water from basements until morning.";
    let a = encoder().embed_tokens(text).unwrap();
    let b = encoder().embed_tokens(text).unwrap();
    assert_eq!(a.vectors, b.vectors);
    assert_eq!(a.len(), encoder().tokenize(text).unwrap().len());
}

#[test]
fn sentence_cosine_matches_golden() {
    let g = &goldens()["sentence_cosine"];
    let a = encoder().embed_sentence(g["a"].as_str().unwrap()).unwrap();
    let b = encoder().embed_sentence(g["b"].as_str().unwrap()).unwrap();
    assert!((cosine(&a, &b) - f(&g["cosine"])).abs() <= 1e-4);
    assert!((cosine(&a, &a) - 1.0).abs() <= 1e-6);
}

#[test]
fn one_token_sentence_is_its_vector() {
    let seq = encoder().embed_tokens("cat").unwrap();
    assert_eq!(seq.len(), 1);
    let v = encoder().embed_sentence("cat").unwrap();
    for (x, y) in v.iter().zip(seq.vectors.row(0)) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn nli_goldens() {
    let g = &goldens()["nli_self"];
    let t = g["text"].as_str().unwrap();
    let d = nli().nli_probs(t, t).unwrap();
    assert!((d.entail + d.neutral + d.contradict - 1.0).abs() <= 1e-5);
    assert!(d.entail > d.neutral && d.entail > d.contradict);
    assert!((d.entail - f(&g["entail"])).abs() <= 1e-4);

    let g = &goldens()["nli_pair"];
    let d = nli()
        .nli_probs(g["premise"].as_str().unwrap(), g["hypothesis"].as_str().unwrap())
        .unwrap();
    for (got, key) in [(d.entail, "entail"), (d.neutral, "neutral"), (d.contradict, "contradict")] {
        assert!((got - f(&g[key])).abs() <= 1e-4, "{key}: {got}");
    }
}

#[test]
fn sent_sim_goldens() {
    let g = &goldens()["sent_sim"];
    let strings = |k: &str| -> Vec<String> {
        g[k].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
    };
    let (left, right) = (strings("left"), strings("right"));
    let cos = sent_sim_matrix(&left, &right, SimKind::Cosine, encoder()).unwrap();
    let emc = sent_sim_matrix(&left, &right, SimKind::NliEmC, nli()).unwrap();
    assert_eq!(cos.dim(), (3, 2));
    for (m, key) in [(&cos, "cosine"), (&emc, "e_minus_c")] {
        for (i, row) in g[key].as_array().unwrap().iter().enumerate() {
            for (j, v) in row.as_array().unwrap().iter().enumerate() {
                assert!((m[[i, j]] - f(v)).abs() <= 1e-4, "{key}[{i},{j}]");
            }
        }
    }
}

#[test]
fn classifier_refuses_embedding_and_encoder_refuses_nli() {
    assert!(nli().embed_tokens("The cat sat.").is_err());
    assert!(encoder().nli_probs("a", "b").is_err());
}
