mod common;

use std::collections::HashMap;

use common::{encoder, f, fixture_backend, goldens, pair, pairs};
use docasref::backend::{compute_idf, Backend, IdfTable};
use docasref::lexical::{rouge_reffree, RougeVariant};
use docasref::sentence::{sentence_bertscore, SentenceSimConfig, SimKind, Weighting};
use docasref::token_metrics::{bertscore_reffree, greedy_match_scores, moverscore_greedy, GreedyMatchConfig};

fn pair_idf() -> IdfTable {
    let docs: Vec<Vec<String>> = pairs()
        .iter()
        .map(|p| fixture_backend().tokenize(&p.document).unwrap())
        .collect();
    compute_idf(&docs).unwrap()
}

fn golden_pair(id: &str) -> &'static serde_json::Value {
    goldens()["pairs"].as_array().unwrap().iter().find(|g| g["id"] == id).unwrap()
}

#[test]
fn bertscore_matches_reference_goldens() {
    let plain = GreedyMatchConfig::plain();
    let idf = GreedyMatchConfig::with_idf(pair_idf());
    for p in pairs() {
        let g = golden_pair(&p.id);
        for (cfg, key) in [(&plain, "bertscore"), (&idf, "bertscore_idf")] {
            let t = bertscore_reffree(&p.summary, &p.document, cfg, fixture_backend()).unwrap();
            for (got, c) in [(t.precision, "p"), (t.recall, "r"), (t.f1, "f")] {
                let want = f(&g[key][c]);
                assert!((got - want).abs() <= 1e-4, "{} {key}.{c}: {got} vs {want}", p.id);
            }
        }
    }
}

#[test]
fn pair_three_golden() {
    let p = pair("p03");
    let t = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
    assert!((t.precision - 0.6046758604565173).abs() <= 1e-4);
    assert!((t.recall - 0.43883219672340684).abs() <= 1e-4);
    assert!((t.f1 - 0.5085753470210095).abs() <= 1e-4);
}

#[test]
fn onnx_and_fixture_backends_agree() {
    for p in pairs() {
        let a = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        let b = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), encoder()).unwrap();
        assert!((a.f1 - b.f1).abs() <= 1e-4, "{}", p.id);
    }
}

#[test]
fn moverscore_is_unweighted_recall() {
    for p in pairs() {
        let m = moverscore_greedy(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        let r = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend())
            .unwrap()
            .recall;
        assert!((m - r).abs() <= 1e-12, "{}", p.id);
    }
}

#[test]
fn moverscore_pair_three_by_brute_force() {
    let p = pair("p03");
    let store = fixture_backend().store();
    let (s, d) = (store.get("p03.sum").unwrap(), store.get("p03.doc").unwrap());
    let mut total = 0.0;
    for i in 0..d.len() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..s.len() {
            let dot: f64 = (0..d.dim()).map(|k| d.vectors[[i, k]] * s.vectors[[j, k]]).sum();
            best = best.max(dot);
        }
        total += best;
    }
    let m = moverscore_greedy(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
    assert!((m - total / d.len() as f64).abs() <= 1e-4);
}

#[test]
fn equal_idf_weights_reproduce_plain_scores() {
    let flat = IdfTable {
        doc_count: 1,
        weights: HashMap::new(),
        default_weight: 1.25,
    };
    let cfg = GreedyMatchConfig::with_idf(flat);
    for p in pairs() {
        let plain = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        let weighted = bertscore_reffree(&p.summary, &p.document, &cfg, fixture_backend()).unwrap();
        assert!((plain.precision - weighted.precision).abs() <= 1e-12);
        assert!((plain.recall - weighted.recall).abs() <= 1e-12);
        assert!((plain.f1 - weighted.f1).abs() <= 1e-12);
    }
}

#[test]
fn idf_toggle_changes_some_score() {
    let idf = GreedyMatchConfig::with_idf(pair_idf());
    let changed = pairs().iter().any(|p| {
        let a = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        let b = bertscore_reffree(&p.summary, &p.document, &idf, fixture_backend()).unwrap();
        a != b
    });
    assert!(changed);
}

#[test]
fn identity_law_on_fixture_texts() {
    let cosine = SentenceSimConfig {
        sim_kind: SimKind::Cosine,
        weighting: Weighting::None,
    };
    for item in fixture_backend().store().items() {
        let t = item.text.as_deref().unwrap();
        let b = bertscore_reffree(t, t, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        assert!((b.f1 - 1.0).abs() <= 1e-6, "{}", item.id);
        let m = moverscore_greedy(t, t, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
        assert!((m - 1.0).abs() <= 1e-6, "{}", item.id);
        let s = sentence_bertscore(t, t, &cosine, encoder()).unwrap();
        assert!((s.f1 - 1.0).abs() <= 1e-6, "{}", item.id);
        for v in [RougeVariant::R1, RougeVariant::R2, RougeVariant::Rl] {
            assert_eq!(rouge_reffree(t, t, v).f1, 1.0, "{} {v}", item.id);
        }
    }
}

#[test]
fn off_topic_summary_scores_below_faithful_one() {
    let cfg = GreedyMatchConfig::plain();
    let good = pair("p01");
    let off = pair("p05");
    let g = bertscore_reffree(&good.summary, &good.document, &cfg, fixture_backend()).unwrap();
    let o = bertscore_reffree(&off.summary, &off.document, &cfg, fixture_backend()).unwrap();
    assert!(g.f1 > o.f1);
}

#[test]
fn unknown_text_is_a_fixture_miss() {
    let err = bertscore_reffree("not in the fixture", "nor this", &GreedyMatchConfig::plain(), fixture_backend());
    assert!(matches!(err, Err(docasref::Error::FixtureMiss(_))));
}

#[test]
fn greedy_scores_from_stored_sequences_match_text_api() {
    let store = fixture_backend().store();
    let p = pair("p07");
    let direct = greedy_match_scores(store.get("p07.sum").unwrap(), store.get("p07.doc").unwrap(), false).unwrap();
    let via_text = bertscore_reffree(&p.summary, &p.document, &GreedyMatchConfig::plain(), fixture_backend()).unwrap();
    assert_eq!(direct, via_text);
}
