mod common;

use std::collections::BTreeSet;

use compsent::corpus::{stratified_holdout_split, Label};
use compsent::eval::{compute_metrics, stratified_kfold};
use compsent::features::{fit_vocabulary, vectorize_bow, SparseVector, Weighting};
use compsent::mine::{build_index, query_pair, sentence_matches, TargetPair};
use compsent::models::{
    deserialize_model, logreg_gradient, logreg_objective, serialize_model, train_gbdt, train_gbdt_with_history,
    Classifier, Model, ModelKind, ModelParams, TrainConfig,
};
use compsent::preprocess::{partition, tokenize, TargetSpans};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = Label> {
    (0usize..3).prop_map(|i| Label::from_index(i).unwrap())
}

/// Small nonnegative sparse rows over `dim` features.
fn rows(dim: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<SparseVector>> {
    prop::collection::vec(prop::collection::vec(0u8..4, dim), n).prop_map(move |rs| {
        rs.into_iter()
            .map(|r| SparseVector::from_dense(&r.iter().map(|&v| v as f64).collect::<Vec<_>>()))
            .collect()
    })
}

fn labelled(dim: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<SparseVector>, Vec<Label>)> {
    rows(dim, n).prop_flat_map(|x| {
        let len = x.len();
        (Just(x), prop::collection::vec(label(), len))
    })
}

fn small_gbdt(estimators: usize) -> TrainConfig {
    TrainConfig {
        estimators,
        max_depth: 3,
        ..TrainConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn micro_f1_equals_accuracy(pairs in prop::collection::vec((label(), label()), 1000)) {
        let (gold, pred): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
        let r = compute_metrics(&gold, &pred).unwrap();
        let acc = gold.iter().zip(&pred).filter(|(g, p)| g == p).count() as f64 / 1000.0;
        prop_assert!((r.micro_f1 - r.accuracy).abs() < 1e-12);
        prop_assert!((r.accuracy - acc).abs() < 1e-12);
    }

    #[test]
    fn partition_reconstructs(
        words in prop::collection::vec("[a-z]{1,6}", 2..30),
        cuts in prop::collection::vec(0usize..1000, 4),
    ) {
        let n = words.len();
        let mut c: Vec<usize> = cuts.iter().map(|v| v % (n + 1)).collect();
        c.sort();
        // Non-empty target spans: first = [c0, c1+1), second = [c2+1, c3+2) clamped.
        let f0 = c[0].min(n - 2);
        let f1 = (c[1].max(f0 + 1)).min(n - 1);
        let s0 = c[2].max(f1).min(n - 1);
        let s1 = c[3].max(s0 + 1).min(n);
        let spans = TargetSpans { first: f0..f1, second: s0..s1, swapped: false };
        let parts = partition(&words, &spans).unwrap();
        prop_assert_eq!(parts.reconstruct(), words);
    }

    #[test]
    fn binary_is_sign_of_tf(docs in prop::collection::vec(prop::collection::vec("[a-d]", 1..12), 1..8)) {
        let vocab = fit_vocabulary(&docs, (1, 2), 1).unwrap();
        for d in &docs {
            let tf = vectorize_bow(d, &vocab, Weighting::Tf);
            let bin = vectorize_bow(d, &vocab, Weighting::Binary);
            for j in 0..vocab.len() {
                prop_assert_eq!(bin.get(j), if tf.get(j) > 0.0 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn stratification_within_one(labels in prop::collection::vec(label(), 10..300), seed in 0u64..1000) {
        let ds = compsent::corpus::Dataset::new(
            labels.iter().enumerate().map(|(i, &l)| compsent::corpus::LabeledSentence {
                id: format!("s{i}"),
                text: "a b".into(),
                object_a: "a".into(),
                object_b: "b".into(),
                label: l,
                domain: "d".into(),
                confidence: 1.0,
                pos_tags: None,
                parse: None,
            }).collect(),
            "p",
        ).unwrap();
        for k in [2usize, 5, 10] {
            let plan = stratified_kfold(&ds, k, seed).unwrap();
            let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for l in [Label::None, Label::Better, Label::Worse] {
                let per: Vec<usize> = plan.folds.iter()
                    .map(|f| f.iter().filter(|&&i| labels[i] == l).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            let mut all: Vec<usize> = plan.folds.concat();
            all.sort();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            prop_assert_eq!(&plan, &stratified_kfold(&ds, k, seed).unwrap());
        }
        let a = stratified_holdout_split(&ds, 0.8, seed).unwrap();
        let b = stratified_holdout_split(&ds, 0.8, seed).unwrap();
        prop_assert_eq!(a.0.sentences(), b.0.sentences());
        prop_assert_eq!(a.1.sentences(), b.1.sentences());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boosting_loss_never_increases((x, y) in labelled(5, 4..40)) {
        let (_, history) = train_gbdt_with_history(&x, &y, &small_gbdt(15)).unwrap();
        prop_assert_eq!(history.len(), 16);
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "loss rose {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn gbdt_ignores_row_order((x, y) in labelled(4, 2..30), seed in 0u64..100) {
        let cfg = small_gbdt(5);
        let a = train_gbdt(&x, &y, &cfg).unwrap();
        let mut order: Vec<usize> = (0..x.len()).collect();
        compsent::rng::shuffle(&mut order, &mut compsent::rng::seeded(seed));
        let xs: Vec<SparseVector> = order.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<Label> = order.iter().map(|&i| y[i]).collect();
        let b = train_gbdt(&xs, &ys, &cfg).unwrap();
        let ba = serialize_model(&Model::Gbdt(a)).unwrap();
        let bb = serialize_model(&Model::Gbdt(b)).unwrap();
        prop_assert_eq!(ba, bb);
    }

    #[test]
    fn single_round_scores_scale_with_shrinkage((x, y) in labelled(4, 2..30)) {
        let one = train_gbdt(&x, &y, &TrainConfig { shrinkage: 1.0, ..small_gbdt(1) }).unwrap();
        let tenth = train_gbdt(&x, &y, &TrainConfig { shrinkage: 0.1, ..small_gbdt(1) }).unwrap();
        for xi in &x {
            let a = one.raw_scores(xi).unwrap();
            let b = tenth.raw_scores(xi).unwrap();
            let init = one.initial_scores();
            for k in 0..3 {
                prop_assert!(((a[k] - init[k]) * 0.1 - (b[k] - init[k])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn logreg_gradient_matches_finite_differences(
        (x, y) in labelled(3, 2..12),
        w in prop::collection::vec(-1.0f64..1.0, 9),
        b in prop::array::uniform3(-1.0f64..1.0),
        l2 in 0.0f64..0.5,
    ) {
        let (gw, gb) = logreg_gradient(&w, &b, &x, &y, l2);
        let h = 1e-5;
        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * h);
            (analytic - numeric).abs() <= 1e-3 * analytic.abs().max(numeric.abs()).max(1e-3)
        };
        for j in 0..w.len() {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let ok = check(gw[j], logreg_objective(&wp, &b, &x, &y, l2), logreg_objective(&wm, &b, &x, &y, l2));
            prop_assert!(ok, "weight {} analytic {}", j, gw[j]);
        }
        for k in 0..3 {
            let mut bp = b;
            bp[k] += h;
            let mut bm = b;
            bm[k] -= h;
            let ok = check(gb[k], logreg_objective(&w, &bp, &x, &y, l2), logreg_objective(&w, &bm, &x, &y, l2));
            prop_assert!(ok, "bias {} analytic {}", k, gb[k]);
        }
    }
}

#[test]
fn serialization_round_trip_preserves_predictions() {
    let ds_rows = {
        let mut r = compsent::rng::seeded(7);
        use rand::Rng as _;
        (0..200)
            .map(|_| {
                let v: Vec<f64> = (0..12).map(|_| if r.gen_bool(0.3) { r.gen_range(0..3) as f64 } else { 0.0 }).collect();
                let l = Label::from_index(((v[0] + v[3]) as usize) % 3).unwrap();
                (SparseVector::from_dense(&v), l)
            })
            .collect::<Vec<_>>()
    };
    let (x, y): (Vec<SparseVector>, Vec<Label>) = ds_rows.into_iter().unzip();
    let probes: Vec<SparseVector> = {
        let mut r = compsent::rng::seeded(8);
        use rand::Rng as _;
        (0..100)
            .map(|_| SparseVector::from_dense(&(0..12).map(|_| r.gen_range(-1.0..4.0)).collect::<Vec<_>>()))
            .collect()
    };
    let params = ModelParams {
        gbdt: small_gbdt(20),
        ..ModelParams::default()
    };
    for kind in [ModelKind::Gbdt, ModelKind::Logreg, ModelKind::NaiveBayes, ModelKind::Majority] {
        let model = compsent::models::train_model(kind, &x, &y, &params).unwrap();
        let bytes = serialize_model(&model).unwrap();
        let back = deserialize_model(&bytes).unwrap();
        assert_eq!(serialize_model(&back).unwrap(), bytes, "{kind:?}");
        for p in &probes {
            // Naive Bayes needs nonnegative counts.
            let p = if kind == ModelKind::NaiveBayes {
                SparseVector::from_dense(&p.to_dense().iter().map(|v| v.max(0.0)).collect::<Vec<_>>())
            } else {
                p.clone()
            };
            assert_eq!(model.predict(&p).unwrap(), back.predict(&p).unwrap(), "{kind:?}");
        }
    }
}

#[test]
fn gbdt_training_is_deterministic() {
    let ds = common::small_corpus(3);
    let docs: Vec<Vec<String>> = ds.sentences().iter().map(|s| tokenize(&s.text).into_iter().map(|t| t.lower).collect()).collect();
    let vocab = fit_vocabulary(&docs, (1, 1), 1).unwrap();
    let x: Vec<SparseVector> = docs.iter().map(|d| vectorize_bow(d, &vocab, Weighting::Binary)).collect();
    let cfg = small_gbdt(30);
    let a = serialize_model(&Model::Gbdt(train_gbdt(&x, &ds.labels(), &cfg).unwrap())).unwrap();
    let b = serialize_model(&Model::Gbdt(train_gbdt(&x, &ds.labels(), &cfg).unwrap())).unwrap();
    assert_eq!(a, b);
}

fn random_sentences(n: usize, seed: u64) -> Vec<(String, String)> {
    use rand::Rng as _;
    const WORDS: [&str; 24] = [
        "python", "matlab", "windows", "8", "linux", "is", "better", "than", "worse", "faster", "the", "a", "and",
        "for", "beats", "slower", "tea", "coffee", "i", "like", "not", "n't", "really", "uses",
    ];
    let mut r = compsent::rng::seeded(seed);
    (0..n)
        .map(|i| {
            let len = r.gen_range(3..14);
            let text: Vec<&str> = (0..len).map(|_| WORDS[r.gen_range(0..WORDS.len())]).collect();
            (format!("id{i:05}"), text.join(" "))
        })
        .collect()
}

#[test]
fn mine_query_matches_brute_force_on_10k_sentences() {
    let sentences = random_sentences(10_000, 11);
    let index = build_index(sentences.clone()).unwrap();
    let cues: BTreeSet<String> = ["better", "worse", "faster", "slower"].iter().map(|s| s.to_string()).collect();
    let items = ["python", "matlab", "windows 8", "linux", "tea", "coffee", "the a", "i like"];
    let toks: Vec<Vec<String>> =
        sentences.iter().map(|(_, t)| tokenize(t).into_iter().map(|t| t.lower).collect()).collect();
    let split = |s: &str| -> Vec<String> { tokenize(s).into_iter().map(|t| t.lower).collect() };
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            let pair = TargetPair {
                item_a: a.to_string(),
                item_b: b.to_string(),
                pair_type: "t".into(),
            };
            for cue in [None, Some(&cues)] {
                let got = query_pair(&index, &pair, cue);
                let want: Vec<String> = sentences
                    .iter()
                    .zip(&toks)
                    .filter(|(_, t)| sentence_matches(t, &split(a), &split(b), cue))
                    .map(|((id, _), _)| id.clone())
                    .collect();
                assert_eq!(got, want, "{a} / {b} cue {}", cue.is_some());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mine_query_matches_brute_force(n in 1usize..200, seed in 0u64..1000, ia in 0usize..4, ib in 0usize..4) {
        let items = ["python", "windows 8", "tea", "than"];
        prop_assume!(ia != ib);
        let sentences = random_sentences(n, seed);
        let index = build_index(sentences.clone()).unwrap();
        let pair = TargetPair { item_a: items[ia].into(), item_b: items[ib].into(), pair_type: "t".into() };
        let split = |s: &str| -> Vec<String> { tokenize(s).into_iter().map(|t| t.lower).collect() };
        let want: Vec<String> = sentences.iter()
            .filter(|(_, t)| sentence_matches(&split(t), &split(items[ia]), &split(items[ib]), None))
            .map(|(id, _)| id.clone()).collect();
        prop_assert_eq!(query_pair(&index, &pair, None), want);
    }
}
