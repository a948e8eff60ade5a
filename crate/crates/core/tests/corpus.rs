use std::collections::BTreeSet;

use overlap_check::corpus::{Corpus, Example, Label, Role, Source};
use proptest::prelude::*;

fn arb_example(index: usize) -> impl Strategy<Value = Example> {
    (
        any::<String>(),
        prop::option::of(any::<bool>()),
        prop_oneof![Just(Source::Manual), Just(Source::Distant), Just(Source::Pseudo)],
        0.0f64..10.0,
    )
        .prop_map(move |(text, label, source, weight)| {
            let label = label.map(|b| if b { Label::Positive } else { Label::Negative });
            // manual and pseudo examples must be labelled
            let label = match source {
                Source::Distant => label,
                _ => label.or(Some(Label::Negative)),
            };
            Example::new(format!("id-{index}-\u{e9}\"\n"), text, label, source, weight).unwrap()
        })
}

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    (0usize..40)
        .prop_flat_map(|n| (0..n).map(arb_example).collect::<Vec<_>>())
        .prop_map(|examples| Corpus::new(examples, Role::Mixed).unwrap())
}

fn labeled(n: usize) -> Corpus {
    let examples = (0..n)
        .map(|i| Example::manual(format!("e{i}"), format!("text {i}"), if i % 2 == 0 { Label::Positive } else { Label::Negative }))
        .collect();
    Corpus::new(examples, Role::Labeled).unwrap()
}

fn ids(c: &Corpus) -> Vec<String> {
    c.iter().map(|e| e.id.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jsonl_round_trip(corpus in arb_corpus()) {
        let text = corpus.to_jsonl_string();
        let back = Corpus::from_jsonl_str(&text).unwrap();
        prop_assert_eq!(back.examples(), corpus.examples());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        corpus.save_jsonl(&path).unwrap();
        let loaded = Corpus::load_jsonl_as(&path, Role::Mixed).unwrap();
        prop_assert_eq!(loaded, corpus);
    }

    #[test]
    fn split_partitions_and_is_deterministic(n in 0usize..300, train in 0.05f64..0.6, val in 0.05f64..0.35, seed in any::<u64>()) {
        let corpus = labeled(n);
        let (a, b, c) = corpus.split(train, val, seed).unwrap();
        prop_assert_eq!(a.len(), (n as f64 * train).floor() as usize);
        prop_assert_eq!(b.len(), (n as f64 * val).floor() as usize);
        prop_assert_eq!(a.len() + b.len() + c.len(), n);
        let all: BTreeSet<String> = [&a, &b, &c].iter().flat_map(|p| ids(p)).collect();
        prop_assert_eq!(all.len(), n);

        let (a2, b2, c2) = corpus.split(train, val, seed).unwrap();
        prop_assert_eq!((ids(&a), ids(&b), ids(&c)), (ids(&a2), ids(&b2), ids(&c2)));
    }

    #[test]
    fn holdout_partitions(n in 0usize..300, val in 0.01f64..0.99, seed in any::<u64>()) {
        let corpus = labeled(n);
        let (train, held) = corpus.holdout(val, seed).unwrap();
        prop_assert_eq!(held.len(), (n as f64 * val).floor() as usize);
        let mut all: Vec<String> = ids(&train).into_iter().chain(ids(&held)).collect();
        all.sort();
        let mut expected = ids(&corpus);
        expected.sort();
        prop_assert_eq!(all, expected);
    }
}

#[test]
fn loader_reports_line_numbers() {
    let err = Corpus::from_jsonl_str("{\"id\":\"a\",\"text\":\"x\",\"label\":1}\n\n{\"id\":\"b\",\"text\":\"y\",\"label\":3}\n")
        .unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    let dup = Corpus::from_jsonl_str("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
    assert!(dup.is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = Corpus::load_jsonl(std::path::Path::new("/nonexistent/pool.jsonl")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
