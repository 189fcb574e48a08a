use std::collections::HashSet;

use lexiclass::corpus::{
    preprocess, stratified_folds, synthesize_corpus, tokenize, Corpus, Label, LabeledInstance,
};
use proptest::prelude::*;

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z0-9]{1,8}",
        "[àÀéÉßııİ]{1,4}",
        Just("http://t.co/Ab1".to_string()),
        Just("HTTPS://EXAMPLE.com/x?q=1".to_string()),
        Just("www.Site.org".to_string()),
        Just("\u{1F602}".to_string()),
        Just("no\u{1F680}mid".to_string()),
        Just("ht\u{1F602}tp://hidden.url".to_string()),
        Just("\u{1F1FA}\u{1F1F8}".to_string()),
        Just("a\u{200D}b\u{FE0F}".to_string()),
    ]
}

fn raw_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(piece(), 0..12),
        proptest::sample::select(vec![" ", "  ", "\t", "\n", " \t "]),
    )
        .prop_map(|(pieces, sep)| pieces.join(sep))
}

proptest! {
    #[test]
    fn preprocess_is_idempotent_on_structured_text(raw in raw_text()) {
        let once = preprocess(&raw);
        prop_assert_eq!(preprocess(&once), once);
    }

    #[test]
    fn preprocess_is_idempotent_on_arbitrary_text(raw in any::<String>()) {
        let once = preprocess(&raw);
        prop_assert_eq!(preprocess(&once), once);
    }

    #[test]
    fn preprocess_output_is_clean(raw in raw_text()) {
        let text = preprocess(&raw);
        prop_assert_eq!(text.clone(), text.to_lowercase());
        for token in text.split(' ') {
            prop_assert!(!token.starts_with("http://"));
            prop_assert!(!token.starts_with("https://"));
            prop_assert!(!token.starts_with("www."));
        }
        for c in text.chars() {
            let cp = c as u32;
            prop_assert!(!(0x1F300..=0x1F9FF).contains(&cp), "emoji {cp:#x} kept");
            prop_assert!(cp != 0xFE0F && cp != 0x200D);
        }
        // single spaces only, no edge whitespace
        prop_assert!(!text.contains("  "));
        prop_assert_eq!(text.trim(), &text);
    }

    #[test]
    fn tokens_reassemble_the_text(raw in raw_text()) {
        let text = preprocess(&raw);
        let tokens = tokenize(&text);
        prop_assert_eq!(tokens.join(" "), text);
        for token in &tokens {
            prop_assert!(!token.is_empty());
            prop_assert!(!token.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn folds_partition_and_stratify(
        counts in [2usize..30, 2usize..30, 2usize..30],
        k in 2usize..5,
        seed in any::<u64>(),
    ) {
        prop_assume!(counts.iter().all(|&c| c >= k));
        let corpus = synthesize_corpus(seed ^ 0x5eed, counts, 0.5);
        let folds = stratified_folds(&corpus, k, seed).unwrap();

        let mut seen = HashSet::new();
        for fold in 0..k {
            let (train, test) = folds.split(&corpus, fold);
            prop_assert_eq!(train.len() + test.len(), corpus.len());
            for &p in &test {
                prop_assert!(seen.insert(p), "position {p} in two folds");
            }
            // per-class counts are balanced to within one
            for label in Label::ALL {
                let in_fold = test
                    .iter()
                    .filter(|&&p| corpus.instances()[p].label == label)
                    .count();
                let total = counts[label.index()];
                prop_assert!(
                    in_fold == total / k || in_fold == total / k + 1,
                    "{in_fold} of {total} in one of {k} folds"
                );
            }
        }
        prop_assert_eq!(seen.len(), corpus.len());
    }
}

#[test]
fn folds_depend_only_on_inputs() {
    let corpus = synthesize_corpus(1, [20, 25, 30], 0.4);
    let a = stratified_folds(&corpus, 5, 123).unwrap();
    let b = stratified_folds(&corpus, 5, 123).unwrap();
    let c = stratified_folds(&corpus, 5, 124).unwrap();
    let ids: Vec<u32> = corpus.instances().iter().map(|i| i.id).collect();
    assert!(ids.iter().all(|&id| a.fold_of(id) == b.fold_of(id)));
    assert!(ids.iter().any(|&id| a.fold_of(id) != c.fold_of(id)));
}

#[test]
fn corpus_rejects_text_column_reuse_of_ids() {
    let instances = vec![
        LabeledInstance::new(7, "one", Label::Ok),
        LabeledInstance::new(7, "two", Label::Hate),
    ];
    assert!(Corpus::from_instances(instances).is_err());
}
