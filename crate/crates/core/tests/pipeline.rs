//! End-to-end behavior of the corpus -> features -> classifier ->
//! evaluation pipeline on synthetic corpora with known structure.

use lexiclass::corpus::{stratified_folds, synthesize_corpus};
use lexiclass::eval::{
    cross_validate, cross_validate_majority, cross_validate_with_folds, learning_curve,
    oracle_accuracy, Hyperparams,
};
use lexiclass::features::FeatureSpec;

fn specs(tags: &[&str]) -> Vec<FeatureSpec> {
    tags.iter().map(|t| FeatureSpec::parse(t).unwrap()).collect()
}

#[test]
fn disjoint_class_vocabularies_are_learned_perfectly() {
    let corpus = synthesize_corpus(100, [30, 30, 30], 0.0);
    let report = cross_validate::<f64>(
        &corpus,
        &specs(&["word:1", "char:3"]),
        5,
        42,
        &Hyperparams::default(),
    )
    .unwrap();
    assert!(
        report.mean_accuracy >= 0.95,
        "accuracy {} on separable data",
        report.mean_accuracy
    );
}

#[test]
fn fully_shared_vocabulary_collapses_to_chance() {
    let mut diffs = Vec::new();
    for seed in [7u64, 19, 31] {
        let corpus = synthesize_corpus(seed, [50, 50, 50], 1.0);
        let folds = stratified_folds(&corpus, 5, seed).unwrap();
        let hyper = Hyperparams::default();
        let svm = cross_validate_with_folds::<f64>(
            &corpus,
            &folds,
            &specs(&["word:1", "skip:1"]),
            seed,
            &hyper,
        )
        .unwrap();
        let majority = cross_validate_majority(&corpus, &folds, seed, &hyper).unwrap();
        diffs.push(svm.overall_accuracy - majority.overall_accuracy);
    }
    let mean_diff = diffs.iter().sum::<f64>() / diffs.len() as f64;
    assert!(
        mean_diff.abs() < 0.08,
        "signal-free corpus scored {mean_diff:+.3} vs baseline"
    );
}

#[test]
fn reports_are_reproducible_per_seed() {
    let corpus = synthesize_corpus(55, [15, 20, 25], 0.6);
    let hyper = Hyperparams::default();
    let sp = specs(&["char:2", "word:1"]);
    let a = cross_validate::<f64>(&corpus, &sp, 4, 9, &hyper).unwrap();
    let b = cross_validate::<f64>(&corpus, &sp, 4, 9, &hyper).unwrap();
    assert_eq!(
        a.to_json_string().unwrap(),
        b.to_json_string().unwrap()
    );
    let c = cross_validate::<f64>(&corpus, &sp, 4, 10, &hyper).unwrap();
    assert_ne!(
        a.records.iter().map(|r| r.fold).collect::<Vec<_>>(),
        c.records.iter().map(|r| r.fold).collect::<Vec<_>>()
    );
}

#[test]
fn majority_baseline_equals_class_share_exactly() {
    let corpus = synthesize_corpus(2, [30, 40, 30], 0.9);
    let folds = stratified_folds(&corpus, 10, 42).unwrap();
    let report = cross_validate_majority(&corpus, &folds, 42, &Hyperparams::default()).unwrap();
    // every fold's training side keeps the same majority class, so the
    // pooled accuracy is exactly its overall share
    assert_eq!(report.overall_accuracy, 0.4);
    assert_eq!(report.records.len(), 100);
}

#[test]
fn more_training_data_does_not_hurt_separable_data() {
    let corpus = synthesize_corpus(77, [24, 24, 24], 0.0);
    let folds = stratified_folds(&corpus, 3, 5).unwrap();
    let curve = learning_curve::<f64>(
        &corpus,
        &folds,
        &specs(&["word:1"]),
        5,
        &Hyperparams::default(),
        &[0.25, 1.0],
    )
    .unwrap();
    let small = curve.points[0].mean_accuracy;
    let full = curve.points[1].mean_accuracy;
    assert!(full >= small - 1e-9, "full {full} below subsampled {small}");
    assert!(full >= 0.95);
}

#[test]
fn oracle_dominates_every_member_system() {
    let corpus = synthesize_corpus(12, [25, 25, 25], 0.7);
    let folds = stratified_folds(&corpus, 5, 3).unwrap();
    let hyper = Hyperparams::default();
    let a =
        cross_validate_with_folds::<f64>(&corpus, &folds, &specs(&["word:1"]), 3, &hyper).unwrap();
    let b =
        cross_validate_with_folds::<f64>(&corpus, &folds, &specs(&["char:2"]), 3, &hyper).unwrap();
    let oracle = oracle_accuracy(&[&a.records, &b.records]).unwrap();
    assert!(oracle >= a.overall_accuracy - 1e-12);
    assert!(oracle >= b.overall_accuracy - 1e-12);
    assert!(oracle <= 1.0);
}

#[test]
fn f32_pipeline_agrees_with_f64_on_easy_data() {
    let corpus = synthesize_corpus(31, [12, 12, 12], 0.0);
    let sp = specs(&["word:1"]);
    let hyper = Hyperparams::default();
    let wide = cross_validate::<f64>(&corpus, &sp, 3, 8, &hyper).unwrap();
    let narrow = cross_validate::<f32>(&corpus, &sp, 3, 8, &hyper).unwrap();
    assert_eq!(wide.overall_accuracy, 1.0);
    assert_eq!(narrow.overall_accuracy, 1.0);
}
