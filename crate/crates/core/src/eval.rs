//! Evaluation harness: stratified cross-validation, the majority baseline,
//! the multi-system oracle bound, learning curves and per-class feature
//! rankings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{majority_label, Corpus, FoldAssignment, Label};
use crate::error::Error;
use crate::features::{build_vocabulary, vectorize, FeatureSpec, SparseVector, Vocabulary};
use crate::rng;
use crate::scalar::Scalar;
use crate::svm::{train_ovr, LinearModel, TrainingParams, TrainingProblem};
use crate::Result;

/// Everything a run needs beyond the data, folds and feature specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c: f64,
    pub bias: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub min_df: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c: 1.0,
            bias: 1.0,
            tolerance: 0.1,
            max_iterations: 1000,
            min_df: 1,
        }
    }
}

impl Hyperparams {
    pub fn training_params(&self) -> TrainingParams {
        TrainingParams {
            c: self.c,
            bias: self.bias,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

/// One held-out prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: u32,
    pub fold: usize,
    pub gold: Label,
    pub predicted: Label,
}

/// Counts indexed `[gold][predicted]` in canonical label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix([[u64; 3]; 3]);

impl ConfusionMatrix {
    pub fn add(&mut self, gold: Label, predicted: Label) {
        self.0[gold.index()][predicted.index()] += 1;
    }

    pub fn count(&self, gold: Label, predicted: Label) -> u64 {
        self.0[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let correct: u64 = (0..3).map(|i| self.0[i][i]).sum();
        correct as f64 / total as f64
    }

    /// Rows rescaled to sum to one; all-zero rows stay zero.
    pub fn row_normalized(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (row, counts) in out.iter_mut().zip(&self.0) {
            let sum: u64 = counts.iter().sum();
            if sum > 0 {
                for (cell, &count) in row.iter_mut().zip(counts) {
                    *cell = count as f64 / sum as f64;
                }
            }
        }
        out
    }

    /// CSV with a `gold` key column and one column per predicted label.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("gold,HATE,OFFENSIVE,OK\n");
        for gold in Label::ALL {
            out.push_str(gold.name());
            for predicted in Label::ALL {
                out.push(',');
                out.push_str(&self.count(gold, predicted).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Tally a confusion matrix from prediction records.
pub fn confusion_matrix(records: &[PredictionRecord]) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::default();
    for record in records {
        matrix.add(record.gold, record.predicted);
    }
    matrix
}

/// Full result of one cross-validated run. Serializes deterministically:
/// records are sorted by instance id and no timestamps or paths appear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub spec_set: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub hyperparameters: Hyperparams,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub overall_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub records: Vec<PredictionRecord>,
}

const REPORT_FORMAT_VERSION: u32 = 1;

impl EvaluationReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let report: EvaluationReport = serde_json::from_str(json)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported report format version {}",
                report.format_version
            )));
        }
        Ok(report)
    }
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, variance.sqrt())
}

fn assemble_report(
    spec_set: Vec<String>,
    k: usize,
    seed: u64,
    hyper: &Hyperparams,
    fold_accuracies: Vec<f64>,
    mut records: Vec<PredictionRecord>,
) -> EvaluationReport {
    records.sort_unstable_by_key(|r| r.id);
    let confusion = confusion_matrix(&records);
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        spec_set,
        k,
        seed,
        hyperparameters: *hyper,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        overall_accuracy: confusion.accuracy(),
        confusion,
        records,
    }
}

fn fold_problem<F: Scalar>(
    corpus: &Corpus,
    train_positions: &[usize],
    specs: &[FeatureSpec],
    hyper: &Hyperparams,
) -> Result<(Vocabulary, TrainingProblem<F>)> {
    let train_instances = train_positions.iter().map(|&p| &corpus.instances()[p]);
    let vocabulary = build_vocabulary(train_instances, specs, hyper.min_df)?;
    let features: Vec<SparseVector<F>> = train_positions
        .iter()
        .map(|&p| vectorize(&vocabulary, &corpus.instances()[p]))
        .collect();
    let labels: Vec<Label> = train_positions
        .iter()
        .map(|&p| corpus.instances()[p].label)
        .collect();
    let problem = TrainingProblem::new(features, labels)?;
    Ok((vocabulary, problem))
}

fn evaluate_positions<F: Scalar>(
    corpus: &Corpus,
    vocabulary: &Vocabulary,
    model: &LinearModel<F>,
    test_positions: &[usize],
    fold: usize,
) -> Result<Vec<PredictionRecord>> {
    test_positions
        .iter()
        .map(|&p| {
            let inst = &corpus.instances()[p];
            let x: SparseVector<F> = vectorize(vocabulary, inst);
            Ok(PredictionRecord {
                id: inst.id,
                fold,
                gold: inst.label,
                predicted: model.predict(&x)?,
            })
        })
        .collect()
}

/// Cross-validate with freshly drawn stratified folds.
pub fn cross_validate<F: Scalar>(
    corpus: &Corpus,
    specs: &[FeatureSpec],
    k: usize,
    seed: u64,
    hyper: &Hyperparams,
) -> Result<EvaluationReport> {
    let folds = crate::corpus::stratified_folds(corpus, k, seed)?;
    cross_validate_with_folds::<F>(corpus, &folds, specs, seed, hyper)
}

/// Cross-validate on existing folds, so several runs (feature sets, the
/// baseline, learning curves) share identical splits.
///
/// Per fold: a vocabulary is built from the training side only, one
/// one-vs-rest model is trained with a fold-derived seed, and the held-out
/// side is predicted. Folds run in parallel; results are identical to a
/// sequential run.
pub fn cross_validate_with_folds<F: Scalar>(
    corpus: &Corpus,
    folds: &FoldAssignment,
    specs: &[FeatureSpec],
    seed: u64,
    hyper: &Hyperparams,
) -> Result<EvaluationReport> {
    let params = hyper.training_params();
    params.validate()?;
    let per_fold: Vec<(f64, Vec<PredictionRecord>)> = (0..folds.k())
        .into_par_iter()
        .map(|fold| {
            let (train_positions, test_positions) = folds.split(corpus, fold);
            let (vocabulary, problem) =
                fold_problem::<F>(corpus, &train_positions, specs, hyper)?;
            let trained = train_ovr(&problem, &params, rng::mix_seed(seed, fold as u64))?;
            let records = evaluate_positions(
                corpus,
                &vocabulary,
                &trained.model,
                &test_positions,
                fold,
            )?;
            let correct = records.iter().filter(|r| r.gold == r.predicted).count();
            let accuracy = correct as f64 / records.len() as f64;
            Ok((accuracy, records))
        })
        .collect::<Result<_>>()?;

    let mut fold_accuracies = Vec::with_capacity(folds.k());
    let mut records = Vec::with_capacity(corpus.len());
    for (accuracy, fold_records) in per_fold {
        fold_accuracies.push(accuracy);
        records.extend(fold_records);
    }
    let spec_set = specs.iter().map(|s| s.tag()).collect();
    Ok(assemble_report(
        spec_set,
        folds.k(),
        seed,
        hyper,
        fold_accuracies,
        records,
    ))
}

/// Cross-validate the majority-class baseline on existing folds. The
/// prediction for every test instance of a fold is the most frequent label
/// on that fold's training side.
pub fn cross_validate_majority(
    corpus: &Corpus,
    folds: &FoldAssignment,
    seed: u64,
    hyper: &Hyperparams,
) -> Result<EvaluationReport> {
    let mut fold_accuracies = Vec::with_capacity(folds.k());
    let mut records = Vec::with_capacity(corpus.len());
    for fold in 0..folds.k() {
        let (train_positions, test_positions) = folds.split(corpus, fold);
        let train_labels: Vec<Label> = train_positions
            .iter()
            .map(|&p| corpus.instances()[p].label)
            .collect();
        let majority = majority_label(&train_labels)
            .ok_or_else(|| Error::Argument("empty training side".into()))?;
        let mut correct = 0usize;
        for &p in &test_positions {
            let inst = &corpus.instances()[p];
            if inst.label == majority {
                correct += 1;
            }
            records.push(PredictionRecord {
                id: inst.id,
                fold,
                gold: inst.label,
                predicted: majority,
            });
        }
        fold_accuracies.push(correct as f64 / test_positions.len() as f64);
    }
    Ok(assemble_report(
        vec!["majority".to_string()],
        folds.k(),
        seed,
        hyper,
        fold_accuracies,
        records,
    ))
}

/// Fraction of instances at least one system labels correctly.
///
/// Every slice must hold records for the same instances in the same
/// id-sorted order with identical gold labels.
pub fn oracle_accuracy(systems: &[&[PredictionRecord]]) -> Result<f64> {
    let first = systems
        .first()
        .ok_or_else(|| Error::Argument("oracle needs at least one system".into()))?;
    if first.is_empty() {
        return Err(Error::Argument("oracle needs at least one record".into()));
    }
    for window in first.windows(2) {
        if window[0].id >= window[1].id {
            return Err(Error::Argument("records must be sorted by unique id".into()));
        }
    }
    for other in &systems[1..] {
        if other.len() != first.len() {
            return Err(Error::Argument(format!(
                "systems cover {} and {} instances",
                first.len(),
                other.len()
            )));
        }
        for (a, b) in first.iter().zip(*other) {
            if a.id != b.id || a.gold != b.gold {
                return Err(Error::Argument(format!(
                    "record mismatch at id {} vs {}",
                    a.id, b.id
                )));
            }
        }
    }
    let hits = (0..first.len())
        .filter(|&i| systems.iter().any(|s| s[i].predicted == s[i].gold))
        .count();
    Ok(hits as f64 / first.len() as f64)
}

/// One measured point of a learning curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub mean_train_size: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Accuracy as a function of training set size, measured on fixed folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningCurve {
    pub format_version: u32,
    pub spec_set: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub hyperparameters: Hyperparams,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("fraction,mean_train_size,mean_accuracy,std_accuracy\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.fraction, p.mean_train_size, p.mean_accuracy, p.std_accuracy
            ));
        }
        out
    }
}

/// Split `total` across classes proportionally to `counts`, exactly.
///
/// Integer quotas are floored and the leftover units go to the largest
/// fractional remainders (ties to the earlier class), never exceeding a
/// class's available count. Requires `total <= sum(counts)`.
fn proportional_targets(total: usize, counts: [usize; 3]) -> [usize; 3] {
    let n: usize = counts.iter().sum();
    assert!(total <= n, "cannot select {total} from {n}");
    if n == 0 {
        return [0; 3];
    }
    let mut targets = [0usize; 3];
    let mut remainders = [0usize; 3];
    let mut assigned = 0;
    for c in 0..3 {
        targets[c] = total * counts[c] / n;
        remainders[c] = (total * counts[c]) % n;
        assigned += targets[c];
    }
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&c| (std::cmp::Reverse(remainders[c]), c));
    let mut leftover = total - assigned;
    for &c in order.iter().cycle().take(6) {
        if leftover == 0 {
            break;
        }
        if targets[c] < counts[c] {
            targets[c] += 1;
            leftover -= 1;
        }
    }
    debug_assert_eq!(targets.iter().sum::<usize>(), total);
    targets
}

/// Measure accuracy at growing training set sizes on shared folds.
///
/// For each fold, the training side is shuffled once per class; a point at
/// fraction `f` keeps the first `round(f * train_size)` instances, split
/// across classes proportionally, in corpus order. Subsets are nested
/// across fractions, and the fraction-1.0 point reproduces
/// [`cross_validate_with_folds`] exactly (same per-fold seeds, same data).
pub fn learning_curve<F: Scalar>(
    corpus: &Corpus,
    folds: &FoldAssignment,
    specs: &[FeatureSpec],
    seed: u64,
    hyper: &Hyperparams,
    fractions: &[f64],
) -> Result<LearningCurve> {
    if fractions.is_empty() {
        return Err(Error::Argument("no curve fractions given".into()));
    }
    for &f in fractions {
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(Error::Argument(format!(
                "curve fraction {f} must be in (0, 1]"
            )));
        }
    }
    let params = hyper.training_params();
    params.validate()?;
    let k = folds.k();

    // per fold: (train size, accuracy per fraction)
    let per_fold: Vec<(usize, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (train_positions, test_positions) = folds.split(corpus, fold);
            let mut by_class: [Vec<usize>; 3] = Default::default();
            for &p in &train_positions {
                by_class[corpus.instances()[p].label.index()].push(p);
            }
            let mut shuffle_rng = rng::seeded(rng::mix_seed(seed, (k + fold) as u64));
            for class_positions in &mut by_class {
                rng::shuffle(class_positions, &mut shuffle_rng);
            }
            let counts = [by_class[0].len(), by_class[1].len(), by_class[2].len()];
            let train_size = train_positions.len();

            let mut accuracies = Vec::with_capacity(fractions.len());
            for &fraction in fractions {
                let total = ((fraction * train_size as f64).round() as usize)
                    .clamp(1, train_size);
                let targets = proportional_targets(total, counts);
                let mut selected: Vec<usize> = Vec::with_capacity(total);
                for (class_positions, &target) in by_class.iter().zip(&targets) {
                    selected.extend_from_slice(&class_positions[..target]);
                }
                selected.sort_unstable();

                let (vocabulary, problem) =
                    fold_problem::<F>(corpus, &selected, specs, hyper)?;
                let trained =
                    train_ovr(&problem, &params, rng::mix_seed(seed, fold as u64))?;
                let records = evaluate_positions(
                    corpus,
                    &vocabulary,
                    &trained.model,
                    &test_positions,
                    fold,
                )?;
                let correct = records.iter().filter(|r| r.gold == r.predicted).count();
                accuracies.push(correct as f64 / records.len() as f64);
            }
            Ok((train_size, accuracies))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(fractions.len());
    for (idx, &fraction) in fractions.iter().enumerate() {
        let fold_accuracies: Vec<f64> = per_fold.iter().map(|(_, acc)| acc[idx]).collect();
        let mean_train_size = per_fold
            .iter()
            .map(|&(size, _)| {
                ((fraction * size as f64).round() as usize).clamp(1, size) as f64
            })
            .sum::<f64>()
            / k as f64;
        let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
        points.push(CurvePoint {
            fraction,
            mean_train_size,
            fold_accuracies,
            mean_accuracy,
            std_accuracy,
        });
    }
    Ok(LearningCurve {
        format_version: REPORT_FORMAT_VERSION,
        spec_set: specs.iter().map(|s| s.tag()).collect(),
        k,
        seed,
        hyperparameters: *hyper,
        points,
    })
}

/// One feature with its weight in one one-vs-rest classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub spec: String,
    pub surface: String,
    pub weight: f64,
}

/// The `per_class` highest-weight features of each class, weight
/// descending; ties resolve by vocabulary key so the output is stable.
pub fn top_features<F: Scalar>(
    model: &LinearModel<F>,
    vocabulary: &Vocabulary,
    per_class: usize,
) -> Result<Vec<(Label, Vec<FeatureWeight>)>> {
    if model.dim() as usize != vocabulary.len() {
        return Err(Error::Dimension(format!(
            "model dimension {} does not match vocabulary size {}",
            model.dim(),
            vocabulary.len()
        )));
    }
    if let Some(model_vocab) = model.vocab_id() {
        if model_vocab != vocabulary.vocab_id() {
            return Err(Error::Argument(
                "model was trained on a different vocabulary".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(3);
    for label in Label::ALL {
        let weights = model.class_weights(label);
        let mut ids: Vec<u32> = (0..vocabulary.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            let wa = weights[a as usize].to_f64().unwrap_or(f64::NEG_INFINITY);
            let wb = weights[b as usize].to_f64().unwrap_or(f64::NEG_INFINITY);
            wb.partial_cmp(&wa)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| {
                    let (sa, fa) = vocabulary.entry(a).expect("id in range");
                    let (sb, fb) = vocabulary.entry(b).expect("id in range");
                    (sa.tag(), fa).cmp(&(sb.tag(), fb))
                })
        });
        let top: Vec<FeatureWeight> = ids
            .into_iter()
            .take(per_class)
            .map(|id| {
                let (spec, surface) = vocabulary.entry(id).expect("id in range");
                FeatureWeight {
                    spec: spec.tag(),
                    surface: surface.to_string(),
                    weight: weights[id as usize].to_f64().unwrap_or(f64::NAN),
                }
            })
            .collect();
        out.push((label, top));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{stratified_folds, synthesize_corpus};

    fn record(id: u32, gold: Label, predicted: Label) -> PredictionRecord {
        PredictionRecord {
            id,
            fold: 0,
            gold,
            predicted,
        }
    }

    #[test]
    fn confusion_matrix_counts_and_normalizes() {
        let records = vec![
            record(0, Label::Hate, Label::Hate),
            record(1, Label::Hate, Label::Offensive),
            record(2, Label::Offensive, Label::Offensive),
            record(3, Label::Ok, Label::Hate),
        ];
        let m = confusion_matrix(&records);
        assert_eq!(m.count(Label::Hate, Label::Hate), 1);
        assert_eq!(m.count(Label::Hate, Label::Offensive), 1);
        assert_eq!(m.count(Label::Ok, Label::Hate), 1);
        assert_eq!(m.total(), 4);
        assert_eq!(m.accuracy(), 0.5);
        let norm = m.row_normalized();
        assert_eq!(norm[0], [0.5, 0.5, 0.0]);
        assert_eq!(norm[2], [1.0, 0.0, 0.0]);
        assert_eq!(
            m.to_csv_string(),
            "gold,HATE,OFFENSIVE,OK\nHATE,1,1,0\nOFFENSIVE,0,1,0\nOK,1,0,0\n"
        );
    }

    #[test]
    fn mean_std_population_form() {
        let (mean, std) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(mean, 5.0);
        assert_eq!(std, 2.0);
    }

    #[test]
    fn oracle_counts_union_of_correct() {
        let gold = [Label::Hate, Label::Offensive, Label::Ok];
        let a: Vec<_> = (0..3)
            .map(|i| record(i as u32, gold[i], if i == 0 { gold[0] } else { Label::Hate }))
            .collect();
        let b: Vec<_> = (0..3)
            .map(|i| record(i as u32, gold[i], if i == 1 { gold[1] } else { Label::Ok }))
            .collect();
        // a correct on {0}, b correct on {1, 2}: b predicts OK for id 2
        let oracle = oracle_accuracy(&[&a, &b]).unwrap();
        assert_eq!(oracle, 1.0);
        let single = oracle_accuracy(&[&a]).unwrap();
        assert!((single - 1.0 / 3.0).abs() < 1e-12);

        let misaligned = vec![a[0], a[2]];
        assert!(oracle_accuracy(&[&a, &misaligned]).is_err());
        assert!(oracle_accuracy(&[]).is_err());
    }

    #[test]
    fn proportional_targets_sum_exactly() {
        assert_eq!(proportional_targets(10, [5, 3, 2]), [5, 3, 2]);
        assert_eq!(proportional_targets(5, [5, 3, 2]), [3, 1, 1]);
        assert_eq!(proportional_targets(1, [8, 1, 1]), [1, 0, 0]);
        assert_eq!(proportional_targets(0, [4, 4, 4]), [0, 0, 0]);
        for total in 0..=12 {
            let t = proportional_targets(total, [7, 4, 1]);
            assert_eq!(t.iter().sum::<usize>(), total);
            assert!(t[0] <= 7 && t[1] <= 4 && t[2] <= 1);
        }
    }

    #[test]
    fn cross_validation_is_perfect_on_disjoint_vocabularies() {
        let corpus = synthesize_corpus(21, [9, 9, 9], 0.0);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let report =
            cross_validate::<f64>(&corpus, &specs, 3, 42, &Hyperparams::default()).unwrap();
        assert_eq!(report.k, 3);
        assert_eq!(report.fold_accuracies, vec![1.0; 3]);
        assert_eq!(report.mean_accuracy, 1.0);
        assert_eq!(report.std_accuracy, 0.0);
        assert_eq!(report.overall_accuracy, 1.0);
        assert_eq!(report.records.len(), 27);
        for pair in report.records.windows(2) {
            assert!(pair[0].id < pair[1].id);
        }
        for label in Label::ALL {
            assert_eq!(report.confusion.count(label, label), 9);
        }
    }

    #[test]
    fn majority_accuracy_tracks_class_share() {
        let corpus = synthesize_corpus(3, [4, 10, 6], 0.5);
        let folds = stratified_folds(&corpus, 2, 7).unwrap();
        let report =
            cross_validate_majority(&corpus, &folds, 7, &Hyperparams::default()).unwrap();
        assert_eq!(report.spec_set, vec!["majority".to_string()]);
        // OFFENSIVE is the majority on both training sides
        assert_eq!(report.overall_accuracy, 0.5);
        assert!(report
            .records
            .iter()
            .all(|r| r.predicted == Label::Offensive));
    }

    #[test]
    fn report_json_round_trips() {
        let corpus = synthesize_corpus(5, [6, 6, 6], 0.2);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let report =
            cross_validate::<f64>(&corpus, &specs, 2, 1, &Hyperparams::default()).unwrap();
        let json = report.to_json_string().unwrap();
        let back = EvaluationReport::from_json_str(&json).unwrap();
        assert_eq!(back.to_json_string().unwrap(), json);
        let bad = json.replace("\"format_version\":1", "\"format_version\":3");
        assert!(EvaluationReport::from_json_str(&bad).is_err());
    }

    #[test]
    fn full_curve_point_reproduces_cross_validation() {
        let corpus = synthesize_corpus(8, [10, 12, 14], 0.4);
        let folds = stratified_folds(&corpus, 3, 99).unwrap();
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let hyper = Hyperparams::default();
        let report =
            cross_validate_with_folds::<f64>(&corpus, &folds, &specs, 99, &hyper).unwrap();
        let curve =
            learning_curve::<f64>(&corpus, &folds, &specs, 99, &hyper, &[0.5, 1.0]).unwrap();
        assert_eq!(curve.points.len(), 2);
        let full = &curve.points[1];
        assert_eq!(full.fold_accuracies, report.fold_accuracies);
        assert_eq!(full.mean_accuracy, report.mean_accuracy);
        assert_eq!(full.mean_train_size, 24.0);
        // fold train sizes 23, 24, 25 halve (rounded) to 12, 12, 13
        let half = &curve.points[0];
        assert!((half.mean_train_size - 37.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn curve_rejects_bad_fractions() {
        let corpus = synthesize_corpus(2, [4, 4, 4], 0.0);
        let folds = stratified_folds(&corpus, 2, 0).unwrap();
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let hyper = Hyperparams::default();
        for bad in [&[][..], &[0.0][..], &[1.5][..], &[f64::NAN][..]] {
            assert!(learning_curve::<f64>(&corpus, &folds, &specs, 0, &hyper, bad).is_err());
        }
    }

    #[test]
    fn top_features_rank_class_markers_first() {
        let corpus = synthesize_corpus(17, [12, 12, 12], 0.3);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let vocab = build_vocabulary(corpus.instances().iter(), &specs, 1).unwrap();
        let features: Vec<SparseVector<f64>> = corpus
            .instances()
            .iter()
            .map(|i| vectorize(&vocab, i))
            .collect();
        let problem = TrainingProblem::new(features, corpus.labels()).unwrap();
        let mut model = train_ovr(&problem, &Hyperparams::default().training_params(), 1)
            .unwrap()
            .model;
        model.set_vocab_id(vocab.vocab_id());

        let ranked = top_features(&model, &vocab, 5).unwrap();
        assert_eq!(ranked.len(), 3);
        for (label, rows) in &ranked {
            assert_eq!(rows.len(), 5);
            let marker = ["ha", "of", "ok"][label.index()];
            for row in rows {
                assert!(
                    row.surface.starts_with(marker),
                    "{} ranked for {label}",
                    row.surface
                );
            }
            for pair in rows.windows(2) {
                assert!(pair[0].weight >= pair[1].weight);
            }
        }

        let other = build_vocabulary(corpus.instances().iter().take(5), &specs, 1).unwrap();
        assert!(top_features(&model, &other, 3).is_err());
    }
}
