//! The five subcommands. Each computes everything first and only then
//! writes its output files, so a failed run leaves no partial artifacts.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lexiclass::corpus::{load_csv, preprocess, stratified_folds, tokenize, Corpus, Label};
use lexiclass::eval::{
    cross_validate_majority, cross_validate_with_folds, learning_curve, oracle_accuracy,
    top_features, EvaluationReport, Hyperparams,
};
use lexiclass::features::{build_vocabulary, vectorize_processed, Vocabulary};
use lexiclass::svm::train_ovr;
use lexiclass::{LinearModel64, SparseVector64, TrainingProblem64};
use serde::Serialize;

use crate::config::{CommonSettings, FeatureEntry};

fn load_corpus(settings: &CommonSettings) -> Result<Corpus> {
    let corpus = load_csv(
        &settings.data,
        &settings.text_col,
        &settings.label_col,
        &settings.label_map,
    )
    .with_context(|| format!("loading {}", settings.data.display()))?;
    let [hate, offensive, ok] = corpus.class_counts();
    eprintln!(
        "loaded {} instances ({hate} HATE, {offensive} OFFENSIVE, {ok} OK)",
        corpus.len()
    );
    Ok(corpus)
}

/// Planned file writes, flushed together once computation succeeded.
struct Outputs {
    root: PathBuf,
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    fn new(root: &Path) -> Self {
        Outputs {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, relative: impl AsRef<Path>, content: String) {
        self.files.push((self.root.join(relative), content));
    }

    fn write(self) -> Result<()> {
        for (path, content) in self.files {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(&path, content)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn run_entries(
    corpus: &Corpus,
    settings: &CommonSettings,
) -> Result<Vec<(String, EvaluationReport)>> {
    let folds = stratified_folds(corpus, settings.k, settings.seed)?;
    let mut results = Vec::with_capacity(settings.entries.len());
    for entry in &settings.entries {
        let report = match entry {
            FeatureEntry::Majority => {
                cross_validate_majority(corpus, &folds, settings.seed, &settings.hyper)?
            }
            FeatureEntry::Model { specs, .. } => cross_validate_with_folds::<f64>(
                corpus,
                &folds,
                specs,
                settings.seed,
                &settings.hyper,
            )?,
        };
        eprintln!(
            "{}: mean {:.4} +- {:.4}, overall {:.4}",
            entry.slug(),
            report.mean_accuracy,
            report.std_accuracy,
            report.overall_accuracy
        );
        results.push((entry.slug().to_string(), report));
    }
    Ok(results)
}

fn summary_csv(results: &[(String, EvaluationReport)]) -> String {
    let mut out = String::from("features,mean_accuracy,std_accuracy,overall_accuracy\n");
    for (slug, report) in results {
        out.push_str(&format!(
            "{slug},{},{},{}\n",
            report.mean_accuracy, report.std_accuracy, report.overall_accuracy
        ));
    }
    out
}

/// Cross-validate every requested feature entry and write reports.
pub fn cmd_evaluate(settings: &CommonSettings) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let results = run_entries(&corpus, settings)?;

    let mut outputs = Outputs::new(&settings.out);
    if let [(_, report)] = results.as_slice() {
        outputs.add("report.json", report.to_json_string()?);
        outputs.add("confusion.csv", report.confusion.to_csv_string());
    } else {
        for (slug, report) in &results {
            outputs.add(format!("{slug}/report.json"), report.to_json_string()?);
            outputs.add(format!("{slug}/confusion.csv"), report.confusion.to_csv_string());
        }
        outputs.add("summary.csv", summary_csv(&results));
    }
    outputs.write()?;

    println!("{:<18} {:>8} {:>8} {:>8}", "features", "mean", "std", "overall");
    for (slug, report) in &results {
        println!(
            "{:<18} {:>8.4} {:>8.4} {:>8.4}",
            slug, report.mean_accuracy, report.std_accuracy, report.overall_accuracy
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleSystem {
    features: String,
    mean_accuracy: f64,
    overall_accuracy: f64,
}

#[derive(Serialize)]
struct OracleReport {
    format_version: u32,
    k: usize,
    seed: u64,
    hyperparameters: Hyperparams,
    systems: Vec<OracleSystem>,
    best_system: String,
    best_accuracy: f64,
    majority_accuracy: Option<f64>,
    oracle_accuracy: f64,
}

/// Cross-validate all entries and score the oracle that counts an
/// instance as correct when any trained system labels it correctly.
pub fn cmd_oracle(settings: &CommonSettings) -> Result<()> {
    if !settings
        .entries
        .iter()
        .any(|e| matches!(e, FeatureEntry::Model { .. }))
    {
        bail!("the oracle needs at least one trainable feature entry");
    }
    let corpus = load_corpus(settings)?;
    let results = run_entries(&corpus, settings)?;

    let mut systems = Vec::new();
    let mut member_records = Vec::new();
    let mut majority_accuracy = None;
    for ((slug, report), entry) in results.iter().zip(&settings.entries) {
        match entry {
            FeatureEntry::Majority => majority_accuracy = Some(report.overall_accuracy),
            FeatureEntry::Model { .. } => {
                systems.push(OracleSystem {
                    features: slug.clone(),
                    mean_accuracy: report.mean_accuracy,
                    overall_accuracy: report.overall_accuracy,
                });
                member_records.push(report.records.as_slice());
            }
        }
    }
    let oracle = oracle_accuracy(&member_records)?;
    let best = systems
        .iter()
        .max_by(|a, b| a.overall_accuracy.total_cmp(&b.overall_accuracy))
        .expect("at least one system");
    let report = OracleReport {
        format_version: 1,
        k: settings.k,
        seed: settings.seed,
        hyperparameters: settings.hyper,
        best_system: best.features.clone(),
        best_accuracy: best.overall_accuracy,
        majority_accuracy,
        oracle_accuracy: oracle,
        systems,
    };

    let mut outputs = Outputs::new(&settings.out);
    outputs.add("oracle.json", serde_json::to_string(&report)?);
    outputs.write()?;

    println!(
        "best {} {:.4}, oracle {:.4} over {} systems",
        report.best_system,
        report.best_accuracy,
        report.oracle_accuracy,
        report.systems.len()
    );
    Ok(())
}

/// Measure learning curves for every requested feature entry.
pub fn cmd_curve(settings: &CommonSettings, fractions: &[f64]) -> Result<()> {
    if settings.entries.iter().any(|e| matches!(e, FeatureEntry::Majority)) {
        bail!("learning curves need trainable feature entries, not `majority`");
    }
    let corpus = load_corpus(settings)?;
    let folds = stratified_folds(&corpus, settings.k, settings.seed)?;

    let mut curves = Vec::new();
    for entry in &settings.entries {
        let specs = entry.specs().expect("majority rejected above");
        let curve = learning_curve::<f64>(
            &corpus,
            &folds,
            specs,
            settings.seed,
            &settings.hyper,
            fractions,
        )?;
        for point in &curve.points {
            eprintln!(
                "{}: {:.0}% ({:.0} instances) mean {:.4} +- {:.4}",
                entry.slug(),
                point.fraction * 100.0,
                point.mean_train_size,
                point.mean_accuracy,
                point.std_accuracy
            );
        }
        curves.push((entry.slug().to_string(), curve));
    }

    let mut outputs = Outputs::new(&settings.out);
    if let [(_, curve)] = curves.as_slice() {
        outputs.add("curve.csv", curve.to_csv_string());
        outputs.add("curve.json", curve.to_json_string()?);
    } else {
        for (slug, curve) in &curves {
            outputs.add(format!("{slug}/curve.csv"), curve.to_csv_string());
            outputs.add(format!("{slug}/curve.json"), curve.to_json_string()?);
        }
    }
    outputs.write()
}

#[derive(Serialize)]
struct TopFeaturesReport {
    format_version: u32,
    per_class: usize,
    classes: Vec<TopFeaturesClass>,
}

#[derive(Serialize)]
struct TopFeaturesClass {
    label: String,
    features: Vec<lexiclass::eval::FeatureWeight>,
}

/// Train one model on the full corpus and write model + vocabulary.
pub fn cmd_train(settings: &CommonSettings, top_n: usize) -> Result<()> {
    let entry = match settings.entries.as_slice() {
        [entry @ FeatureEntry::Model { .. }] => entry,
        _ => bail!("training needs exactly one trainable feature entry"),
    };
    let specs = entry.specs().expect("model entry");
    let corpus = load_corpus(settings)?;

    let vocabulary = build_vocabulary(corpus.instances().iter(), specs, settings.hyper.min_df)?;
    eprintln!("vocabulary: {} features", vocabulary.len());
    let features: Vec<SparseVector64> = corpus
        .instances()
        .iter()
        .map(|inst| vectorize_processed(&vocabulary, &inst.text, &inst.tokens))
        .collect();
    let problem = TrainingProblem64::new(features, corpus.labels())?;
    let trained = train_ovr(&problem, &settings.hyper.training_params(), settings.seed)?;
    let mut model = trained.model;
    model.set_vocab_id(vocabulary.vocab_id());
    for label in Label::ALL {
        let i = label.index();
        eprintln!(
            "{label}: {} after {} epochs",
            if trained.converged[i] { "converged" } else { "hit the epoch limit" },
            trained.epochs[i]
        );
    }

    let mut outputs = Outputs::new(&settings.out);
    outputs.add("model.json", model.to_json_string()?);
    outputs.add("vocab.json", vocabulary.to_json_string()?);
    if top_n > 0 {
        let ranked = top_features(&model, &vocabulary, top_n)?;
        let report = TopFeaturesReport {
            format_version: 1,
            per_class: top_n,
            classes: ranked
                .into_iter()
                .map(|(label, features)| TopFeaturesClass {
                    label: label.name().to_string(),
                    features,
                })
                .collect(),
        };
        outputs.add("top_features.json", serde_json::to_string(&report)?);
    }
    outputs.write()
}

/// Resolved options for `predict`.
pub struct PredictSettings {
    pub model: PathBuf,
    pub vocab: PathBuf,
    pub data: PathBuf,
    pub text_col: String,
    pub label_col: String,
    pub label_map: HashMap<String, Label>,
    pub out: PathBuf,
}

/// Label a CSV of texts with a trained model. When the label column is
/// present its values are used to report accuracy and fill a gold column.
pub fn cmd_predict(settings: &PredictSettings) -> Result<()> {
    let vocabulary = Vocabulary::load(&settings.vocab)
        .with_context(|| format!("loading vocabulary {}", settings.vocab.display()))?;
    let model = LinearModel64::load(&settings.model)
        .with_context(|| format!("loading model {}", settings.model.display()))?;
    if let Some(trained_on) = model.vocab_id() {
        if trained_on != vocabulary.vocab_id() {
            bail!(
                "model was trained on vocabulary {trained_on} but {} has id {}; \
                 pass the vocab.json written next to the model",
                settings.vocab.display(),
                vocabulary.vocab_id()
            );
        }
    }
    if model.dim() as usize != vocabulary.len() {
        bail!(
            "model dimension {} does not match vocabulary size {}",
            model.dim(),
            vocabulary.len()
        );
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&settings.data)
        .with_context(|| format!("reading {}", settings.data.display()))?;
    let headers = reader.headers()?.clone();
    let text_idx = headers
        .iter()
        .position(|h| h == settings.text_col)
        .with_context(|| format!("column {:?} not found in CSV header", settings.text_col))?;
    let label_idx = headers.iter().position(|h| h == settings.label_col);

    let mut rows: Vec<(u32, Label, Option<Label>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(row as u64 + 2);
        let raw_text = record
            .get(text_idx)
            .with_context(|| format!("line {line}: missing text field"))?;
        let gold = match label_idx {
            Some(idx) => {
                let raw = record
                    .get(idx)
                    .with_context(|| format!("line {line}: missing label field"))?;
                Some(*settings.label_map.get(raw).with_context(|| {
                    format!("line {line}: label value {raw:?} not present in label map")
                })?)
            }
            None => None,
        };
        let text = preprocess(raw_text);
        let tokens = tokenize(&text);
        let x: SparseVector64 = vectorize_processed(&vocabulary, &text, &tokens);
        rows.push((row as u32, model.predict(&x)?, gold));
    }
    if rows.is_empty() {
        bail!("{} has no data rows", settings.data.display());
    }

    let with_gold = label_idx.is_some();
    let mut csv_out = String::from(if with_gold {
        "id,predicted,gold\n"
    } else {
        "id,predicted\n"
    });
    let mut correct = 0usize;
    for (id, predicted, gold) in &rows {
        match gold {
            Some(gold) => {
                if gold == predicted {
                    correct += 1;
                }
                csv_out.push_str(&format!("{id},{predicted},{gold}\n"));
            }
            None => csv_out.push_str(&format!("{id},{predicted}\n")),
        }
    }

    let mut outputs = Outputs::new(&settings.out);
    outputs.add("predictions.csv", csv_out);
    outputs.write()?;

    if with_gold {
        println!(
            "accuracy {:.4} on {} instances",
            correct as f64 / rows.len() as f64,
            rows.len()
        );
    } else {
        println!("labeled {} instances", rows.len());
    }
    Ok(())
}
