//! Corpus handling: loading, text normalization, stratified folds and the
//! majority baseline.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng;
use crate::Result;

/// The three gold classes, in canonical order (`HATE < OFFENSIVE < OK`).
///
/// The order is load-bearing: it fixes class indices in weight matrices and
/// confusion matrices, and breaks ties in argmax prediction and in the
/// majority baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Hate,
    Offensive,
    Ok,
}

impl Label {
    /// All labels in canonical order.
    pub const ALL: [Label; 3] = [Label::Hate, Label::Offensive, Label::Ok];

    /// Canonical index: HATE=0, OFFENSIVE=1, OK=2.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Hate => "HATE",
            Label::Offensive => "OFFENSIVE",
            Label::Ok => "OK",
        }
    }

    pub fn parse(name: &str) -> Option<Label> {
        match name {
            "HATE" => Some(Label::Hate),
            "OFFENSIVE" => Some(Label::Offensive),
            "OK" => Some(Label::Ok),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One text with its gold label.
///
/// `text` is the preprocessed form (lowercase, URLs and emoji removed,
/// whitespace collapsed) and `tokens` are its maximal non-whitespace runs.
#[derive(Debug, Clone)]
pub struct LabeledInstance {
    pub id: u32,
    pub raw_text: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub label: Label,
}

impl LabeledInstance {
    /// Build an instance from raw text, running preprocessing and
    /// tokenization.
    pub fn new(id: u32, raw_text: impl Into<String>, label: Label) -> Self {
        let raw_text = raw_text.into();
        let text = preprocess(&raw_text);
        let tokens = tokenize(&text);
        LabeledInstance {
            id,
            raw_text,
            text,
            tokens,
            label,
        }
    }
}

/// An ordered, immutable set of labeled instances with per-class counts.
#[derive(Debug, Clone)]
pub struct Corpus {
    instances: Vec<LabeledInstance>,
    class_counts: [usize; 3],
}

impl Corpus {
    /// Build a corpus, checking that ids are unique.
    pub fn from_instances(instances: Vec<LabeledInstance>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(instances.len());
        let mut class_counts = [0usize; 3];
        for inst in &instances {
            if !seen.insert(inst.id) {
                return Err(Error::Argument(format!("duplicate instance id {}", inst.id)));
            }
            class_counts[inst.label.index()] += 1;
        }
        Ok(Corpus {
            instances,
            class_counts,
        })
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    /// Instance count per label, in canonical order.
    pub fn class_counts(&self) -> [usize; 3] {
        self.class_counts
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.instances.iter().map(|i| i.label).collect()
    }
}

/// Assignment of every instance to one of `k` folds, stratified by class.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    k: usize,
    fold_of: HashMap<u32, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fold index of an instance id.
    pub fn fold_of(&self, id: u32) -> Option<usize> {
        self.fold_of.get(&id).copied()
    }

    /// Positions (indices into `corpus.instances()`) of the training and
    /// test sides of one fold, each in corpus order.
    pub fn split(&self, corpus: &Corpus, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (pos, inst) in corpus.instances().iter().enumerate() {
            if self.fold_of.get(&inst.id) == Some(&fold) {
                test.push(pos);
            } else {
                train.push(pos);
            }
        }
        (train, test)
    }
}

// Pictographic blocks removed by `preprocess`, plus the variation selector
// and zero-width joiner used in emoji sequences.
const EMOJI_RANGES: [(u32, u32); 8] = [
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1F1E6, 0x1F1FF),
    (0x2600, 0x27BF),
    (0xFE0F, 0xFE0F),
    (0x200D, 0x200D),
];

fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| cp >= lo && cp <= hi)
}

fn is_url_span(span: &str) -> bool {
    let lower = span.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Normalize raw text: strip emoji code points, drop URL spans, lowercase,
/// collapse whitespace.
///
/// A URL span is a maximal non-whitespace run starting with `http://`,
/// `https://` or `www.` (case-insensitive). Emoji are stripped first so a
/// URL interrupted by an emoji is still recognized and removed, which also
/// makes the whole function idempotent.
pub fn preprocess(raw_text: &str) -> String {
    let without_emoji: String = raw_text.chars().filter(|c| !is_emoji(*c)).collect();
    let mut out = String::with_capacity(without_emoji.len());
    for span in without_emoji.split_whitespace() {
        if is_url_span(span) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&span.to_lowercase());
    }
    out
}

/// Maximal non-whitespace runs of preprocessed text, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Load a corpus from an RFC-4180 CSV file with a header row.
///
/// `label_map` translates the raw label column values into [`Label`]s; a
/// value missing from the map is a data error naming the offending line.
pub fn load_csv(
    path: impl AsRef<Path>,
    text_column: &str,
    label_column: &str,
    label_map: &HashMap<String, Label>,
) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let column_index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column {name:?} not found in CSV header")))
    };
    let text_idx = column_index(text_column)?;
    let label_idx = column_index(label_column)?;

    let mut instances = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(row as u64 + 2);
        let raw_text = record.get(text_idx).ok_or_else(|| Error::Data {
            line,
            message: format!("missing field for column {text_column:?}"),
        })?;
        let raw_label = record.get(label_idx).ok_or_else(|| Error::Data {
            line,
            message: format!("missing field for column {label_column:?}"),
        })?;
        let label = *label_map.get(raw_label).ok_or_else(|| Error::Data {
            line,
            message: format!("label value {raw_label:?} not present in label map"),
        })?;
        instances.push(LabeledInstance::new(row as u32, raw_text, label));
    }
    Corpus::from_instances(instances)
}

/// Assign instances to `k` stratified folds.
///
/// Per class, instance ids are shuffled with the seed and dealt round-robin,
/// so per-fold class counts differ from `n_class / k` by less than one.
/// Deterministic given corpus order, `k` and `seed`.
pub fn stratified_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Argument(format!("fold count k = {k} must be >= 2")));
    }
    let mut rng = rng::seeded(seed);
    let mut fold_of = HashMap::with_capacity(corpus.len());
    for label in Label::ALL {
        let mut ids: Vec<u32> = corpus
            .instances()
            .iter()
            .filter(|i| i.label == label)
            .map(|i| i.id)
            .collect();
        if ids.len() < k {
            return Err(Error::Stratification {
                label,
                count: ids.len(),
                k,
            });
        }
        rng::shuffle(&mut ids, &mut rng);
        for (position, id) in ids.into_iter().enumerate() {
            fold_of.insert(id, position % k);
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Most frequent label, ties broken by canonical order.
pub fn majority_label(labels: &[Label]) -> Option<Label> {
    if labels.is_empty() {
        return None;
    }
    let mut counts = [0usize; 3];
    for label in labels {
        counts[label.index()] += 1;
    }
    let best = counts.iter().enumerate().max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i)));
    best.and_then(|(i, _)| Label::from_index(i))
}

/// Accuracy on `test` of always predicting the most frequent label in
/// `train` (ties broken by canonical label order).
pub fn majority_baseline(train: &[Label], test: &[Label]) -> Result<f64> {
    let majority =
        majority_label(train).ok_or_else(|| Error::Argument("empty training set".into()))?;
    if test.is_empty() {
        return Err(Error::Argument("empty test set".into()));
    }
    let correct = test.iter().filter(|&&l| l == majority).count();
    Ok(correct as f64 / test.len() as f64)
}

const SYNTH_POOL: usize = 40;

/// Generate a synthetic corpus whose word distributions are class-correlated
/// with a controllable shared fraction.
///
/// Each token is drawn from a shared pool with probability `vocab_overlap`
/// and otherwise from a class-exclusive pool, so `vocab_overlap = 0` yields
/// disjoint class vocabularies (linearly separable) and `vocab_overlap = 1`
/// yields one common distribution (no signal). Deterministic per seed.
pub fn synthesize_corpus(seed: u64, counts: [usize; 3], vocab_overlap: f64) -> Corpus {
    assert!(
        (0.0..=1.0).contains(&vocab_overlap),
        "vocab_overlap must be in [0, 1]"
    );
    let mut rng = rng::seeded(seed);
    let prefixes = ["ha", "of", "ok"];
    let mut instances = Vec::with_capacity(counts.iter().sum());
    let mut id = 0u32;
    for label in Label::ALL {
        for _ in 0..counts[label.index()] {
            let length = 8 + rng::below(&mut rng, 5);
            let mut words = Vec::with_capacity(length);
            for _ in 0..length {
                let word = if rng::uniform01(&mut rng) < vocab_overlap {
                    format!("sh{:02}", rng::below(&mut rng, SYNTH_POOL))
                } else {
                    format!(
                        "{}{:02}",
                        prefixes[label.index()],
                        rng::below(&mut rng, SYNTH_POOL)
                    )
                };
                words.push(word);
            }
            instances.push(LabeledInstance::new(id, words.join(" "), label));
            id += 1;
        }
    }
    Corpus::from_instances(instances).expect("sequential ids are unique")
}
