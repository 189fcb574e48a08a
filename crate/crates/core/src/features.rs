//! Surface feature extraction: character n-grams, word n-grams and skip
//! word bigrams, plus the vocabulary that maps them to column indices.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledInstance;
use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Feature family. Character n-grams run over the preprocessed text
/// (spaces included); the word families run over tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Char,
    Word,
    SkipBigram,
}

impl Family {
    pub fn tag_name(self) -> &'static str {
        match self {
            Family::Char => "char",
            Family::Word => "word",
            Family::SkipBigram => "skip",
        }
    }
}

/// One feature extractor configuration: a family plus its order (n-gram
/// length, or maximum skip distance for skip bigrams).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSpec {
    family: Family,
    order: usize,
}

impl FeatureSpec {
    /// Validated constructor. Supported orders: char 2..=8, word 1..=3,
    /// skip 1..=3.
    pub fn new(family: Family, order: usize) -> Result<Self> {
        let valid = match family {
            Family::Char => (2..=8).contains(&order),
            Family::Word => (1..=3).contains(&order),
            Family::SkipBigram => (1..=3).contains(&order),
        };
        if !valid {
            return Err(Error::Config(format!(
                "unsupported order {order} for {} features",
                family.tag_name()
            )));
        }
        Ok(FeatureSpec { family, order })
    }

    pub fn family(self) -> Family {
        self.family
    }

    pub fn order(self) -> usize {
        self.order
    }

    /// Stable textual form, e.g. `char:4`, `word:2`, `skip:1`.
    pub fn tag(self) -> String {
        format!("{}:{}", self.family.tag_name(), self.order)
    }

    /// Inverse of [`FeatureSpec::tag`].
    pub fn parse(tag: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid feature spec {tag:?}"));
        let (name, order) = tag.split_once(':').ok_or_else(bad)?;
        let family = match name {
            "char" => Family::Char,
            "word" => Family::Word,
            "skip" => Family::SkipBigram,
            _ => return Err(bad()),
        };
        let order: usize = order.parse().map_err(|_| bad())?;
        FeatureSpec::new(family, order)
    }

    /// Every supported extractor configuration, in canonical order:
    /// char 2..=8, then word 1..=3, then skip 1..=3.
    pub fn full_set() -> Vec<FeatureSpec> {
        let mut specs = Vec::with_capacity(13);
        for n in 2..=8 {
            specs.push(FeatureSpec { family: Family::Char, order: n });
        }
        for n in 1..=3 {
            specs.push(FeatureSpec { family: Family::Word, order: n });
        }
        for k in 1..=3 {
            specs.push(FeatureSpec { family: Family::SkipBigram, order: k });
        }
        specs
    }

    /// Feature surfaces of one instance, in extraction order, duplicates
    /// kept (occurrence counts feed the vectors).
    pub fn extract(self, instance: &LabeledInstance) -> Vec<String> {
        match self.family {
            Family::Char => char_ngrams(&instance.text, self.order),
            Family::Word => word_ngrams(&instance.tokens, self.order),
            Family::SkipBigram => skip_bigrams(&instance.tokens, self.order),
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family.tag_name(), self.order)
    }
}

/// All length-`n` substrings of `text` over Unicode scalar values, in
/// order. Spaces count as characters, so n-grams cross word boundaries.
pub fn char_ngrams(text: &str, n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be positive");
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return Vec::new();
    }
    chars
        .windows(n)
        .map(|w| w.iter().collect::<String>())
        .collect()
}

/// All `n`-token windows, each joined with a single space, in order.
pub fn word_ngrams(tokens: &[String], n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be positive");
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// All ordered token pairs `(tokens[i], tokens[j])` with at most `k`
/// tokens between them (`1 <= j - i <= k + 1`), joined with a single
/// space. Adjacent pairs are included; the key does not encode the gap.
pub fn skip_bigrams(tokens: &[String], k: usize) -> Vec<String> {
    assert!(k >= 1, "skip distance must be positive");
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for j in (i + 1)..tokens.len().min(i + k + 2) {
            out.push(format!("{} {}", tokens[i], tokens[j]));
        }
    }
    out
}

/// A frozen mapping from namespaced feature keys to column indices.
///
/// Keys are `"<family>:<order>:<surface>"`, so identical surfaces from
/// different extractors stay distinct. Indices follow first occurrence
/// during the build scan, after document-frequency filtering.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    specs: Vec<FeatureSpec>,
    min_df: usize,
    index: HashMap<String, u32>,
    entries: Vec<(u16, String)>,
}

const VOCAB_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    format_version: u32,
    specs: Vec<String>,
    min_df: usize,
    entries: Vec<(String, String)>,
}

impl Vocabulary {
    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    /// Number of features, which is also the input dimension of models
    /// trained on this vocabulary.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Column index of a namespaced key.
    pub fn id_of(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    /// Spec and surface of a column index.
    pub fn entry(&self, id: u32) -> Option<(FeatureSpec, &str)> {
        self.entries
            .get(id as usize)
            .map(|(slot, surface)| (self.specs[*slot as usize], surface.as_str()))
    }

    /// FNV-1a 64 digest of the full content (specs, min_df, entries in
    /// index order). Two vocabularies agree on vectorization iff their
    /// fingerprints match.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(b"v1\n");
        h.write(self.min_df.to_string().as_bytes());
        h.write(b"\n");
        for spec in &self.specs {
            h.write(spec.tag().as_bytes());
            h.write(b"\n");
        }
        for (slot, surface) in &self.entries {
            h.write(&slot.to_le_bytes());
            h.write(surface.as_bytes());
            h.write(b"\n");
        }
        h.finish()
    }

    /// Hex form of [`Vocabulary::fingerprint`], used to pair models with
    /// the vocabulary they were trained on.
    pub fn vocab_id(&self) -> String {
        format!("{:016x}", self.fingerprint())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = VocabularyFile {
            format_version: VOCAB_FORMAT_VERSION,
            specs: self.specs.iter().map(|s| s.tag()).collect(),
            min_df: self.min_df,
            entries: self
                .entries
                .iter()
                .map(|(slot, surface)| (self.specs[*slot as usize].tag(), surface.clone()))
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: VocabularyFile = serde_json::from_str(json)?;
        if file.format_version != VOCAB_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported vocabulary format version {}",
                file.format_version
            )));
        }
        let specs = file
            .specs
            .iter()
            .map(|tag| FeatureSpec::parse(tag))
            .collect::<Result<Vec<_>>>()?;
        let slot_of: HashMap<String, u16> = file
            .specs
            .iter()
            .enumerate()
            .map(|(slot, tag)| (tag.clone(), slot as u16))
            .collect();
        let mut index = HashMap::with_capacity(file.entries.len());
        let mut entries = Vec::with_capacity(file.entries.len());
        for (id, (tag, surface)) in file.entries.into_iter().enumerate() {
            let slot = *slot_of
                .get(&tag)
                .ok_or_else(|| Error::Format(format!("entry spec {tag:?} not in spec list")))?;
            let key = format!("{tag}:{surface}");
            if index.insert(key, id as u32).is_some() {
                return Err(Error::Format(format!(
                    "duplicate vocabulary entry {tag}:{surface:?}"
                )));
            }
            entries.push((slot, surface));
        }
        Ok(Vocabulary {
            specs,
            min_df: file.min_df,
            index,
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json_str(&json)
    }
}

/// Scan instances and build the feature index.
///
/// A feature is kept when it occurs in at least `min_df` distinct
/// instances; kept features are numbered by first occurrence (instance
/// order, then spec order within an instance, then extraction order).
pub fn build_vocabulary<'a, I>(
    instances: I,
    specs: &[FeatureSpec],
    min_df: usize,
) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a LabeledInstance>,
{
    if specs.is_empty() {
        return Err(Error::Argument("no feature specs given".into()));
    }
    if min_df < 1 {
        return Err(Error::Argument("min_df must be >= 1".into()));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for spec in specs {
            if !seen.insert(*spec) {
                return Err(Error::Argument(format!("duplicate feature spec {spec}")));
            }
        }
    }

    struct Info {
        slot: u16,
        surface: String,
        df: u32,
        last_doc: usize,
    }
    let mut order: HashMap<String, usize> = HashMap::new();
    let mut infos: Vec<Info> = Vec::new();
    let prefixes: Vec<String> = specs.iter().map(|s| format!("{s}:")).collect();

    for (doc, inst) in instances.into_iter().enumerate() {
        for (slot, spec) in specs.iter().enumerate() {
            for surface in spec.extract(inst) {
                let key = format!("{}{}", prefixes[slot], surface);
                match order.entry(key) {
                    Entry::Occupied(e) => {
                        let info = &mut infos[*e.get()];
                        if info.last_doc != doc {
                            info.df += 1;
                            info.last_doc = doc;
                        }
                    }
                    Entry::Vacant(e) => {
                        e.insert(infos.len());
                        infos.push(Info {
                            slot: slot as u16,
                            surface,
                            df: 1,
                            last_doc: doc,
                        });
                    }
                }
            }
        }
    }

    let mut index = HashMap::new();
    let mut entries = Vec::new();
    for info in infos {
        if (info.df as usize) < min_df {
            continue;
        }
        let id = entries.len() as u32;
        index.insert(
            format!("{}{}", prefixes[info.slot as usize], info.surface),
            id,
        );
        entries.push((info.slot, info.surface));
    }
    index.shrink_to_fit();
    Ok(Vocabulary {
        specs: specs.to_vec(),
        min_df,
        index,
        entries,
    })
}

/// A sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<F> {
    dim: u32,
    pairs: Vec<(u32, F)>,
}

impl<F: Scalar> SparseVector<F> {
    /// Validated constructor: indices strictly increasing and below `dim`,
    /// values finite and nonzero.
    pub fn new(dim: u32, pairs: Vec<(u32, F)>) -> Result<Self> {
        let mut previous: Option<u32> = None;
        for &(index, value) in &pairs {
            if index >= dim {
                return Err(Error::Dimension(format!(
                    "index {index} out of bounds for dimension {dim}"
                )));
            }
            if previous.is_some_and(|p| p >= index) {
                return Err(Error::Dimension(format!(
                    "indices not strictly increasing at {index}"
                )));
            }
            if !value.is_finite() || value == F::zero() {
                return Err(Error::Numeric(format!(
                    "invalid value {value} at index {index}"
                )));
            }
            previous = Some(index);
        }
        Ok(SparseVector { dim, pairs })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn pairs(&self) -> &[(u32, F)] {
        &self.pairs
    }

    pub fn nnz(&self) -> usize {
        self.pairs.len()
    }

    pub fn squared_norm(&self) -> F {
        self.pairs.iter().map(|&(_, v)| v * v).sum()
    }

    /// Scale to unit Euclidean norm. The zero vector is unchanged.
    pub fn normalized(mut self) -> Self {
        let norm = self.squared_norm().sqrt();
        if norm > F::zero() {
            for (_, value) in &mut self.pairs {
                *value = *value / norm;
            }
        }
        self
    }

    /// Dot product against a dense vector of length >= `dim`.
    pub fn dot_dense(&self, dense: &[F]) -> F {
        debug_assert!(dense.len() >= self.dim as usize);
        self.pairs
            .iter()
            .map(|&(index, value)| value * dense[index as usize])
            .sum()
    }

    /// `dense += factor * self`.
    pub fn add_scaled(&self, dense: &mut [F], factor: F) {
        debug_assert!(dense.len() >= self.dim as usize);
        for &(index, value) in &self.pairs {
            dense[index as usize] = dense[index as usize] + factor * value;
        }
    }
}

/// Map one instance into feature space: occurrence counts of in-vocabulary
/// features, Euclidean-normalized. Out-of-vocabulary features are dropped.
pub fn vectorize<F: Scalar>(vocabulary: &Vocabulary, instance: &LabeledInstance) -> SparseVector<F> {
    vectorize_processed(vocabulary, &instance.text, &instance.tokens)
}

/// [`vectorize`] for text that is already preprocessed and tokenized.
pub fn vectorize_processed<F: Scalar>(
    vocabulary: &Vocabulary,
    text: &str,
    tokens: &[String],
) -> SparseVector<F> {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    let mut key = String::new();
    for spec in &vocabulary.specs {
        let prefix = format!("{spec}:");
        let surfaces = match spec.family {
            Family::Char => char_ngrams(text, spec.order),
            Family::Word => word_ngrams(tokens, spec.order),
            Family::SkipBigram => skip_bigrams(tokens, spec.order),
        };
        for surface in surfaces {
            key.clear();
            key.push_str(&prefix);
            key.push_str(&surface);
            if let Some(id) = vocabulary.index.get(key.as_str()) {
                *counts.entry(*id).or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<(u32, F)> = counts
        .into_iter()
        .map(|(id, count)| (id, F::from_u32(count).expect("count fits scalar")))
        .collect();
    pairs.sort_unstable_by_key(|&(id, _)| id);
    SparseVector {
        dim: vocabulary.len() as u32,
        pairs,
    }
    .normalized()
}

struct Fnv1a {
    state: u64,
}

impl Fnv1a {
    fn new() -> Self {
        Fnv1a {
            state: 0xcbf2_9ce4_8422_2325,
        }
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= b as u64;
            self.state = self.state.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.state
    }
}
