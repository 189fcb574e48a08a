//! Option resolution: command-line flags override config-file entries,
//! which override built-in defaults. Also hosts the feature-set grammar.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use lexiclass::corpus::Label;
use lexiclass::eval::Hyperparams;
use lexiclass::features::FeatureSpec;

/// Flags shared by the corpus-evaluating commands.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// CSV column holding the text [default: tweet].
    #[arg(long)]
    pub text_col: Option<String>,
    /// CSV column holding the label [default: class].
    #[arg(long)]
    pub label_col: Option<String>,
    /// Raw label values mapped to classes [default: 0=HATE,1=OFFENSIVE,2=OK].
    #[arg(long)]
    pub label_map: Option<String>,
    /// Feature sets to run; see the feature-set grammar in the README.
    #[arg(long)]
    pub features: Option<String>,
    /// Number of cross-validation folds [default: 10].
    #[arg(long)]
    pub k: Option<usize>,
    /// Master seed for folds, epoch order and subsampling [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// SVM cost parameter [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Value of the appended bias feature; 0 disables it [default: 1].
    #[arg(long)]
    pub bias: Option<f64>,
    /// Solver stopping tolerance [default: 0.1].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Maximum solver epochs [default: 1000].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Keep features occurring in at least this many documents [default: 1].
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 means one per core [default: 0].
    #[arg(long)]
    pub jobs: Option<usize>,
}

const ALLOWED_KEYS: &[&str] = &[
    "data",
    "text-col",
    "label-col",
    "label-map",
    "features",
    "k",
    "seed",
    "c",
    "bias",
    "tolerance",
    "max-iterations",
    "min-df",
    "out",
    "jobs",
    "fractions",
    "top-features",
    "model",
    "vocab",
];

/// Parse a `key = value` config file. Blank lines and `#` comments are
/// skipped; unknown keys are rejected so typos surface early.
pub fn load_config(path: &Path) -> Result<HashMap<String, String>> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (number, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key = value", path.display(), number + 1))?;
        let key = key.trim();
        if !ALLOWED_KEYS.contains(&key) {
            bail!("{}:{}: unknown config key {key:?}", path.display(), number + 1);
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Layered option lookup: explicit flag, then config entry, then default.
pub struct Resolver {
    config: HashMap<String, String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>) -> Result<Self> {
        let config = match config_path {
            Some(path) => load_config(path)?,
            None => HashMap::new(),
        };
        Ok(Resolver { config })
    }

    pub fn get<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.optional(flag, key).map(|v| v.unwrap_or(default))
    }

    pub fn optional<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key} = {raw:?}: {e}")),
            None => Ok(None),
        }
    }

    pub fn required<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.optional(flag, key)?
            .with_context(|| format!("--{key} is required (flag or config entry)"))
    }
}

/// One row of a run: either a trainable feature combination or the
/// majority-class baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureEntry {
    Model { slug: String, specs: Vec<FeatureSpec> },
    Majority,
}

impl FeatureEntry {
    pub fn slug(&self) -> &str {
        match self {
            FeatureEntry::Model { slug, .. } => slug,
            FeatureEntry::Majority => "majority",
        }
    }

    pub fn specs(&self) -> Option<&[FeatureSpec]> {
        match self {
            FeatureEntry::Model { specs, .. } => Some(specs),
            FeatureEntry::Majority => None,
        }
    }
}

fn parse_atom(atom: &str) -> Result<FeatureSpec> {
    // both char:4 and char-4 are accepted; slugs use the dash form
    FeatureSpec::parse(atom)
        .or_else(|_| FeatureSpec::parse(&atom.replacen('-', ":", 1)))
        .with_context(|| format!("invalid feature atom {atom:?}"))
}

fn atom_slug(spec: FeatureSpec) -> String {
    spec.tag().replace(':', "-")
}

/// Parse one entry: `majority`, `all`, or `+`-joined atoms like
/// `char:4` / `word-2+skip-1`.
pub fn parse_entry(entry: &str) -> Result<FeatureEntry> {
    let entry = entry.trim();
    match entry {
        "" => bail!("empty feature entry"),
        "majority" => Ok(FeatureEntry::Majority),
        "all" => Ok(FeatureEntry::Model {
            slug: "all".to_string(),
            specs: FeatureSpec::full_set(),
        }),
        _ => {
            let mut specs = Vec::new();
            for atom in entry.split('+') {
                let spec = parse_atom(atom)?;
                if specs.contains(&spec) {
                    bail!("feature atom {spec} repeated in {entry:?}");
                }
                specs.push(spec);
            }
            let slug = specs
                .iter()
                .map(|s| atom_slug(*s))
                .collect::<Vec<_>>()
                .join("+");
            Ok(FeatureEntry::Model { slug, specs })
        }
    }
}

/// Parse a comma-separated entry list. `suite` expands to the full
/// comparison: each of the 13 single extractors, their combination, and
/// the majority baseline.
pub fn parse_entries(list: &str) -> Result<Vec<FeatureEntry>> {
    let mut entries = Vec::new();
    if list.trim() == "suite" {
        for spec in FeatureSpec::full_set() {
            entries.push(FeatureEntry::Model {
                slug: atom_slug(spec),
                specs: vec![spec],
            });
        }
        entries.push(parse_entry("all")?);
        entries.push(FeatureEntry::Majority);
    } else {
        for part in list.split(',') {
            entries.push(parse_entry(part)?);
        }
    }
    let mut seen = std::collections::HashSet::new();
    for entry in &entries {
        if !seen.insert(entry.slug().to_string()) {
            bail!("feature entry {:?} listed twice", entry.slug());
        }
    }
    Ok(entries)
}

/// Parse `raw=LABEL` pairs, e.g. `0=HATE,1=OFFENSIVE,2=OK`.
pub fn parse_label_map(mapping: &str) -> Result<HashMap<String, Label>> {
    let mut map = HashMap::new();
    for pair in mapping.split(',') {
        let (raw, name) = pair
            .split_once('=')
            .with_context(|| format!("label mapping {pair:?} is not raw=LABEL"))?;
        let label = Label::parse(name.trim())
            .with_context(|| format!("unknown class {name:?} (use HATE, OFFENSIVE or OK)"))?;
        if map.insert(raw.trim().to_string(), label).is_some() {
            bail!("label value {raw:?} mapped twice");
        }
    }
    if map.is_empty() {
        bail!("empty label map");
    }
    Ok(map)
}

/// Fully resolved options for the corpus-evaluating commands.
#[derive(Debug)]
pub struct CommonSettings {
    pub data: PathBuf,
    pub text_col: String,
    pub label_col: String,
    pub label_map: HashMap<String, Label>,
    pub entries: Vec<FeatureEntry>,
    pub k: usize,
    pub seed: u64,
    pub hyper: Hyperparams,
    pub out: PathBuf,
    pub jobs: usize,
}

pub fn resolve_common(args: &CommonArgs, default_features: &str) -> Result<CommonSettings> {
    let r = Resolver::new(args.config.as_deref())?;
    let defaults = Hyperparams::default();
    let features = r.get(args.features.clone(), "features", default_features.to_string())?;
    let label_map = r.get(
        args.label_map.clone(),
        "label-map",
        "0=HATE,1=OFFENSIVE,2=OK".to_string(),
    )?;
    Ok(CommonSettings {
        data: r.required(args.data.clone(), "data")?,
        text_col: r.get(args.text_col.clone(), "text-col", "tweet".to_string())?,
        label_col: r.get(args.label_col.clone(), "label-col", "class".to_string())?,
        label_map: parse_label_map(&label_map)?,
        entries: parse_entries(&features)?,
        k: r.get(args.k, "k", 10)?,
        seed: r.get(args.seed, "seed", 42)?,
        hyper: Hyperparams {
            c: r.get(args.c, "c", defaults.c)?,
            bias: r.get(args.bias, "bias", defaults.bias)?,
            tolerance: r.get(args.tolerance, "tolerance", defaults.tolerance)?,
            max_iterations: r.get(args.max_iterations, "max-iterations", defaults.max_iterations)?,
            min_df: r.get(args.min_df, "min-df", defaults.min_df)?,
        },
        out: r.required(args.out.clone(), "out")?,
        jobs: r.get(args.jobs, "jobs", 0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_cover_the_grammar() {
        assert_eq!(parse_entry("majority").unwrap(), FeatureEntry::Majority);
        let all = parse_entry("all").unwrap();
        assert_eq!(all.slug(), "all");
        assert_eq!(all.specs().unwrap().len(), 13);

        let single = parse_entry("char:4").unwrap();
        assert_eq!(single.slug(), "char-4");
        let dashed = parse_entry("char-4").unwrap();
        assert_eq!(single, dashed);

        let combo = parse_entry("word:1+skip:2").unwrap();
        assert_eq!(combo.slug(), "word-1+skip-2");
        assert_eq!(combo.specs().unwrap().len(), 2);

        assert!(parse_entry("char:9").is_err());
        assert!(parse_entry("word:1+word:1").is_err());
        assert!(parse_entry("").is_err());
    }

    #[test]
    fn suite_expands_to_fifteen_rows() {
        let entries = parse_entries("suite").unwrap();
        assert_eq!(entries.len(), 15);
        assert_eq!(entries[0].slug(), "char-2");
        assert_eq!(entries[13].slug(), "all");
        assert_eq!(entries[14].slug(), "majority");
        assert!(parse_entries("char:2,char:2").is_err());
        assert_eq!(parse_entries("char:3,majority").unwrap().len(), 2);
    }

    #[test]
    fn label_maps_parse_and_validate() {
        let map = parse_label_map("0=HATE,1=OFFENSIVE,2=OK").unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map["1"], Label::Offensive);
        assert!(parse_label_map("0=SPAM").is_err());
        assert!(parse_label_map("0=HATE,0=OK").is_err());
        assert!(parse_label_map("").is_err());
    }

    #[test]
    fn config_file_layers_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nk = 5\nseed = 7\n\nfeatures = char:2\n").unwrap();
        let r = Resolver::new(Some(&path)).unwrap();
        // flag wins over config
        assert_eq!(r.get(Some(3usize), "k", 10).unwrap(), 3);
        // config wins over default
        assert_eq!(r.get::<usize>(None, "k", 10).unwrap(), 5);
        // default when absent everywhere
        assert_eq!(r.get::<u64>(None, "jobs", 0).unwrap(), 0);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(Resolver::new(Some(&path)).is_err());
        std::fs::write(&path, "k: 5\n").unwrap();
        assert!(Resolver::new(Some(&path)).is_err());
    }
}
