use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::embed::TrainConfig;
use crate::evaluate::{Aggregation, Protocol, Variant};
use crate::ingest::{MergeMode, MergePolicy};
use crate::signature::VectorMode;
use crate::span::SpanMatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Default,
    /// Small thresholds and dimensions so fixture corpora run in seconds.
    Desk,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Profile::Default),
            "desk" => Ok(Profile::Desk),
            _ => Err(format!("unknown profile `{s}` (expected default or desk)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Default => "default",
            Profile::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignatureSource {
    #[default]
    Synonyms,
    /// Mean of labeled clauses from a few sampled gold sentences per
    /// relation; the sampled sentences are left out of evaluation.
    Examples,
}

impl FromStr for SignatureSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synonyms" => Ok(SignatureSource::Synonyms),
            "examples" => Ok(SignatureSource::Examples),
            _ => Err(format!("unknown signature source `{s}` (expected synonyms or examples)")),
        }
    }
}

impl fmt::Display for SignatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignatureSource::Synonyms => "synonyms",
            SignatureSource::Examples => "examples",
        })
    }
}

/// Everything one pipeline run needs.
///
/// The text form is `key = value` lines (see [`crate::kv`]). Keys:
///
/// | key | meaning |
/// |-----|---------|
/// | `profile` | `default` or `desk`; sets the defaults below, applied before other keys |
/// | `corpus`, `relations`, `gold`, `output` | paths, relative to the config file |
/// | `seed` | master seed |
/// | `ingest.merge`, `ingest.span_match`, `ingest.priority`, `ingest.lenient` | annotator merging |
/// | `normalize.min_count` | bigram promotion threshold |
/// | `embed.dim`, `embed.window`, `embed.negatives`, `embed.epochs`, `embed.learning_rate`, `embed.min_learning_rate`, `embed.min_count`, `embed.subsample`, `embed.threads` | skip-gram training |
/// | `signature.source`, `signature.examples` | synonym or example signatures |
/// | `classify.mode`, `classify.top_k` | unit vectors and labels per clause |
/// | `supervise.match` | gold span matching |
/// | `eval.variant`, `eval.aggregation`, `eval.folds`, `eval.splits` | scoring; `eval.splits` is `runs:train_fraction` |
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub profile: Profile,
    pub corpus: PathBuf,
    pub relations: PathBuf,
    pub gold: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub merge: MergePolicy,
    pub lenient: bool,
    pub bigram_min_count: u64,
    /// Training settings; `seed` is replaced by the embed stage seed.
    pub train: TrainConfig,
    pub signature_source: SignatureSource,
    pub examples_per_relation: usize,
    pub vector_mode: VectorMode,
    pub top_k: usize,
    pub span_match: SpanMatch,
    pub variant: Variant,
    pub aggregation: Aggregation,
    pub protocol: Option<Protocol>,
}

impl PipelineConfig {
    pub fn new(profile: Profile) -> Self {
        let (train, bigram_min_count) = match profile {
            Profile::Default => (TrainConfig { min_count: 5, ..TrainConfig::default() }, 50),
            Profile::Desk => (
                TrainConfig {
                    dim: 50,
                    epochs: 15,
                    min_count: 1,
                    ..TrainConfig::default()
                },
                2,
            ),
        };
        PipelineConfig {
            profile,
            corpus: PathBuf::new(),
            relations: PathBuf::new(),
            gold: PathBuf::new(),
            output: PathBuf::new(),
            seed: 1,
            merge: MergePolicy::default(),
            lenient: false,
            bigram_min_count,
            train,
            signature_source: SignatureSource::Synonyms,
            examples_per_relation: 5,
            vector_mode: VectorMode::PredicateOnly,
            top_k: 1,
            span_match: SpanMatch::Exact,
            variant: Variant::Any,
            aggregation: Aggregation::Micro,
            protocol: None,
        }
    }

    /// Build from parsed key-value entries. `profile` is applied first;
    /// relative paths resolve against `base`.
    pub fn from_entries(entries: &BTreeMap<String, String>, base: &Path) -> Result<Self, PipelineError> {
        let profile = match entries.get("profile") {
            Some(p) => p.parse().map_err(PipelineError::Config)?,
            None => Profile::Default,
        };
        let mut c = PipelineConfig::new(profile);
        for (k, v) in entries.iter().filter(|(k, _)| k.as_str() != "profile") {
            c.set(k, v, base)?;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let entries = crate::kv::read(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_entries(&entries, path.parent().unwrap_or(Path::new("")))
    }

    /// Set one key. Command-line overrides go through here too.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), PipelineError> {
        fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, PipelineError>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e| PipelineError::Config(format!("{key}: {e}")))
        }
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "profile" => {
                return Err(PipelineError::Config("profile must be chosen before other keys".into()));
            }
            "corpus" => self.corpus = path(value),
            "relations" => self.relations = path(value),
            "gold" => self.gold = path(value),
            "output" => self.output = path(value),
            "seed" => self.seed = parse(key, value)?,
            "ingest.merge" => self.merge.mode = parse::<MergeMode>(key, value)?,
            "ingest.span_match" => self.merge.span_match = parse(key, value)?,
            "ingest.priority" => {
                self.merge.annotator_priority = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
            }
            "ingest.lenient" => self.lenient = parse(key, value)?,
            "normalize.min_count" => self.bigram_min_count = parse(key, value)?,
            "embed.dim" => self.train.dim = parse(key, value)?,
            "embed.window" => self.train.window = parse(key, value)?,
            "embed.negatives" => self.train.negatives = parse(key, value)?,
            "embed.epochs" => self.train.epochs = parse(key, value)?,
            "embed.learning_rate" => self.train.learning_rate = parse(key, value)?,
            "embed.min_learning_rate" => self.train.min_learning_rate = parse(key, value)?,
            "embed.min_count" => self.train.min_count = parse(key, value)?,
            "embed.subsample" => {
                self.train.subsample = match value {
                    "" | "off" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "embed.threads" => self.train.threads = parse(key, value)?,
            "signature.source" => self.signature_source = parse(key, value)?,
            "signature.examples" => self.examples_per_relation = parse(key, value)?,
            "classify.mode" => self.vector_mode = parse(key, value)?,
            "classify.top_k" => self.top_k = parse(key, value)?,
            "supervise.match" => self.span_match = parse(key, value)?,
            "eval.variant" => self.variant = parse(key, value)?,
            "eval.aggregation" => self.aggregation = parse(key, value)?,
            "eval.folds" => self.protocol = Some(Protocol::KFold(parse(key, value)?)),
            "eval.splits" => self.protocol = Some(parse_splits(value).map_err(|e| PipelineError::Config(format!("{key}: {e}")))?),
            "eval.protocol" if value == "none" => self.protocol = None,
            _ => return Err(PipelineError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Check paths and settings before any work starts.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        self.validate_inputs(&["corpus", "relations", "gold"])?;
        if self.output.as_os_str().is_empty() {
            return err("output directory not set".into());
        }
        self.train.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.top_k == 0 {
            return err("classify.top_k must be positive".into());
        }
        if self.signature_source == SignatureSource::Examples && self.examples_per_relation == 0 {
            return err("signature.examples must be positive".into());
        }
        match self.protocol {
            Some(Protocol::KFold(0)) => err("eval.folds must be positive".into()),
            Some(Protocol::RandomSplits { runs, train_fraction }) if runs == 0 || !(train_fraction > 0.0 && train_fraction < 1.0) => {
                err("eval.splits needs runs > 0 and a fraction in (0,1)".into())
            }
            _ => Ok(()),
        }
    }

    /// Check that the named input files (`corpus`, `relations`, `gold`) exist.
    pub fn validate_inputs(&self, keys: &[&str]) -> Result<(), PipelineError> {
        for key in keys {
            let p = match *key {
                "corpus" => &self.corpus,
                "relations" => &self.relations,
                "gold" => &self.gold,
                _ => return Err(PipelineError::Config(format!("unknown input `{key}`"))),
            };
            if p.as_os_str().is_empty() {
                return Err(PipelineError::Config(format!("{key} path not set")));
            }
            if !p.is_file() {
                return Err(PipelineError::Config(format!("{key} file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The effective configuration as key-value text, paths as given.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("profile", &self.profile);
        kv("corpus", &self.corpus.display());
        kv("relations", &self.relations.display());
        kv("gold", &self.gold.display());
        kv("output", &self.output.display());
        kv("seed", &self.seed);
        kv("ingest.merge", &self.merge.mode);
        kv("ingest.span_match", &self.merge.span_match.as_str());
        kv("ingest.priority", &self.merge.annotator_priority.join(","));
        kv("ingest.lenient", &self.lenient);
        kv("normalize.min_count", &self.bigram_min_count);
        let t = &self.train;
        kv("embed.dim", &t.dim);
        kv("embed.window", &t.window);
        kv("embed.negatives", &t.negatives);
        kv("embed.epochs", &t.epochs);
        kv("embed.learning_rate", &t.learning_rate);
        kv("embed.min_learning_rate", &t.min_learning_rate);
        kv("embed.min_count", &t.min_count);
        kv("embed.subsample", &t.subsample.map_or("off".to_string(), |s| s.to_string()));
        kv("embed.threads", &t.threads);
        kv("signature.source", &self.signature_source);
        kv("signature.examples", &self.examples_per_relation);
        kv("classify.mode", &self.vector_mode);
        kv("classify.top_k", &self.top_k);
        kv("supervise.match", &self.span_match.as_str());
        kv("eval.variant", &self.variant);
        kv("eval.aggregation", &self.aggregation);
        match self.protocol {
            None => kv("eval.protocol", &"none"),
            Some(Protocol::KFold(k)) => kv("eval.folds", &k),
            Some(Protocol::RandomSplits { runs, train_fraction }) => kv("eval.splits", &format!("{runs}:{train_fraction}")),
        }
        out
    }
}

/// `runs:train_fraction`, e.g. `10:0.75`.
pub fn parse_splits(s: &str) -> Result<Protocol, String> {
    let (runs, frac) = s.split_once(':').ok_or_else(|| format!("expected runs:fraction, got `{s}`"))?;
    Ok(Protocol::RandomSplits {
        runs: runs.trim().parse().map_err(|_| format!("bad run count `{runs}`"))?,
        train_fraction: frac.trim().parse().map_err(|_| format!("bad fraction `{frac}`"))?,
    })
}

/// Seed for one stage: the first 8 bytes (little-endian) of
/// SHA-256(master seed as 8 little-endian bytes, then the stage name).
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
