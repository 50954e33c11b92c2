//! End-to-end runs: ingest, normalize, embed, supervise, signature,
//! classify and evaluate, with one master seed and a manifest of every
//! artifact.

mod config;
mod stages;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embed::hex;
use crate::embed::EmbeddingModel;
use crate::evaluate::{self, EvalConfig, EvalError, PredictionRecord, UnitKind};
use crate::graph::{read_snapshot, write_snapshot, Graph};
use crate::normalize::{format_triples, read_triples, BigramTable, DistillReport, NormalizedTriple};
use crate::signature::{format_signatures, parse_signatures, read_relation_specs, Lexicon, RelationSignature, RelationSpec};
use crate::supervise::{align_graph, format_labeled, parse_labeled, read_gold, sample_per_relation, GoldFact, LabeledClause};
use crate::tsv;

pub use config::{parse_splits, stage_seed, PipelineConfig, Profile, SignatureSource};
pub use stages::{classify_graph, example_signatures, ingest_corpus, normalize_graph, synonym_signatures, train_embeddings, without_examples, IngestOutput, Predictions};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    pub fn stage(stage: &'static str) -> impl FnOnce(BoxError) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }

    /// The failing stage, for stage errors.
    pub fn stage_name(&self) -> Option<&'static str> {
        match self {
            PipelineError::Stage { stage, .. } => Some(stage),
            PipelineError::Config(_) => None,
        }
    }

    /// True for configuration problems caught before any work.
    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

fn at<T, E: Into<BoxError>>(stage: &'static str, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Stage { stage, source: e.into() })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const CONFIG: &str = "config.txt";
    pub const GRAPH: &str = "graph";
    pub const TRIPLES: &str = "triples.tsv";
    pub const BIGRAMS: &str = "bigrams.tsv";
    pub const VECTORS: &str = "vectors.txt";
    pub const LABELED: &str = "labeled.tsv";
    pub const SIGNATURES: &str = "signatures.txt";
    pub const PREDICTIONS: &str = "predictions.tsv";
    pub const SENTENCE_PREDICTIONS: &str = "sentence_predictions.tsv";
    pub const REPORT: &str = "report.txt";
    pub const REPORT_TSV: &str = "report.tsv";
    pub const MANIFEST: &str = "manifest.tsv";
}

/// One manifest line per stage: its seed (or `-`), and `name=sha256` lists
/// of the files it read and wrote. Lines keep run order; rerunning a stage
/// replaces its line.
#[derive(Debug, Default)]
struct Manifest {
    out: PathBuf,
    lines: Vec<(String, String)>,
}

const MANIFEST_ORDER: [&str; 8] = ["config", "ingest", "normalize", "embed", "supervise", "signature", "classify", "evaluate"];

impl Manifest {
    fn load(out: &Path) -> Result<Self, PipelineError> {
        let mut m = Manifest { out: out.to_path_buf(), lines: Vec::new() };
        let path = out.join(files::MANIFEST);
        if path.exists() {
            let text = at("setup", std::fs::read_to_string(&path))?;
            for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
                let stage = line.split('\t').next().unwrap_or_default();
                m.lines.push((stage.to_string(), line.to_string()));
            }
        }
        Ok(m)
    }

    fn hash_file(path: &Path) -> Result<String, PipelineError> {
        let bytes = at("manifest", std::fs::read(path))?;
        Ok(sha256_hex(&bytes))
    }

    fn entries(&self, paths: &[PathBuf]) -> Result<String, PipelineError> {
        let mut parts = Vec::new();
        for p in paths {
            let name = p.strip_prefix(&self.out).unwrap_or(p).display().to_string();
            parts.push(format!("{name}={}", Self::hash_file(p)?));
        }
        Ok(parts.join(","))
    }

    fn stage(&mut self, stage: &str, seed: Option<u64>, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<(), PipelineError> {
        let seed = seed.map_or("-".to_string(), |s| s.to_string());
        let line = tsv::join([stage.to_string(), seed, self.entries(inputs)?, self.entries(outputs)?]);
        self.lines.retain(|(s, _)| s != stage);
        self.lines.push((stage.to_string(), line));
        let rank = |s: &str| MANIFEST_ORDER.iter().position(|x| *x == s).unwrap_or(MANIFEST_ORDER.len());
        self.lines.sort_by_key(|(s, _)| rank(s));
        Ok(())
    }

    fn write(&self) -> Result<(), PipelineError> {
        let mut text = "#stage\tseed\tinputs\toutputs\n".to_string();
        for (_, l) in &self.lines {
            text.push_str(l);
            text.push('\n');
        }
        at("manifest", tsv::write_file(&self.out.join(files::MANIFEST), &text))
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub stats: crate::graph::GraphStats,
    pub distill: DistillReport,
    pub triples: usize,
    pub bigrams: usize,
    pub vocab: usize,
    pub labeled: usize,
    pub report_text: String,
    /// F1 of the plain report, or the mean over splits.
    pub f1: f64,
}

/// Gold facts of the given sentences.
fn facts_in(gold: &[GoldFact], sentences: &BTreeSet<String>) -> Vec<GoldFact> {
    gold.iter().filter(|f| sentences.contains(&f.sentence_id)).cloned().collect()
}

/// Pipeline stages in run order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Normalize,
    Embed,
    Supervise,
    Signature,
    Classify,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Normalize,
        Stage::Embed,
        Stage::Supervise,
        Stage::Signature,
        Stage::Classify,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Normalize => "normalize",
            Stage::Embed => "embed",
            Stage::Supervise => "supervise",
            Stage::Signature => "signature",
            Stage::Classify => "classify",
            Stage::Evaluate => "evaluate",
        }
    }

    /// Input files this stage reads from the configuration.
    fn config_inputs(self, config: &PipelineConfig) -> Vec<&'static str> {
        match self {
            Stage::Ingest => vec!["corpus"],
            Stage::Supervise | Stage::Evaluate => vec!["gold"],
            Stage::Signature if config.signature_source == SignatureSource::Examples => vec!["relations", "gold"],
            Stage::Signature => vec!["relations"],
            _ => Vec::new(),
        }
    }
}

/// Artifacts of one run. Each stage writes its outputs to disk and keeps
/// them in memory; a stage run on its own loads its inputs from disk.
pub struct Run<'a> {
    config: &'a PipelineConfig,
    manifest: Manifest,
    graph: Option<Graph>,
    distill: Option<DistillReport>,
    triples: Option<Vec<NormalizedTriple>>,
    table: Option<BigramTable>,
    model: Option<EmbeddingModel>,
    gold: Option<Vec<GoldFact>>,
    labeled: Option<Vec<LabeledClause>>,
    specs: Option<Vec<RelationSpec>>,
    signatures: Option<Vec<RelationSignature>>,
    predictions: Option<Vec<PredictionRecord>>,
    report_text: Option<String>,
    f1: Option<f64>,
}

macro_rules! load {
    ($self:ident, $field:ident, $stage:expr, $load:expr) => {{
        if $self.$field.is_none() {
            $self.$field = Some(at($stage.name(), $load)?);
        }
        Ok::<(), PipelineError>(())
    }};
}

impl<'a> Run<'a> {
    /// Check the configuration for `stages`, create the output directory
    /// and record the effective configuration.
    pub fn open(config: &'a PipelineConfig, stages: &[Stage]) -> Result<Self, PipelineError> {
        let mut keys: Vec<&str> = stages.iter().flat_map(|s| s.config_inputs(config)).collect();
        keys.sort_unstable();
        keys.dedup();
        config.validate_inputs(&keys)?;
        let out = config.output.clone();
        at("setup", std::fs::create_dir_all(&out))?;
        let mut manifest = Manifest::load(&out)?;
        at("setup", tsv::write_file(&out.join(files::CONFIG), &config.to_text()))?;
        manifest.stage("config", Some(config.seed), &[], &[out.join(files::CONFIG)])?;
        manifest.write()?;
        Ok(Run {
            config,
            manifest,
            graph: None,
            distill: None,
            triples: None,
            table: None,
            model: None,
            gold: None,
            labeled: None,
            specs: None,
            signatures: None,
            predictions: None,
            report_text: None,
            f1: None,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.output.join(name)
    }

    fn load_graph(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let dir = self.path(files::GRAPH);
        load!(self, graph, stage, read_snapshot(&dir))
    }

    fn load_triples(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let (t, b) = (self.path(files::TRIPLES), self.path(files::BIGRAMS));
        load!(self, triples, stage, read_triples(&t))?;
        load!(self, table, stage, BigramTable::read(&b))
    }

    fn load_model(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let p = self.path(files::VECTORS);
        load!(self, model, stage, EmbeddingModel::import_vectors(&p))
    }

    fn load_gold(&mut self, stage: Stage) -> Result<(), PipelineError> {
        load!(self, gold, stage, read_gold(&self.config.gold))
    }

    fn load_labeled(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let p = self.path(files::LABELED);
        load!(self, labeled, stage, read_text(&p).and_then(|t| Ok(parse_labeled(&t, &p.display().to_string())?)))
    }

    fn load_specs(&mut self, stage: Stage) -> Result<(), PipelineError> {
        load!(self, specs, stage, read_relation_specs(&self.config.relations))
    }

    fn load_signatures(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let p = self.path(files::SIGNATURES);
        load!(self, signatures, stage, read_text(&p).and_then(|t| Ok(parse_signatures(&t, &p.display().to_string())?)))
    }

    fn load_predictions(&mut self, stage: Stage) -> Result<(), PipelineError> {
        let p = self.path(self.predictions_file());
        load!(self, predictions, stage, evaluate::load_predictions(&p, None))
    }

    fn predictions_file(&self) -> &'static str {
        match self.config.variant.unit_kind() {
            UnitKind::Clause => files::PREDICTIONS,
            UnitKind::Sentence => files::SENTENCE_PREDICTIONS,
        }
    }

    fn graph_files(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let dir = self.path(files::GRAPH);
        let mut files: Vec<PathBuf> = at("ingest", std::fs::read_dir(dir))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        files.sort();
        Ok(files)
    }

    fn record(&mut self, stage: Stage, seed: Option<u64>, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<(), PipelineError> {
        self.manifest.stage(stage.name(), seed, inputs, outputs)?;
        self.manifest.write()
    }

    /// Run one stage, loading whatever it needs that is not in memory.
    /// Returns a short description of what it did.
    pub fn stage(&mut self, stage: Stage) -> Result<String, PipelineError> {
        log::info!("stage {}", stage.name());
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Normalize => self.normalize(),
            Stage::Embed => self.embed(),
            Stage::Supervise => self.supervise(),
            Stage::Signature => self.signature(),
            Stage::Classify => self.classify(),
            Stage::Evaluate => self.evaluate(),
        }
    }

    fn ingest(&mut self) -> Result<String, PipelineError> {
        let c = self.config;
        let ingested = at("ingest", ingest_corpus(&c.corpus, &c.merge, c.lenient))?;
        // A stale snapshot may hold files this one does not write.
        let dir = self.path(files::GRAPH);
        if dir.exists() {
            at("ingest", std::fs::remove_dir_all(&dir))?;
        }
        at("ingest", write_snapshot(&ingested.graph, &dir))?;
        let outputs = self.graph_files()?;
        self.record(Stage::Ingest, None, std::slice::from_ref(&c.corpus), &outputs)?;
        let text = format!("{}\nwarnings\t{}", ingested.graph.stats(), ingested.warnings);
        self.graph = Some(ingested.graph);
        Ok(text)
    }

    fn normalize(&mut self) -> Result<String, PipelineError> {
        self.load_graph(Stage::Normalize)?;
        let (triples, table, distill) = normalize_graph(self.graph.as_ref().expect("loaded"), self.config.bigram_min_count);
        at("normalize", tsv::write_file(&self.path(files::TRIPLES), &format_triples(&triples)))?;
        at("normalize", table.write(&self.path(files::BIGRAMS)))?;
        let inputs = self.graph_files()?;
        self.record(Stage::Normalize, None, &inputs, &[self.path(files::TRIPLES), self.path(files::BIGRAMS)])?;
        let text = format!("{distill}\ntriples\t{}\nbigrams\t{}", triples.len(), table.len());
        self.triples = Some(triples);
        self.table = Some(table);
        self.distill = Some(distill);
        Ok(text)
    }

    fn embed(&mut self) -> Result<String, PipelineError> {
        self.load_triples(Stage::Embed)?;
        let seed = stage_seed(self.config.seed, "embed");
        let train = crate::embed::TrainConfig { seed, ..self.config.train.clone() };
        let (model, report) = at("embed", train_embeddings(self.triples.as_ref().expect("loaded"), self.table.as_ref().expect("loaded"), &train))?;
        at("embed", model.export_vectors(&self.path(files::VECTORS)))?;
        self.record(Stage::Embed, Some(seed), &[self.path(files::TRIPLES), self.path(files::BIGRAMS)], &[self.path(files::VECTORS)])?;
        let losses: Vec<String> = report.epoch_losses.iter().map(|l| format!("{l:.4}")).collect();
        let text = format!("vocabulary\t{}\nepoch losses\t{}", model.len(), losses.join(" "));
        // Keep the exported form so a resumed run sees the same model.
        self.model = Some(model);
        Ok(text)
    }

    fn supervise(&mut self) -> Result<String, PipelineError> {
        self.load_graph(Stage::Supervise)?;
        self.load_gold(Stage::Supervise)?;
        let (g, gold) = (self.graph.as_ref().expect("loaded"), self.gold.as_ref().expect("loaded"));
        let labeled = at("supervise", align_graph(g, gold, self.config.span_match))?;
        let text = format!("gold facts\t{}\nlabeled clauses\t{}", gold.len(), labeled.len());
        at("supervise", tsv::write_file(&self.path(files::LABELED), &format_labeled(&labeled)))?;
        self.record(Stage::Supervise, None, std::slice::from_ref(&self.config.gold), &[self.path(files::LABELED)])?;
        self.labeled = Some(labeled);
        Ok(text)
    }

    /// Sentences sampled as signature examples, per relation.
    fn examples(&self, gold: &[GoldFact]) -> BTreeMap<String, Vec<String>> {
        sample_per_relation(gold, self.config.examples_per_relation, stage_seed(self.config.seed, "signature"))
    }

    fn signature(&mut self) -> Result<String, PipelineError> {
        let stage = Stage::Signature;
        self.load_specs(stage)?;
        self.load_model(stage)?;
        let c = self.config;
        let mut inputs = vec![c.relations.clone(), self.path(files::VECTORS)];
        let signatures = match c.signature_source {
            SignatureSource::Synonyms => {
                self.load_graph(stage)?;
                let lexicon = Lexicon::from_graph(self.graph.as_ref().expect("loaded"));
                at("signature", synonym_signatures(self.specs.as_ref().expect("loaded"), self.model.as_ref().expect("loaded"), &lexicon))?
            }
            SignatureSource::Examples => {
                self.load_gold(stage)?;
                self.load_labeled(stage)?;
                self.load_triples(stage)?;
                let examples = self.examples(self.gold.as_ref().expect("loaded"));
                inputs.extend([c.gold.clone(), self.path(files::LABELED), self.path(files::TRIPLES)]);
                at(
                    "signature",
                    example_signatures(
                        self.specs.as_ref().expect("loaded"),
                        &examples,
                        self.labeled.as_ref().expect("loaded"),
                        self.triples.as_ref().expect("loaded"),
                        self.model.as_ref().expect("loaded"),
                        self.table.as_ref().expect("loaded"),
                        c.vector_mode,
                    ),
                )?
            }
        };
        at("signature", tsv::write_file(&self.path(files::SIGNATURES), &format_signatures(&signatures)))?;
        let seed = (c.signature_source == SignatureSource::Examples).then(|| stage_seed(c.seed, "signature"));
        self.record(stage, seed, &inputs, &[self.path(files::SIGNATURES)])?;
        let text = format!("signatures\t{} ({})", signatures.len(), c.signature_source);
        self.signatures = Some(signatures);
        Ok(text)
    }

    fn classify(&mut self) -> Result<String, PipelineError> {
        let stage = Stage::Classify;
        self.load_graph(stage)?;
        self.load_triples(stage)?;
        self.load_model(stage)?;
        self.load_signatures(stage)?;
        let c = self.config;
        let preds = at(
            "classify",
            classify_graph(
                self.graph.as_ref().expect("loaded"),
                self.triples.as_ref().expect("loaded"),
                self.model.as_ref().expect("loaded"),
                self.table.as_ref().expect("loaded"),
                self.signatures.as_ref().expect("loaded"),
                c.vector_mode,
                c.top_k,
            ),
        )?;
        at("classify", tsv::write_file(&self.path(files::PREDICTIONS), &evaluate::format_predictions(&preds.clauses)))?;
        at("classify", tsv::write_file(&self.path(files::SENTENCE_PREDICTIONS), &evaluate::format_predictions(&preds.sentences)))?;
        self.record(
            stage,
            None,
            &[self.path(files::SIGNATURES), self.path(files::VECTORS), self.path(files::TRIPLES)],
            &[self.path(files::PREDICTIONS), self.path(files::SENTENCE_PREDICTIONS)],
        )?;
        let abstained = preds.clauses.iter().filter(|p| p.labels.is_empty()).count();
        let text = format!("clause predictions\t{} ({abstained} abstained)\nsentence predictions\t{}\nmode\t{}", preds.clauses.len(), preds.sentences.len(), c.vector_mode);
        self.predictions = Some(preds.for_unit(c.variant.unit_kind()).to_vec());
        Ok(text)
    }

    fn evaluate(&mut self) -> Result<String, PipelineError> {
        let stage = Stage::Evaluate;
        self.load_gold(stage)?;
        self.load_predictions(stage)?;
        let c = self.config;
        let gold = self.gold.clone().expect("loaded");
        let eval_config = EvalConfig {
            variant: c.variant,
            aggregation: c.aggregation,
        };
        let eval_seed = stage_seed(c.seed, "evaluate");
        let examples_mode = c.signature_source == SignatureSource::Examples;
        let (report_text, report_tsv, f1) = match c.protocol {
            None => {
                let eval_gold = if examples_mode { without_examples(&gold, &self.examples(&gold)) } else { gold.clone() };
                let preds = self.predictions.as_ref().expect("loaded");
                let report = at("evaluate", evaluate::score(&evaluate::gold_labels(&eval_gold), preds, eval_config))?;
                (evaluate::format_report_table(&report), evaluate::format_report_tsv(&report), report.f1)
            }
            Some(protocol) => {
                if examples_mode {
                    self.load_graph(stage)?;
                    self.load_triples(stage)?;
                    self.load_model(stage)?;
                    self.load_labeled(stage)?;
                    self.load_specs(stage)?;
                }
                let this = &*self;
                let runner = |split: &evaluate::Split| -> Result<Vec<PredictionRecord>, PipelineError> {
                    if !examples_mode {
                        return Ok(this.predictions.clone().expect("loaded"));
                    }
                    let (specs, model, table) = (this.specs.as_ref().expect("loaded"), this.model.as_ref().expect("loaded"), this.table.as_ref().expect("loaded"));
                    let (labeled, triples) = (this.labeled.as_ref().expect("loaded"), this.triples.as_ref().expect("loaded"));
                    let train_facts = facts_in(&gold, &split.train);
                    let seed = stage_seed(c.seed, "signature") ^ split.index as u64;
                    let examples = sample_per_relation(&train_facts, c.examples_per_relation, seed);
                    let sigs = at("evaluate", example_signatures(specs, &examples, labeled, triples, model, table, c.vector_mode))?;
                    let p = at("evaluate", classify_graph(this.graph.as_ref().expect("loaded"), triples, model, table, &sigs, c.vector_mode, c.top_k))?;
                    Ok(p.for_unit(c.variant.unit_kind()).to_vec())
                };
                let cv = evaluate::crossval(&gold, protocol, eval_seed, eval_config, runner)?;
                (evaluate::format_crossval_table(&cv), evaluate::format_crossval_tsv(&cv), cv.mean_f1)
            }
        };
        at("evaluate", tsv::write_file(&self.path(files::REPORT), &report_text))?;
        at("evaluate", tsv::write_file(&self.path(files::REPORT_TSV), &report_tsv))?;
        let seed = c.protocol.map(|_| eval_seed);
        self.record(stage, seed, &[c.gold.clone(), self.path(self.predictions_file())], &[self.path(files::REPORT), self.path(files::REPORT_TSV)])?;
        self.report_text = Some(report_text.clone());
        self.f1 = Some(f1);
        Ok(report_text)
    }

    /// Summary of a run that went through every stage.
    pub fn summary(&self) -> Option<RunSummary> {
        Some(RunSummary {
            output: self.config.output.clone(),
            stats: self.graph.as_ref()?.stats(),
            distill: self.distill.clone()?,
            triples: self.triples.as_ref()?.len(),
            bigrams: self.table.as_ref()?.len(),
            vocab: self.model.as_ref()?.len(),
            labeled: self.labeled.as_ref()?.len(),
            report_text: self.report_text.clone()?,
            f1: self.f1?,
        })
    }
}

fn read_text(path: &Path) -> Result<String, BoxError> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Run every stage and write all artifacts into `config.output`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let mut run = Run::open(config, &Stage::ALL)?;
    for stage in Stage::ALL {
        run.stage(stage)?;
    }
    Ok(run.summary().expect("every stage ran"))
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Stage {
            stage: "evaluate",
            source: Box::new(e),
        }
    }
}

/// Summary lines for a run, for printing.
pub fn describe(summary: &RunSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "output {}", summary.output.display());
    let _ = writeln!(s, "{}", summary.stats);
    let _ = writeln!(s, "{}", summary.distill);
    let _ = writeln!(s, "triples\t{}\nbigrams\t{}\nvocabulary\t{}\nlabeled clauses\t{}", summary.triples, summary.bigrams, summary.vocab, summary.labeled);
    s.push_str(&summary.report_text);
    s
}

#[cfg(test)]
mod tests;
