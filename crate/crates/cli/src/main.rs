use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clausegraph::evaluate::{self, EvalConfig};
use clausegraph::graph::read_snapshot;
use clausegraph::pipeline::{describe, run_pipeline, PipelineConfig, PipelineError, Run, Stage};
use clausegraph::supervise::read_gold;
use clausegraph::synth::{generate, SynthConfig};

/// Clause-level relation extraction over an annotated corpus.
#[derive(Debug, Parser)]
#[command(name = "clausegraph", version)]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage and write all artifacts to the output directory.
    Run(Common),
    /// Load the corpus and write the graph snapshot.
    Ingest(Common),
    /// Distill clauses into triples and promote bigrams.
    Normalize(Common),
    /// Train skip-gram vectors on the triples.
    Embed(Common),
    /// Transfer gold sentence labels to clauses.
    Supervise(Common),
    /// Build relation signatures.
    Signature(Common),
    /// Label clauses and sentences with their nearest signatures.
    Classify(Common),
    /// Score predictions against the gold facts.
    Eval(EvalArgs),
    /// Print vertex counts of a graph snapshot.
    Stats {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Write a synthetic corpus with planted relations.
    Synth(SynthArgs),
}

/// Configuration shared by the pipeline commands. Flags override keys of
/// the config file; `--set key=value` reaches every key.
#[derive(Debug, Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `default` or `desk`.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    relations: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Unit vectors: `predicate_only` or `full_clause_mean`.
    #[arg(long)]
    mode: Option<String>,
    /// `any`, `all`, `union`, `sent-single` or `sent-multi`.
    #[arg(long)]
    variant: Option<String>,
    /// `micro` or `macro`.
    #[arg(long)]
    aggregation: Option<String>,
    /// k-fold cross-validation.
    #[arg(long)]
    folds: Option<usize>,
    /// Repeated random splits as `runs:train_fraction`.
    #[arg(long)]
    splits: Option<String>,
    /// Signature source: `synonyms` or `examples`.
    #[arg(long)]
    source: Option<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Score this prediction file directly instead of the run's predictions.
    #[arg(long, alias = "pred")]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = 100)]
    documents: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Assign documents to this many folds in the gold file.
    #[arg(long)]
    folds: Option<u32>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        push("corpus", path(&self.corpus));
        push("relations", path(&self.relations));
        push("gold", path(&self.gold));
        push("output", path(&self.output));
        push("seed", self.seed.map(|s| s.to_string()));
        push("classify.mode", self.mode.clone());
        push("eval.variant", self.variant.clone());
        push("eval.aggregation", self.aggregation.clone());
        push("eval.folds", self.folds.map(|k| k.to_string()));
        push("eval.splits", self.splits.clone());
        push("signature.source", self.source.clone());
        for s in &self.set {
            let Some((k, v)) = s.split_once('=') else {
                bail!(PipelineError::Config(format!("--set expects KEY=VALUE, got `{s}`")));
            };
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn config(&self) -> Result<PipelineConfig> {
        let (mut entries, base) = match &self.config {
            Some(path) => {
                let entries = clausegraph::kv::read(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                (entries, path.parent().unwrap_or(Path::new("")).to_path_buf())
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        if let Some(p) = &self.profile {
            entries.insert("profile".into(), p.clone());
        }
        let mut config = PipelineConfig::from_entries(&entries, &base)?;
        for (k, v) in self.overrides()? {
            config.set(&k, &v, Path::new(""))?;
        }
        Ok(config)
    }
}

fn run_stage(common: &Common, stage: Stage) -> Result<()> {
    let config = common.config()?;
    let mut run = Run::open(&config, &[stage])?;
    println!("{}", run.stage(stage)?);
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let Some(path) = &args.predictions else {
        return run_stage(&args.common, Stage::Evaluate);
    };
    let config = args.common.config()?;
    config.validate_inputs(&["gold"])?;
    let gold = read_gold(&config.gold).map_err(|e| PipelineError::Stage { stage: "evaluate", source: e.into() })?;
    if !path.is_file() {
        bail!(PipelineError::Config(format!("predictions file {} does not exist", path.display())));
    }
    let preds = evaluate::load_predictions(path, None).map_err(|e| PipelineError::Stage { stage: "evaluate", source: e.into() })?;
    let eval_config = EvalConfig {
        variant: config.variant,
        aggregation: config.aggregation,
    };
    let report = evaluate::score(&evaluate::gold_labels(&gold), &preds, eval_config).map_err(PipelineError::from)?;
    print!("{}", evaluate::format_report_table(&report));
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let config = common.config()?;
            let summary = run_pipeline(&config)?;
            print!("{}", describe(&summary));
        }
        Command::Ingest(c) => run_stage(&c, Stage::Ingest)?,
        Command::Normalize(c) => run_stage(&c, Stage::Normalize)?,
        Command::Embed(c) => run_stage(&c, Stage::Embed)?,
        Command::Supervise(c) => run_stage(&c, Stage::Supervise)?,
        Command::Signature(c) => run_stage(&c, Stage::Signature)?,
        Command::Classify(c) => run_stage(&c, Stage::Classify)?,
        Command::Eval(args) => eval(&args)?,
        Command::Stats { graph } => {
            if !graph.is_dir() {
                bail!(PipelineError::Config(format!("graph directory {} does not exist", graph.display())));
            }
            let g = read_snapshot(&graph).with_context(|| format!("reading {}", graph.display()))?;
            println!("{}", g.stats());
        }
        Command::Synth(args) => {
            let corpus = generate(&SynthConfig {
                documents: args.documents,
                seed: args.seed,
                folds: args.folds,
                ..SynthConfig::default()
            });
            corpus.write(&args.output).with_context(|| format!("writing {}", args.output.display()))?;
            println!("documents\t{}\nsentences\t{}\ngold facts\t{}", corpus.records.len(), corpus.sentence_count(), corpus.gold.len());
        }
    }
    Ok(())
}

/// 1 for configuration problems, 2 for failures inside a stage.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<PipelineError>() {
        Some(e) if e.is_config() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
