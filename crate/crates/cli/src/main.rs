use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use docasref::backend::{
    compute_idf, load_fixture, Backend, CachedBackend, FixtureBackend, ModelConfig, OnnxBackend,
};
use docasref::dataset::{load_dataset, DatasetFormat, Document};
use docasref::harness::{coverage_warnings, render_report, MetricKind, ReportFormat, SuiteConfig};
use docasref::lexical::{rouge_reffree, RougeVariant};
use docasref::score::{Component, MetricValue};
use docasref::sentence::{leadword_filter, sentence_bertscore, SentenceSimConfig, SimKind, Weighting};
use docasref::token_metrics::{bertscore_reffree, moverscore_greedy, GreedyMatchConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "docasref", version, about = "Score summaries against their source documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one summary against one document and print a JSON line.
    Score(ScoreArgs),
    /// Run a benchmark suite and write its correlation report.
    Benchmark(BenchmarkArgs),
    /// Check committed embedding fixtures against an ONNX encoder.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Onnx,
    Fixture,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct ScoreArgs {
    /// bertscore, moverscore, rouge1, rouge2, rougeL or sentence_bertscore
    #[arg(long)]
    metric: String,
    /// Print a single component instead of the whole triple.
    #[arg(long)]
    component: Option<Component>,
    #[arg(long, value_enum, default_value = "onnx")]
    backend: BackendKind,
    /// Model config (TOML/JSON) for `onnx`, fixture file for `fixture`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "off")]
    idf: Toggle,
    /// Documents to compute idf weights over: a JSONL dataset or one document per line.
    #[arg(long)]
    idf_corpus: Option<PathBuf>,
    /// Keep only this leading fraction of the document's sentences.
    #[arg(long)]
    leadword: Option<f64>,
    #[arg(long, default_value = "cosine")]
    sim_kind: SimKind,
    #[arg(long, default_value = "none")]
    weighting: Weighting,
    /// NLI classifier config, required by the nli_* similarity kinds.
    #[arg(long)]
    nli_model: Option<PathBuf>,
    #[arg(long, conflicts_with = "summary_file", required_unless_present = "summary_file")]
    summary: Option<String>,
    #[arg(long)]
    summary_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "document_file", required_unless_present = "document_file")]
    document: Option<String>,
    #[arg(long)]
    document_file: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Report path; defaults to the suite's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the suite's report format.
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Subcommand)]
enum FixturesCommand {
    Verify {
        #[arg(long)]
        fixture: PathBuf,
        /// Encoder config the fixture was generated from.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

/// Usage problems exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<docasref::Error> for Failure {
    fn from(e: docasref::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn text_arg(inline: &Option<String>, file: &Option<PathBuf>) -> anyhow::Result<String> {
    match (inline, file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        (None, None) => Err(anyhow!("no text given")),
    }
}

/// Token config files name the encoder; fixture files are used as-is.
fn embed_backend(kind: BackendKind, model: Option<&Path>) -> Result<Box<dyn Backend>, Failure> {
    let model = model.ok_or_else(|| usage("--model is required by this metric"))?;
    match kind {
        BackendKind::Fixture => {
            require_file(model, "fixture file")?;
            Ok(Box::new(FixtureBackend::from_path(model)?))
        }
        BackendKind::Onnx => Ok(with_cache(onnx_backend(model)?)),
    }
}

fn onnx_backend(config: &Path) -> Result<OnnxBackend, Failure> {
    require_file(config, "model config")?;
    let cfg = ModelConfig::from_file(config)?;
    require_file(&cfg.encoder_path, "model file")?;
    require_file(&cfg.tokenizer_path, "tokenizer file")?;
    Ok(OnnxBackend::load(cfg)?)
}

fn with_cache(b: OnnxBackend) -> Box<dyn Backend> {
    let salt = format!("layer{}:max{}:{}", b.layer(), b.config().max_length, b.config().long_input_mode);
    match CachedBackend::from_env(b, salt) {
        Ok(cached) => Box::new(cached),
        Err(b) => Box::new(b),
    }
}

fn idf_corpus(path: &Path) -> anyhow::Result<Vec<String>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let ds = load_dataset(path, DatasetFormat::Jsonl)?;
        return Ok(ds.documents.into_iter().map(|d| d.text).collect());
    }
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(raw.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect())
}

fn cmd_score(args: ScoreArgs) -> CmdResult {
    let summary = text_arg(&args.summary, &args.summary_file)?;
    let document = text_arg(&args.document, &args.document_file)?;
    let mut doc = Document::new("document", document);
    if let Some(k) = args.leadword {
        if !(k > 0.0 && k <= 1.0) {
            return Err(usage(format!("--leadword {k} is outside (0, 1]")));
        }
        doc = leadword_filter(&doc, k)?;
    }
    let metric = args.metric.as_str();
    if args.idf == Toggle::On && metric != "bertscore" {
        return Err(usage("--idf on only applies to bertscore"));
    }

    let value: MetricValue = match metric {
        "bertscore" | "moverscore" => {
            let backend = embed_backend(args.backend, args.model.as_deref())?;
            let cfg = match args.idf {
                Toggle::Off => GreedyMatchConfig::plain(),
                Toggle::On => {
                    let corpus = args
                        .idf_corpus
                        .as_deref()
                        .ok_or_else(|| usage("--idf on needs --idf-corpus"))?;
                    let docs = idf_corpus(corpus)?
                        .iter()
                        .map(|d| backend.tokenize(d))
                        .collect::<docasref::Result<Vec<_>>>()?;
                    GreedyMatchConfig::with_idf(compute_idf(&docs)?)
                }
            };
            if metric == "bertscore" {
                bertscore_reffree(&summary, &doc.text, &cfg, &backend)?.into()
            } else {
                MetricValue::Scalar(moverscore_greedy(&summary, &doc.text, &cfg, &backend)?)
            }
        }
        "sentence_bertscore" => {
            let cfg = SentenceSimConfig {
                sim_kind: args.sim_kind,
                weighting: args.weighting,
            };
            let backend: Box<dyn Backend> = if args.sim_kind.needs_nli() {
                let nli = args
                    .nli_model
                    .as_deref()
                    .ok_or_else(|| usage(format!("--sim-kind {} needs --nli-model", args.sim_kind)))?;
                Box::new(onnx_backend(nli)?)
            } else {
                embed_backend(args.backend, args.model.as_deref())?
            };
            sentence_bertscore(&summary, &doc.text, &cfg, &backend)?.into()
        }
        other => match other.parse::<RougeVariant>() {
            Ok(v) => rouge_reffree(&summary, &doc.text, v).into(),
            Err(_) => return Err(usage(format!("unknown metric {other:?}"))),
        },
    };

    let line = match (args.component, value) {
        (Some(c), v) => {
            let score = v.component(c).map_err(|e| usage(e.to_string()))?;
            json!({"metric": metric, "component": c.as_str(), "score": score})
        }
        (None, MetricValue::Triple(t)) => {
            json!({"metric": metric, "precision": t.precision, "recall": t.recall, "f1": t.f1})
        }
        (None, MetricValue::Scalar(s)) => json!({"metric": metric, "score": s}),
    };
    println!("{line}");
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> CmdResult {
    require_file(&args.suite, "suite file")?;
    let suite = SuiteConfig::from_file(&args.suite).map_err(|e| usage(e.to_string()))?;
    let specs = suite.specs().map_err(|e| match e {
        docasref::Error::InvalidArgument(m) => usage(m),
        other => other.into(),
    })?;
    require_file(&suite.dataset, "dataset")?;
    if let Some(b) = &suite.backend {
        require_file(&b.path, "backend file")?;
        if let Some(n) = &b.nli {
            require_file(n, "NLI model config")?;
        }
    }
    let dataset = load_dataset(&suite.dataset, DatasetFormat::Jsonl)?;
    for spec in &specs {
        if let MetricKind::External(run) = &spec.kind {
            for w in coverage_warnings(run, &dataset) {
                eprintln!("warning: {w}");
            }
        }
    }

    let out = suite.run()?;
    let format = args.format.unwrap_or(suite.format);
    let text = render_report(&out.report, format);
    let rows = out.report.rows.len();
    match args.out.or(suite.output) {
        Some(path) => {
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {rows} rows to {}", path.display());
        }
        None => {
            print!("{text}");
            eprintln!("{rows} rows");
        }
    }
    Ok(())
}

fn cmd_fixtures_verify(fixture: &Path, model: &Path, tolerance: f64) -> CmdResult {
    require_file(fixture, "fixture file")?;
    require_file(model, "model config")?;
    let store = load_fixture(fixture)?;
    let mut cfg = ModelConfig::from_file(model)?;
    require_file(&cfg.encoder_path, "model file")?;
    require_file(&cfg.tokenizer_path, "tokenizer file")?;
    cfg.layer = Some(store.layer);
    let backend = OnnxBackend::load(cfg)?;

    let mut failing = Vec::new();
    let mut worst = 0.0_f64;
    for item in store.items() {
        let Some(text) = &item.text else {
            failing.push(format!("{}: no text to re-embed", item.id));
            continue;
        };
        let seq = backend.embed_tokens(text)?;
        if seq.tokens != item.sequence.tokens {
            failing.push(format!("{}: tokens differ", item.id));
            continue;
        }
        let dev = seq
            .vectors
            .iter()
            .zip(item.sequence.vectors.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        if dev > tolerance {
            failing.push(format!("{}: max deviation {dev:.3e}", item.id));
        }
    }
    if failing.is_empty() {
        println!("{} items within {tolerance:e} (max deviation {worst:.3e})", store.len());
        return Ok(());
    }
    for f in &failing {
        eprintln!("{f}");
    }
    Err(Failure::Runtime(anyhow!(
        "{} of {} fixture items failed verification",
        failing.len(),
        store.len()
    )))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Score(_) => "score",
        Command::Benchmark(_) => "benchmark",
        Command::Fixtures { .. } => "fixtures",
    };
    let result = match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Fixtures {
            command: FixturesCommand::Verify { fixture, model, tolerance },
        } => cmd_fixtures_verify(&fixture, &model, tolerance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            let usage = match cmd.find_subcommand_mut(name) {
                Some(sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("error: {msg}\n\n{usage}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
