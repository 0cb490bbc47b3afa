use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use divcap::backend::{ApiBackend, BackendConfig};
use divcap::config::{load_synthetic_spec, load_train_config, SweepGrid};
use divcap::io::{self, IoError};
use divcap::pipeline::{run_pipeline, PipelineOptions};
use divcap::reports::{self, EvalReport};
use divcap::service::{AppState, ResponseLog};
use divcap_core::augment::{CompletionBackend, MockBackend};
use divcap_core::corpus::{count_words, filter_outliers, full_paragraph, DEFAULT_MAX_WORDS};
use divcap_core::retrieval::DEFAULT_LAMBDA;
use divcap_core::survey::{aggregate, make_surveys};
use divcap_core::textstats::delta_report;
use divcap_core::train::{ablation_sweep, build_examples, fit, gen_synthetic, SyntheticSpec};
use serde_json::json;

#[derive(Parser)]
#[command(name = "divcap", version, about = "Caption-diversity toolkit for long-video retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset checks.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Generate caption pools for a dataset.
    Augment(AugmentArgs),
    /// Word, length and noun/verb statistics of generated captions.
    Stats(StatsArgs),
    /// Embed captions and videos with trained parameters.
    Embed(EmbedArgs),
    /// Text-to-video retrieval over embedding files.
    Eval(EvalArgs),
    /// Chart data from evaluation reports.
    Chart(ChartArgs),
    /// Train the dual encoder.
    Train(TrainArgs),
    /// Write a synthetic corpus with known structure.
    Synth(SynthArgs),
    /// Run an ablation grid on synthetic corpora.
    Sweep(SweepArgs),
    /// Annotation study files.
    #[command(subcommand)]
    Survey(SurveyCmd),
    /// Serve surveys and collect responses over HTTP.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Check every invariant and report a summary; exit status 2 on violations.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
        max_words: usize,
        #[arg(long, default_value = "dataset")]
        name: String,
        /// Label of the split contained in the file.
        #[arg(long, default_value = "val")]
        split: String,
        /// Also write the outlier-filtered dataset here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Api,
    Mock,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendKind,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "DIVCAP_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 4)]
    in_flight: usize,
    #[arg(long, default_value_t = 60.0)]
    timeout_s: f64,
    /// Defaults to the output path with `.checkpoint.jsonl` appended.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Drop videos whose paragraph is longer than this before generating.
    #[arg(long)]
    max_words: Option<usize>,
    /// Stop after this many videos; rerun to resume.
    #[arg(long)]
    stop_after: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    pools: PathBuf,
    #[arg(long)]
    source: PathBuf,
    /// Lexicon TSV replacing the bundled one.
    #[arg(long)]
    tagger: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    pools: PathBuf,
    /// Caption embeddings, one row per `video_id/kind`.
    #[arg(long)]
    out: PathBuf,
    /// Paragraph embeddings keyed by video id, for survey construction.
    #[arg(long)]
    gt_out: Option<PathBuf>,
    #[arg(long, requires = "video_out")]
    video_features: Option<PathBuf>,
    #[arg(long, requires = "video_features")]
    video_out: Option<PathBuf>,
    /// The model was trained without bigram features.
    #[arg(long)]
    no_bigrams: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    text_emb: PathBuf,
    #[arg(long)]
    video_emb: PathBuf,
    #[arg(long)]
    pools: PathBuf,
    #[arg(long)]
    dual_softmax: bool,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Label used in charts; defaults to the pools file stem.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartKind {
    Deltas,
    Overlap,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(value_enum)]
    kind: ChartKind,
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    pools: PathBuf,
    #[arg(long)]
    video_emb: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Results table; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SurveyCmd {
    /// Build survey versions and their private keys.
    Make {
        #[arg(long)]
        pools: PathBuf,
        /// Paragraph embeddings keyed by video id.
        #[arg(long)]
        gt_emb: PathBuf,
        #[arg(long, default_value_t = 5)]
        versions: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tagger: Option<PathBuf>,
        /// Receives `surveys/` and `keys/`.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Aggregate collected responses.
    Aggregate {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        surveys: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long)]
    surveys: PathBuf,
    /// Without keys the aggregate endpoint answers 409.
    #[arg(long)]
    keys: Option<PathBuf>,
    #[arg(long)]
    log: PathBuf,
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

/// Failure that maps to exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Invalid(String);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Corpus(CorpusCmd::Validate { input, max_words, name, split, output }) => {
            if max_words == 0 {
                bail!("--max-words must be at least 1");
            }
            let dataset = match io::read_dataset(&input, &name, &split) {
                Ok(d) => d,
                Err(e @ (IoError::Corpus { .. } | IoError::MalformedLine { .. })) => {
                    return Err(Invalid(e.to_string()).into())
                }
                Err(e) => return Err(e.into()),
            };
            let (kept, removed) = filter_outliers(&dataset, max_words);
            let words: usize = dataset.videos.iter().map(|v| count_words(&full_paragraph(v))).sum();
            let events: usize = dataset.videos.iter().map(|v| v.events.len()).sum();
            let summary = json!({
                "name": dataset.name,
                "split": dataset.split,
                "videos": dataset.videos.len(),
                "events": events,
                "mean_paragraph_words": if dataset.videos.is_empty() { 0.0 } else { words as f64 / dataset.videos.len() as f64 },
                "max_words": max_words,
                "kept": kept.videos.len(),
                "removed": removed,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(out) = output {
                io::write_dataset(&out, &kept)?;
            }
            Ok(())
        }
        Command::Augment(a) => augment(a),
        Command::Stats(a) => {
            let dataset = io::read_dataset(&a.source, &stem(&a.source), "")?;
            let pools = io::read_pools(&a.pools, Some(&dataset))?;
            let lexicon = io::load_lexicon(a.tagger.as_deref())?;
            let report = delta_report(&pools, &dataset, &lexicon);
            if !report.missing_pools.is_empty() {
                log::warn!("{} videos have no pool", report.missing_pools.len());
            }
            io::write_json(&a.out, &report)?;
            Ok(())
        }
        Command::Embed(a) => {
            let params = io::read_params(&a.params)?;
            let pools = io::read_pools(&a.pools, None)?;
            let captions = reports::embed_captions(&params, &pools, !a.no_bigrams);
            io::write_embeddings(&a.out, &captions)?;
            if let Some(gt) = a.gt_out {
                io::write_embeddings(&gt, &reports::gt_embeddings(&captions))?;
            }
            if let (Some(feats), Some(out)) = (a.video_features, a.video_out) {
                let features = io::read_embeddings(&feats)?;
                if features.dim() != params.video.cols {
                    bail!("video features have {} dims, the model expects {}", features.dim(), params.video.cols);
                }
                io::write_embeddings(&out, &reports::embed_videos(&params, &features))?;
            }
            Ok(())
        }
        Command::Eval(a) => {
            let text = io::read_embeddings(&a.text_emb)?;
            let video = io::read_embeddings(&a.video_emb)?;
            let pools = io::read_pools(&a.pools, None)?;
            let name = a.dataset.unwrap_or_else(|| stem(&a.pools));
            let lambda = a.dual_softmax.then_some(a.lambda);
            let report = reports::evaluate_embeddings(&name, &text, &video, &pools, lambda)?;
            io::write_json(&a.report, &report)?;
            Ok(())
        }
        Command::Chart(a) => {
            let loaded: Vec<EvalReport> = a.reports.iter().map(|p| io::read_json(p)).collect::<Result<_, _>>()?;
            match a.kind {
                ChartKind::Deltas => io::write_json(&a.out, &reports::deltas(&loaded)?)?,
                ChartKind::Overlap => io::write_json(&a.out, &reports::overlap(&loaded)?)?,
            }
            Ok(())
        }
        Command::Train(a) => {
            let config = load_train_config(&a.config)?;
            let dataset = io::read_dataset(&a.corpus, &stem(&a.corpus), "train")?;
            let pools = io::read_pools(&a.pools, Some(&dataset))?;
            let features = io::read_embeddings(&a.video_emb)?;
            let examples = build_examples(&dataset, &pools, &features)?;
            let (params, history) = fit(&examples, &config)?;
            io::write_params(&a.out, &params)?;
            if let Some(h) = a.history {
                io::write_json(&h, &json!({ "config": config, "history": history }))?;
            }
            if let Some(last) = history.epochs.last() {
                log::info!("final epoch {}: loss {:.4}", last.epoch, last.loss);
            }
            Ok(())
        }
        Command::Synth(a) => {
            let spec = match &a.spec {
                Some(p) => load_synthetic_spec(p)?,
                None => SyntheticSpec::default(),
            };
            let (train, held) = gen_synthetic(&spec, a.seed)?;
            for (dir, part) in [("train", &train), ("test", &held)] {
                let d = a.out_dir.join(dir);
                io::write_dataset(&d.join("dataset.jsonl"), &part.dataset)?;
                io::write_pools(&d.join("pools.jsonl"), &part.pools)?;
                io::write_embeddings(&d.join("features.dvec"), &part.features)?;
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let grid = SweepGrid::load(&a.grid)?;
            let rows = ablation_sweep(&grid.cells(), &grid.base, &grid.spec, &grid.seeds);
            for r in rows.iter().filter(|r| r.failed.is_some()) {
                log::warn!("cell {} failed: {}", r.cell.kinds_label, r.failed.as_deref().unwrap_or(""));
            }
            let body = io::to_json_pretty(&rows);
            match a.out {
                Some(p) => io::write_atomic(&p, body.as_bytes())?,
                None => print!("{body}"),
            }
            Ok(())
        }
        Command::Survey(SurveyCmd::Make { pools, gt_emb, versions, seed, tagger, out_dir }) => {
            let pools = io::read_pools(&pools, None)?;
            let gt = io::read_embeddings(&gt_emb)?;
            let lexicon = io::load_lexicon(tagger.as_deref())?;
            let (docs, keys) = make_surveys(&pools, &gt, versions, seed, &lexicon)?;
            io::write_surveys(&out_dir.join("surveys"), &docs)?;
            io::write_keys(&out_dir.join("keys"), &keys)?;
            Ok(())
        }
        Command::Survey(SurveyCmd::Aggregate { responses, surveys, keys, out }) => {
            let responses = io::read_responses(&responses)?;
            let docs = io::read_surveys(&surveys)?;
            let keys = io::read_keys(&keys)?;
            let report = aggregate(&responses, &docs, &keys)?;
            io::write_json(&out, &report)?;
            Ok(())
        }
        Command::Serve(a) => {
            let docs = io::read_surveys(&a.surveys)?;
            let keys = a.keys.as_deref().map(io::read_keys).transpose()?;
            let log = ResponseLog::open(&a.log)?;
            log::info!("replayed {} responses from {}", log.len(), a.log.display());
            let state = Arc::new(AppState::new(docs, keys, log));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(divcap::service::serve((a.host, a.port).into(), state, a.static_dir))
        }
    }
}

fn augment(a: AugmentArgs) -> anyhow::Result<()> {
    if a.in_flight == 0 {
        bail!("--in-flight must be at least 1");
    }
    let mut dataset = io::read_dataset(&a.input, &stem(&a.input), "")?;
    if let Some(max) = a.max_words {
        let (kept, removed) = filter_outliers(&dataset, max);
        if !removed.is_empty() {
            log::info!("dropped {} outlier videos", removed.len());
        }
        dataset = kept;
    }
    let checkpoint = a.checkpoint.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".checkpoint.jsonl");
        PathBuf::from(p)
    });
    let opts = PipelineOptions {
        seed: a.seed,
        retries: a.retries,
        max_in_flight: a.in_flight,
        out_path: a.output.clone(),
        checkpoint_path: checkpoint,
        errors_path: None,
        stop_after: a.stop_after,
    };
    let backend: Box<dyn CompletionBackend + Sync> = match a.backend {
        BackendKind::Mock => Box::new(MockBackend { seed: a.seed }),
        BackendKind::Api => {
            let defaults = BackendConfig::default();
            let config = BackendConfig {
                endpoint: a.endpoint.context("--endpoint is required with --backend api")?,
                model_name: a.model.unwrap_or(defaults.model_name),
                api_key_env: a.api_key_env,
                max_in_flight: a.in_flight,
                retries: a.retries,
                timeout_s: a.timeout_s,
            };
            Box::new(ApiBackend::from_env(config)?)
        }
    };
    let summary = run_pipeline(&dataset, backend.as_ref(), &opts)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
