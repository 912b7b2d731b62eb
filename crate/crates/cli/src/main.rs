use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hnstkit::captioner::{
    generate_instruct, Backend, ClientConfig, HttpBackend, HttpBackendConfig, ImagePayload, InstructConfig, LlmClient, MockBackend, RateLimit,
    TemplateSet,
};
use hnstkit::evalharness::{evaluate_run, read_predictions, EvalConfig, Judge, LlmJudge, RuleJudge};
use hnstkit::hnstgen::{build_hnstd, write_hnstd, Captioning, HnstConfig, HnstError};
use hnstkit::ingest::{load_manifest, resolve_corpus, AnnotatedImage, DatasetManifest};
use hnstkit::io::{read_jsonl, write_atomic, write_jsonl};
use hnstkit::qareview::{
    accuracy_report, demo_session, sample_pairs, CaptionPair, ReviewApi, ReviewServer, ReviewSession, SessionStore, StoreError, DEFAULT_SAMPLE_SIZE,
};
use hnstkit::sample::InstructionSample;
use hnstkit::synth::{write_synth_corpus, SynthConfig};
use hnstkit::variousgen::{build_various, write_various, VariousConfig, VariousSources};

/// Instruction dataset construction, caption quality review and scoring for
/// remote-sensing vision-language models.
#[derive(Parser)]
#[command(name = "hnstkit", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset from an annotation manifest.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Score a prediction file against one or more dataset files.
    Evaluate(EvaluateArgs),
    /// Caption quality review sessions.
    Qa {
        #[command(subcommand)]
        command: QaCommand,
    },
    /// Write a deterministic synthetic corpus and its manifest.
    SynthCorpus(SynthArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Honest instruction dataset: factual and deceptive questions.
    Hnst(GenerateArgs),
    /// Attribute, counting, measurement, vectorizing and passthrough tasks.
    Various(GenerateArgs),
    /// Caption plus conversation or reasoning dialogues per image.
    VersadInstruct {
        #[command(flatten)]
        common: GenerateArgs,
        /// Images to caption (default: the configured count, capped at the corpus).
        #[arg(long)]
        images: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Mock,
    Live,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendKind,
    /// Canned mock responses (JSON).
    #[arg(long)]
    mock_fixtures: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Requests allowed to start per minute (live backend).
    #[arg(long)]
    requests_per_minute: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Pin every target to the reference table counts and fail on shortfall.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// TOML file overriding configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Worker threads and concurrent model calls.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JudgeKind {
    /// Offline refusal-keyword rule.
    Mock,
    /// Model judge through the configured backend.
    Llm,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset files (line-delimited samples).
    #[arg(long, required = true, num_args = 1..)]
    dataset: Vec<PathBuf>,
    /// Line-delimited {"sample_id", "prediction"} records.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "mock")]
    judge: JudgeKind,
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Fixed error for missing or unparseable numeric answers (default: |gold|).
    #[arg(long)]
    mae_penalty: Option<f64>,
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Subcommand)]
enum QaCommand {
    /// Sample caption pairs into a new session.
    New {
        #[arg(long)]
        store: PathBuf,
        /// Line-delimited {"image", "caption"} records.
        #[arg(long)]
        captions: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the seeded demo session.
    Demo {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Print a session's accuracy report.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        session: String,
        #[arg(long)]
        json: bool,
    },
    /// Serve the review API.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8040)]
        port: u16,
        /// Directory image references resolve against.
        #[arg(long)]
        images: Option<PathBuf>,
        /// Static client files served at /.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Object-annotated images.
    #[arg(long)]
    images: Option<usize>,
    /// Only object images (enough for the honest dataset).
    #[arg(long)]
    objects_only: bool,
    #[arg(long)]
    force: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Refuses a non-empty output directory unless `force`.
fn claim_output(dir: &Path, force: bool) -> Outcome {
    let occupied = std::fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false);
    if occupied && !force {
        return Err(usage(format!("{} already has outputs; pass --force to overwrite", dir.display())));
    }
    std::fs::create_dir_all(dir).map_err(runtime)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(runtime)
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(args: &GenerateArgs) -> Result<(DatasetManifest, Vec<AnnotatedImage>), Failure> {
    if !args.manifest.is_file() {
        return Err(usage(format!("manifest {} not found", args.manifest.display())));
    }
    let manifest = load_manifest(&args.manifest).map_err(usage)?;
    let corpus = resolve_corpus(&manifest);
    for r in &corpus.reports {
        for e in &r.errors {
            log::warn!("{}: {e}", r.name);
        }
        log::info!("{}: {} images from {} files, {} clamped instances", r.name, r.images, r.files, r.clamped_instances);
    }
    Ok((manifest, corpus.images))
}

fn client(args: &BackendArgs, concurrency: usize) -> Result<LlmClient, Failure> {
    let templates = match &args.templates {
        Some(dir) => TemplateSet::with_overrides(dir).map_err(usage)?,
        None => TemplateSet::builtin(),
    };
    let (backend, logical_clock): (Arc<dyn Backend>, bool) = match args.backend {
        BackendKind::Mock => {
            let mock = match &args.mock_fixtures {
                Some(p) => MockBackend::from_fixture_file(p).map_err(usage)?,
                None => MockBackend::default(),
            };
            (Arc::new(mock), true)
        }
        BackendKind::Live => (Arc::new(HttpBackend::new(HttpBackendConfig::from_env().map_err(usage)?)), false),
    };
    let mut config = ClientConfig {
        max_in_flight: concurrency.max(1),
        rate: args.requests_per_minute.map(|n| RateLimit {
            requests: n.max(1),
            interval: Duration::from_secs(60),
        }),
        cache_dir: args.cache_dir.clone(),
        logical_clock,
        ..ClientConfig::default()
    };
    if logical_clock {
        config.retry.base_delay = Duration::ZERO;
    }
    Ok(LlmClient::new(backend, templates, config))
}

/// Attaches the image file when the uri names one, else a bare reference.
fn load_image(image: &AnnotatedImage) -> ImagePayload {
    let candidates = [image.uri.clone(), format!("{}.png", image.uri), format!("{}.jpg", image.uri)];
    for c in candidates {
        if let Ok(bytes) = std::fs::read(&c) {
            return ImagePayload {
                id: image.image_id.clone(),
                bytes,
                crop: None,
            };
        }
    }
    ImagePayload::reference(image.image_id.clone())
}

fn generate_hnst(args: &GenerateArgs) -> Outcome {
    let (_, corpus) = load(args)?;
    let mut config = match &args.config {
        Some(p) => read_toml(p)?,
        None if args.preset == Some(Preset::Paper) => HnstConfig::paper(args.seed),
        None => HnstConfig::default(),
    };
    if args.preset == Some(Preset::Paper) && args.config.is_some() {
        config.min_scale = 1.0;
    }
    config.seed = args.seed;
    claim_output(&args.out, args.force)?;
    let client = client(&args.backend, args.concurrency)?;
    let cap = Captioning {
        client: &client,
        load_image: &load_image,
    };
    let dataset = pool(args.concurrency)?.install(|| build_hnstd(&corpus, &config, Some(&cap))).map_err(|e| match e {
        HnstError::Config(_) => usage(e),
        _ => runtime(e),
    })?;
    write_hnstd(&args.out, &dataset, Some(&client)).map_err(runtime)?;
    for w in &dataset.report.warnings {
        log::warn!("{w}");
    }
    println!("{:<6} {:<30} {:>8} {:>9}", "split", "stream", "target", "produced");
    for s in &dataset.report.streams {
        println!("{:<6} {:<30} {:>8} {:>9}", s.split.as_str(), s.stream.as_str(), s.target, s.produced);
    }
    println!("train {} samples over {} images, test {} samples over {} images", dataset.train.len(), dataset.report.train_images, dataset.test.len(), dataset.report.test_images);
    Ok(())
}

fn generate_various(args: &GenerateArgs) -> Outcome {
    let (manifest, corpus) = load(args)?;
    let mut config: VariousConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None if args.preset == Some(Preset::Paper) => VariousConfig::paper(args.seed),
        None => VariousConfig::default(),
    };
    if args.preset == Some(Preset::Paper) {
        config.strict = true;
    }
    config.seed = args.seed;
    let sources = VariousSources::from_manifest(&manifest).map_err(usage)?;
    claim_output(&args.out, args.force)?;
    let dataset = pool(args.concurrency)?.install(|| build_various(&corpus, &sources, &config)).map_err(runtime)?;
    write_various(&args.out, &dataset).map_err(runtime)?;
    for w in &dataset.report.warnings {
        log::warn!("{w}");
    }
    println!("{:<12} {:>8} {:>9}", "task", "target", "produced");
    for t in &dataset.report.tasks {
        println!("{:<12} {:>8} {:>9}", t.task.as_str(), t.target, t.produced);
    }
    Ok(())
}

fn generate_instruct_cmd(args: &GenerateArgs, images: Option<usize>) -> Outcome {
    let (_, corpus) = load(args)?;
    let mut config: InstructConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None => InstructConfig::default(),
    };
    config.seed = args.seed;
    if let Some(n) = images {
        config.images = n;
    }
    claim_output(&args.out, args.force)?;
    let client = client(&args.backend, args.concurrency)?;
    let (records, report) = pool(args.concurrency)?.install(|| generate_instruct(&corpus, &client, &config, &load_image)).map_err(runtime)?;
    write_jsonl(&args.out.join("instruct.jsonl"), &records).map_err(runtime)?;
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(runtime)?;
    bytes.push(b'\n');
    write_atomic(&args.out.join("report.json"), &bytes).map_err(runtime)?;
    client.write_transcript_log(&args.out.join("transcripts.jsonl")).map_err(runtime)?;
    println!(
        "{} images: {} conversation, {} reasoning, {} rejected",
        report.requested,
        report.conversation,
        report.reasoning,
        report.rejected.len()
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Outcome {
    let mut dataset: Vec<InstructionSample> = Vec::new();
    for p in &args.dataset {
        if !p.is_file() {
            return Err(usage(format!("dataset {} not found", p.display())));
        }
        dataset.extend(read_jsonl::<InstructionSample>(p).map_err(usage)?);
    }
    if !args.predictions.is_file() {
        return Err(usage(format!("predictions {} not found", args.predictions.display())));
    }
    let predictions = read_predictions(&args.predictions).map_err(usage)?;
    claim_output(&args.out, args.force)?;
    let config = EvalConfig {
        iou_threshold: args.iou_threshold,
        mae_penalty: args.mae_penalty,
    };
    let llm_client;
    let llm_judge;
    let judge: &dyn Judge = match args.judge {
        JudgeKind::Mock => &RuleJudge,
        JudgeKind::Llm => {
            llm_client = client(&args.backend, args.concurrency)?;
            llm_judge = LlmJudge { client: &llm_client };
            &llm_judge
        }
    };
    let report = pool(args.concurrency)?.install(|| evaluate_run(&dataset, &predictions, judge, &config)).map_err(usage)?;
    write_atomic(&args.out.join("score.json"), format!("{}\n", report.to_json()).as_bytes()).map_err(runtime)?;
    let table = report.table();
    write_atomic(&args.out.join("score.txt"), table.as_bytes()).map_err(runtime)?;
    print!("{table}");
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if report.unscored > 0 {
        return Err(runtime(format!("{} sample(s) could not be judged; report is incomplete", report.unscored)));
    }
    Ok(())
}

fn store_failure(e: StoreError) -> Failure {
    match e {
        StoreError::Io(_) => runtime(e),
        _ => usage(e),
    }
}

fn qa(cmd: &QaCommand) -> Outcome {
    match cmd {
        QaCommand::New { store, captions, id, n, seed } => {
            let pairs: Vec<CaptionPair> = read_jsonl(captions).map_err(usage)?;
            let picked = sample_pairs(&pairs, *n, *seed).map_err(usage)?;
            let store = SessionStore::open(store).map_err(store_failure)?;
            let s = store.create(ReviewSession::new(id.clone(), &picked)).map_err(store_failure)?;
            println!("session {} with {} pairs and {} sentences", s.session_id, s.pairs, s.sentences);
            Ok(())
        }
        QaCommand::Demo { store, seed, force } => {
            let store = SessionStore::open(store).map_err(store_failure)?;
            let session = demo_session(*seed);
            let s = if *force { store.replace(session) } else { store.create(session) }.map_err(store_failure)?;
            println!("session {} with {} pairs and {} sentences", s.session_id, s.pairs, s.sentences);
            Ok(())
        }
        QaCommand::Report { store, session, json } => {
            let store = SessionStore::open(store).map_err(store_failure)?;
            let report = accuracy_report(&store.get(session).map_err(store_failure)?);
            if *json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
            } else {
                print!("{}", report.table());
            }
            Ok(())
        }
        QaCommand::Serve { store, host, port, images, ui } => {
            let api = ReviewApi {
                store: SessionStore::open(store).map_err(store_failure)?,
                image_root: images.clone(),
                static_dir: ui.clone(),
            };
            let server = ReviewServer::bind(&format!("{host}:{port}"), api).map_err(runtime)?;
            println!("listening on http://{}", server.local_addr());
            use std::io::Write as _;
            let _ = std::io::stdout().flush();
            server.run();
            Ok(())
        }
    }
}

fn synth(args: &SynthArgs) -> Outcome {
    claim_output(&args.out, args.force)?;
    let mut config = if args.objects_only {
        SynthConfig::objects_only(args.seed, SynthConfig::default().images)
    } else {
        SynthConfig {
            seed: args.seed,
            ..SynthConfig::default()
        }
    };
    if let Some(n) = args.images {
        config.images = n;
    }
    let manifest = write_synth_corpus(&args.out, &config).map_err(runtime)?;
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match &cli.command {
        Command::Generate { kind } => match kind {
            GenerateKind::Hnst(a) => generate_hnst(a),
            GenerateKind::Various(a) => generate_various(a),
            GenerateKind::VersadInstruct { common, images } => generate_instruct_cmd(common, *images),
        },
        Command::Evaluate(a) => evaluate(a),
        Command::Qa { command } => qa(command),
        Command::SynthCorpus(a) => synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
