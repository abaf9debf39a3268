mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evince_core::agents::chat::{ChatClient, ChatConfig, HttpChatClient, DEFAULT_API_KEY_ENV};
use evince_core::agents::prompt::PromptTemplate;
use evince_core::agents::similarity::{
    ChatJudgeSimilarity, JaccardSimilarity, SimilarityEvaluator,
};
use evince_core::agents::{Position, RemoteAgent, ScriptedAgent, Side, Stance};
use evince_core::analysis::{aggregate, emit_report, ReportFormat};
use evince_core::crit::{
    crit_score, gate_arguments, ChatCritEvaluator, CritEvaluator, FixtureCritEvaluator, Gate,
};
use evince_core::metrics::LabelScale;
use evince_core::protocol::{
    AbortKind, DebateConfig, DebateRunner, DebateTranscript, StanceAssignment, VerdictKind,
};
use evince_core::store::{
    load_config, load_dataset, load_debate_script, load_transcript, StoreError, TranscriptRecord,
    TranscriptStore,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_REVIEW: u8 = 3;
const EXIT_INGEST: u8 = 4;
const EXIT_REMOTE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "evince",
    version,
    about = "Run and analyze metric-controlled two-agent debates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a live debate against a chat-completion endpoint.
    Debate(DebateArgs),
    /// Replay a scripted debate and print per-round metrics.
    Replay(ReplayArgs),
    /// Score a document's argument quality.
    Crit(CritArgs),
    /// Bias-distance report over an annotated dataset.
    Analyze(AnalyzeArgs),
    /// Render a saved transcript.
    Report(ReportArgs),
    /// List transcripts that need human review.
    ReviewQueue(ReviewArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Debate configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transcript directory.
    #[arg(long, default_value = "transcripts")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args)]
struct DebateArgs {
    /// Text under debate.
    #[arg(
        long,
        conflicts_with = "subject_file",
        required_unless_present = "subject_file"
    )]
    subject: Option<String>,
    #[arg(long)]
    subject_file: Option<PathBuf>,
    /// Label agent A defends and agent B disputes.
    #[arg(long, default_value = "Neutral")]
    label: String,
    /// Label scale (JSON with "labels" and optional "aliases"); defaults to the five-point bias scale.
    #[arg(long)]
    scale: Option<PathBuf>,
    /// Prompt template file.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    /// Ask the model to judge argument similarity instead of using token overlap.
    #[arg(long)]
    judge_similarity: bool,
    /// Sampling seed sent to the endpoint.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReplayArgs {
    /// Debate script (JSON).
    #[arg(long)]
    script: PathBuf,
    /// Replay only the first N scripted rounds.
    #[arg(long)]
    rounds: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CritArgs {
    /// Fixture evaluator (JSON); without it a chat model is used.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Document id (fixture) or text.
    #[arg(
        long,
        conflicts_with = "document_file",
        required_unless_present = "document_file"
    )]
    document: Option<String>,
    #[arg(long)]
    document_file: Option<PathBuf>,
    #[arg(long, default_value_t = evince_core::crit::DEFAULT_DEPTH)]
    depth: u32,
    /// Gate threshold; defaults to the config's tau_crit.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset (CSV: id,category,source,D,R,S,c,g,justification).
    #[arg(long)]
    dataset: PathBuf,
    /// Only articles whose id starts with this prefix.
    #[arg(long)]
    prefix: Option<String>,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    /// Transcript id (looked up in --out) or path.
    transcript: String,
    #[arg(long, default_value = "transcripts")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args)]
struct ReviewArgs {
    /// Transcript directory.
    #[arg(long, default_value = "transcripts")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }

    fn ingest(e: StoreError) -> Self {
        let code = match e {
            StoreError::Config(_) => EXIT_USAGE,
            _ => EXIT_INGEST,
        };
        Self::new(code, e)
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Debate(a) => debate(a),
        Command::Replay(a) => replay(a),
        Command::Crit(a) => crit(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
        Command::ReviewQueue(a) => review_queue(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn config(path: Option<&Path>) -> Result<DebateConfig, Failure> {
    match path {
        Some(p) => load_config(p).map_err(Failure::ingest),
        None => Ok(DebateConfig::default()),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INGEST, format!("{}: {e}", path.display())))
}

fn chat_config(
    endpoint: Option<String>,
    model: Option<String>,
    key_env: String,
    seed: Option<u64>,
) -> ChatConfig {
    let mut cfg = ChatConfig {
        api_key_env: key_env,
        seed,
        ..ChatConfig::default()
    };
    if let Some(e) = endpoint {
        cfg.endpoint = e;
    }
    if let Some(m) = model {
        cfg.model = m;
    }
    cfg
}

fn http_client(cfg: ChatConfig) -> Result<HttpChatClient, Failure> {
    HttpChatClient::from_env(cfg).map_err(|e| Failure::new(EXIT_USAGE, e))
}

fn verdict_code(t: &DebateTranscript) -> u8 {
    match (&t.verdict.kind, &t.aborted) {
        (VerdictKind::Converged, _) => EXIT_OK,
        (_, Some(a)) if a.kind == AbortKind::Remote => EXIT_REMOTE,
        _ => EXIT_REVIEW,
    }
}

/// Saves the transcript when it has rounds, prints the round table and the
/// verdict, and maps the verdict to an exit code.
fn finish(t: DebateTranscript, common: &Common) -> Outcome {
    let code = verdict_code(&t);
    let record = TranscriptRecord::new(t);
    if record.transcript.rounds.is_empty() {
        eprintln!("no rounds completed; transcript not saved");
    } else {
        let store = TranscriptStore::open(&common.out).map_err(Failure::ingest)?;
        let path = store.save(&record).map_err(Failure::ingest)?;
        eprintln!("transcript: {}", path.display());
    }
    print!("{}", render::transcript(&record, common.format));
    let t = &record.transcript;
    eprintln!("verdict: {} ({})", t.verdict.kind, t.verdict.reason);
    Ok(code)
}

fn debate(args: DebateArgs) -> Outcome {
    let cfg = config(args.common.config.as_deref())?;
    let subject = match (&args.subject, &args.subject_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => read_text(p)?,
        (None, None) => {
            return Err(Failure::new(
                EXIT_USAGE,
                "--subject or --subject-file is required",
            ))
        }
    };
    let scale = match &args.scale {
        Some(p) => serde_json::from_str::<LabelScale>(&read_text(p)?)
            .map_err(|e| Failure::new(EXIT_INGEST, format!("{}: {e}", p.display())))?,
        None => LabelScale::five_point_bias(),
    };
    let template = match &args.template {
        Some(p) => PromptTemplate::load(p).map_err(|e| Failure::new(EXIT_INGEST, e))?,
        None => PromptTemplate::default_agent(),
    };
    let a = Stance::new(
        Position::Support,
        &args.label,
        format!("The current annotation, {}, is correct.", args.label),
        &scale,
    )
    .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let b = a.opposite(format!(
        "The current annotation, {}, is wrong; argue for a better label.",
        args.label
    ));

    // Key check happens here, before any request is made.
    let client = http_client(chat_config(
        args.endpoint,
        args.model,
        args.api_key_env,
        args.seed,
    ))?;
    let shared: Arc<dyn ChatClient> = Arc::new(client.clone());
    let mut agent_a = RemoteAgent::new("remote-A", shared.clone(), template.clone());
    let mut agent_b = RemoteAgent::new("remote-B", shared.clone(), template);

    let judge;
    let similarity: &dyn SimilarityEvaluator = if args.judge_similarity {
        judge = ChatJudgeSimilarity::new(client);
        &judge
    } else {
        &JaccardSimilarity
    };
    let crit_eval = ChatCritEvaluator::new(shared);
    let mut runner = DebateRunner::new(cfg.clone(), Arc::new(scale)).with_similarity(similarity);
    if cfg.crit_enabled {
        runner = runner.with_crit(&crit_eval);
    }
    let t = runner
        .run(
            &subject,
            StanceAssignment { a, b },
            &mut agent_a,
            &mut agent_b,
        )
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    finish(t, &args.common)
}

fn replay(args: ReplayArgs) -> Outcome {
    let cfg = config(args.common.config.as_deref())?;
    let mut script = load_debate_script(&args.script).map_err(Failure::ingest)?;
    if let Some(n) = args.rounds {
        script = script.truncated(n);
    }
    let mut a = ScriptedAgent::from_script(&script, Side::A);
    let mut b = ScriptedAgent::from_script(&script, Side::B);
    let stances = StanceAssignment {
        a: script.stances.a.clone(),
        b: script.stances.b.clone(),
    };
    let t = DebateRunner::new(cfg, Arc::new(script.scale.clone()))
        .run(&script.subject, stances, &mut a, &mut b)
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    finish(t, &args.common)
}

fn crit(args: CritArgs) -> Outcome {
    let cfg = config(args.config.as_deref())?;
    let document = match (&args.document, &args.document_file) {
        (Some(d), _) => d.clone(),
        (None, Some(p)) => read_text(p)?,
        (None, None) => {
            return Err(Failure::new(
                EXIT_USAGE,
                "--document or --document-file is required",
            ))
        }
    };
    let evaluator: Box<dyn CritEvaluator> = match &args.fixture {
        Some(p) => {
            Box::new(FixtureCritEvaluator::load(p).map_err(|e| Failure::new(EXIT_INGEST, e))?)
        }
        None => {
            let client = http_client(chat_config(
                args.endpoint,
                args.model,
                args.api_key_env,
                None,
            ))?;
            Box::new(ChatCritEvaluator::new(Arc::new(client)))
        }
    };
    let remote = args.fixture.is_none();
    let report = crit_score(&document, evaluator.as_ref(), args.depth)
        .map_err(|e| Failure::new(if remote { EXIT_REMOTE } else { EXIT_INGEST }, e))?;
    let tau = args.tau.unwrap_or(cfg.tau_crit);
    let gate = gate_arguments(&report, tau);
    print!("{}", render::crit(&report, tau, &gate, args.format));
    Ok(match gate {
        Gate::Pass => EXIT_OK,
        Gate::Flag(_) => EXIT_REVIEW,
    })
}

fn analyze(args: AnalyzeArgs) -> Outcome {
    let scale = LabelScale::five_point_bias();
    let mut data = load_dataset(&args.dataset, &scale).map_err(Failure::ingest)?;
    if let Some(p) = &args.prefix {
        data.retain(|a| a.id.starts_with(p.as_str()));
    }
    let report = aggregate(&data, &scale).map_err(|e| Failure::new(EXIT_INGEST, e))?;
    let text = match args.format {
        Format::Md => emit_report(&report, ReportFormat::Markdown),
        Format::Csv => emit_report(&report, ReportFormat::Csv),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    print!("{text}");
    Ok(EXIT_OK)
}

fn report(args: ReportArgs) -> Outcome {
    let as_path = Path::new(&args.transcript);
    let record = if as_path.is_file() {
        load_transcript(as_path)
    } else {
        TranscriptStore::open(&args.out).and_then(|s| s.load(&args.transcript))
    }
    .map_err(Failure::ingest)?;
    print!("{}", render::transcript(&record, args.format));
    Ok(EXIT_OK)
}

fn review_queue(args: ReviewArgs) -> Outcome {
    let store = TranscriptStore::open(&args.out).map_err(Failure::ingest)?;
    let entries = render::review_entries(&store.list().map_err(Failure::ingest)?);
    print!("{}", render::review_queue(&entries, args.format));
    eprintln!("{} item(s) need review", entries.len());
    Ok(EXIT_OK)
}
