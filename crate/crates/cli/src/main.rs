use std::fs;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use promptgauge::nli::HttpEntailment;
use promptgauge::{analyze_response, AnalyzeFailure, AnalyzeRequest, AppState, RequestOptions};
use promptgauge_core::advisor::Thresholds;
use promptgauge_core::corpus::{
    compare_groups, corpus_stats, detect_english, load_corpus, CorpusSchema, LoadNotice,
    StopwordDetector,
};
use promptgauge_core::features::{extract_features, Dataset, Feature, FeatureVector, Scope};
use promptgauge_core::model::{accuracy, cross_validate, fit_pipeline, ModelParams, TrainConfig};
use promptgauge_core::text::EntailmentScorer;
use promptgauge_core::vif::prune_by_vif;
use promptgauge_core::{Assets, Error};

const EXIT_INPUT: u8 = 2;
const EXIT_ASSET: u8 = 3;

#[derive(Parser)]
#[command(name = "promptgauge", version, about = "Measure knowledge gaps in developer prompts")]
struct Cli {
    /// Asset directory (lexicons, patterns, calibration, model); bundled assets when unset.
    #[arg(long, global = true, env = "PROMPTGAUGE_ASSETS")]
    assets: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a draft prompt and print a gap report.
    Analyze(AnalyzeArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
    /// Corpus loading and summaries.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Train an L1 logistic model from a feature CSV.
    Train(TrainArgs),
    /// Evaluate a model on a feature CSV.
    Evaluate(EvaluateArgs),
    /// Report variance inflation factors and the pruned feature set.
    Vif(VifArgs),
    /// Write the bundled assets to a directory for editing.
    ExportAssets { dir: PathBuf },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Read the prompt from a file.
    #[arg(long, conflicts_with = "stdin")]
    file: Option<PathBuf>,
    /// Read the prompt from standard input.
    #[arg(long)]
    stdin: bool,
    /// Treat --file/--stdin input as a JSON request body, as sent to /v1/analyze.
    #[arg(long)]
    request: bool,
    #[arg(long, conflicts_with_all = ["file", "stdin"])]
    description: Option<String>,
    /// A code snippet; repeat for several.
    #[arg(long = "code", conflicts_with_all = ["file", "stdin"])]
    code: Vec<String>,
    #[arg(long, conflicts_with_all = ["file", "stdin"])]
    error_log: Option<String>,
    /// Libraries and frameworks in use.
    #[arg(long, conflicts_with_all = ["file", "stdin"])]
    libs: Option<String>,
    /// Resource links, one per line.
    #[arg(long, conflicts_with_all = ["file", "stdin"])]
    resources: Option<String>,
    #[arg(long)]
    threshold_context: Option<f64>,
    #[arg(long)]
    threshold_specificity: Option<f64>,
    #[arg(long)]
    threshold_clarity: Option<f64>,
    /// Compact JSON (default).
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON.
    #[arg(long)]
    pretty: bool,
    /// External NLI endpoint for entailment scoring.
    #[arg(long, env = "PROMPTGAUGE_NLI_URL")]
    nli_url: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8571)]
    port: u16,
    /// Address to bind; anything but loopback exposes the unauthenticated API.
    #[arg(long, default_value = "127.0.0.1")]
    listen: IpAddr,
    /// Browser origin allowed by CORS; repeatable.
    #[arg(long = "cors-origin", default_values_t = ["http://localhost:5173".to_string()])]
    cors_origins: Vec<String>,
    #[arg(long, env = "PROMPTGAUGE_NLI_URL")]
    nli_url: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Minimal,
    DevgptIssues,
}

impl From<SchemaArg> for CorpusSchema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Minimal => CorpusSchema::Minimal,
            SchemaArg::DevgptIssues => CorpusSchema::DevgptIssues,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    Status,
}

#[derive(Args)]
struct CorpusInput {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "minimal")]
    schema: SchemaArg,
    /// Include conversations the language filter rejects.
    #[arg(long)]
    keep_non_english: bool,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Per-status counts and min/median/max of every metric.
    Stats {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(long, value_enum, default_value = "status")]
        group_by: GroupBy,
        #[arg(long, value_enum, default_value = "json")]
        out: OutFormat,
    },
    /// Welch t-test of every metric between open and closed conversations.
    Ttest {
        #[command(flatten)]
        input: CorpusInput,
    },
    /// Export the per-conversation feature matrix as CSV.
    Features {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    features_csv: PathBuf,
    #[arg(long = "l1", default_value_t = 0.01)]
    l1: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Comma-separated feature list; skips VIF pruning.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long, default_value_t = 5.0)]
    vif_threshold: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    features_csv: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Cross-validate the model's configuration with this many folds.
    #[arg(long)]
    cv: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VifArgs {
    features_csv: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    fn asset(message: impl ToString) -> Self {
        Failure {
            code: EXIT_ASSET,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Asset { .. } | Error::Config(_) => Failure::asset(e),
            _ => Failure::input(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_assets(cli.assets.as_deref()).and_then(|assets| run(cli.command, assets));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_assets(dir: Option<&Path>) -> Result<&'static Assets, Failure> {
    match dir {
        None => Ok(Assets::bundled()),
        Some(dir) => {
            let assets = Assets::load_dir(dir).map_err(Failure::asset)?;
            Ok(Box::leak(Box::new(assets)))
        }
    }
}

fn run(command: Command, assets: &'static Assets) -> Outcome {
    match command {
        Command::Analyze(args) => analyze(args, assets),
        Command::Serve(args) => serve(args, assets),
        Command::Corpus(cmd) => corpus(cmd, assets),
        Command::Train(args) => train(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Vif(args) => vif(args),
        Command::ExportAssets { dir } => {
            Assets::write_bundled(&dir)?;
            Ok(())
        }
    }
}

fn nli(url: Option<String>) -> Option<Arc<dyn EntailmentScorer>> {
    url.map(|u| Arc::new(HttpEntailment::new(u, Duration::from_secs(10))) as Arc<dyn EntailmentScorer>)
}

fn read_input(args: &AnalyzeArgs) -> Result<Option<String>, Failure> {
    if let Some(path) = &args.file {
        return fs::read_to_string(path)
            .map(Some)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())));
    }
    if args.stdin {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(Some(s));
    }
    Ok(None)
}

fn analyze(args: AnalyzeArgs, assets: &'static Assets) -> Outcome {
    let mut request = match read_input(&args)? {
        Some(text) if args.request => {
            AnalyzeRequest::from_json(text.as_bytes()).map_err(|e| Failure::input(e.message))?
        }
        Some(text) => AnalyzeRequest {
            raw_prompt: Some(text),
            ..Default::default()
        },
        None => AnalyzeRequest {
            description: args.description.clone().unwrap_or_default(),
            code_snippets: args.code.clone(),
            error_log: args.error_log.clone().unwrap_or_default(),
            libraries_frameworks: args.libs.clone().unwrap_or_default(),
            resources: args.resources.clone().unwrap_or_default(),
            ..Default::default()
        },
    };
    if args.threshold_context.is_some()
        || args.threshold_specificity.is_some()
        || args.threshold_clarity.is_some()
    {
        let d = Thresholds::default();
        let options = request.options.get_or_insert_with(RequestOptions::default);
        options.thresholds = Some(Thresholds {
            contextual_richness: args.threshold_context.unwrap_or(d.contextual_richness),
            specificity: args.threshold_specificity.unwrap_or(d.specificity),
            clarity: args.threshold_clarity.unwrap_or(d.clarity),
        });
    }
    let response = analyze_response(assets, nli(args.nli_url.clone()), &request).map_err(|f| match f {
        AnalyzeFailure::Request(e) => Failure::input(match e.field {
            Some(field) => format!("{} ({field})", e.message),
            None => e.message,
        }),
        AnalyzeFailure::Unavailable(m) => Failure::asset(m),
        AnalyzeFailure::Internal(e) => Failure::from(e),
    })?;
    let text = if args.pretty {
        serde_json::to_string_pretty(&response)
    } else {
        serde_json::to_string(&response)
    }
    .expect("response serializes");
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn serve(args: ServeArgs, assets: &'static Assets) -> Outcome {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    if !args.listen.is_loopback() {
        tracing::warn!(
            "listening on {}: the API has no authentication and is reachable from the network",
            args.listen
        );
    }
    if !assets.missing().is_empty() {
        tracing::warn!("degraded: missing {}", assets.missing().join(", "));
    }
    let state = AppState {
        assets,
        scorer: nli(args.nli_url),
    };
    let app = promptgauge::router(state, &args.cors_origins);
    let addr = SocketAddr::new(args.listen, args.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(())
}

struct LoadedCorpus {
    conversations: Vec<promptgauge_core::corpus::Conversation>,
    features: Vec<FeatureVector>,
}

fn load(input: &CorpusInput, assets: &Assets) -> Result<LoadedCorpus, Failure> {
    let text = fs::read_to_string(&input.file)
        .map_err(|e| Failure::input(format!("{}: {e}", input.file.display())))?;
    let report = load_corpus(&text, input.schema.into())?;
    for n in &report.notices {
        match n {
            LoadNotice::Duplicate { id } => eprintln!("note: duplicate conversation `{id}` skipped"),
            LoadNotice::Rejected(e) => eprintln!("warning: {e}"),
        }
    }
    let detector = StopwordDetector::new(assets);
    let mut conversations = report.conversations;
    for c in conversations.iter_mut() {
        detect_english(c, &detector, assets);
        if input.keep_non_english {
            c.language_ok = true;
        }
    }
    let features = conversations
        .iter()
        .map(|c| extract_features(&c.prompts(), Scope::Conversation, assets, None).map(|e| e.vector))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadedCorpus {
        conversations,
        features,
    })
}

fn print_json(value: &impl serde::Serialize) -> Outcome {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Failure::input)?;
    writeln!(out)?;
    Ok(())
}

fn corpus(cmd: CorpusCommand, assets: &Assets) -> Outcome {
    match cmd {
        CorpusCommand::Stats { input, out, .. } => {
            let c = load(&input, assets)?;
            let summary = corpus_stats(&c.conversations, &c.features)?;
            match out {
                OutFormat::Json => print_json(&summary),
                OutFormat::Csv => {
                    let mut w = io::stdout().lock();
                    writeln!(w, "group,feature,min,median,max")?;
                    for (group, ranges) in [("open", &summary.open), ("closed", &summary.closed)] {
                        for r in ranges.iter().flatten() {
                            writeln!(w, "{group},{},{},{},{}", r.feature, r.min, r.median, r.max)?;
                        }
                    }
                    Ok(())
                }
            }
        }
        CorpusCommand::Ttest { input } => {
            let c = load(&input, assets)?;
            let (mut open, mut closed) = (Vec::new(), Vec::new());
            for (conv, v) in c.conversations.iter().zip(&c.features) {
                if conv.language_ok {
                    if conv.issue_status.is_closed() { &mut closed } else { &mut open }.push(*v);
                }
            }
            print_json(&compare_groups(&open, &closed)?)
        }
        CorpusCommand::Features { input, output } => {
            let c = load(&input, assets)?;
            let rows: Vec<(FeatureVector, bool)> = c
                .conversations
                .iter()
                .zip(&c.features)
                .filter(|(conv, _)| conv.language_ok)
                .map(|(conv, v)| (*v, conv.issue_status.is_closed()))
                .collect();
            let ds = Dataset::from_vectors(&rows, &Feature::ALL);
            match output {
                Some(path) => ds.write_csv(fs::File::create(path)?)?,
                None => ds.write_csv(io::stdout().lock())?,
            }
            Ok(())
        }
    }
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(Dataset::read_csv(file)?)
}

fn train(args: TrainArgs) -> Outcome {
    let data = read_dataset(&args.features_csv)?;
    let data = match &args.features {
        Some(names) => {
            let names = names
                .iter()
                .map(|n| n.trim().parse::<Feature>())
                .collect::<Result<Vec<_>, _>>()?;
            data.select(&names)?
        }
        None => {
            let sel = prune_by_vif(&data.x, &data.features, args.vif_threshold)?;
            for w in &sel.warnings {
                eprintln!("warning: {w}");
            }
            if !sel.removed.is_empty() {
                let removed: Vec<&str> = sel.removed.iter().map(|f| f.name()).collect();
                eprintln!("VIF > {} removed: {}", args.vif_threshold, removed.join(", "));
            }
            data.select(&sel.retained)?
        }
    };
    let config = TrainConfig {
        l1_strength: args.l1,
        max_iterations: args.max_iterations,
        seed: args.seed,
    };
    let mut model = fit_pipeline(&data, &config)?;
    model.trained_on = format!(
        "{} ({} rows, seed {})",
        args.features_csv.display(),
        data.len(),
        args.seed
    );
    if !model.converged {
        eprintln!("warning: did not converge within {} iterations", args.max_iterations);
    }
    fs::write(&args.output, model.to_json() + "\n")?;
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Outcome {
    let model = ModelParams::from_json(&fs::read_to_string(&args.model)?)?;
    let data = read_dataset(&args.features_csv)?.select(&model.features)?;
    match args.cv {
        Some(k) => {
            let config = TrainConfig {
                l1_strength: model.l1_strength,
                max_iterations: model.max_iterations,
                seed: args.seed,
            };
            print_json(&cross_validate(&data, k, &config)?)
        }
        None => print_json(&serde_json::json!({ "accuracy": accuracy(&model, &data)? })),
    }
}

fn vif(args: VifArgs) -> Outcome {
    let data = read_dataset(&args.features_csv)?;
    print_json(&prune_by_vif(&data.x, &data.features, args.threshold)?)
}
