//! The `har` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure. Settings come
//! from built-in defaults, then the `--config` file, then flags.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use har_core::features::{feature_names, SmaMode};
use har_core::{Algorithm, NormalizeStage, PipelineConfig, Preprocessor, SensorSample, FEATURE_DIM};
use thiserror::Error;

use crate::bench::{batch_compare, run_bench, run_stream, MonotonicClock, RunOutput};
use crate::client::{replay, ReplayOptions};
use crate::config::{HarConfig, ProfileSet, ScenarioKind};
use crate::service::{serve, ServiceOptions};
use crate::{csvio, report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn rt<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "har", version, about = "Online human activity recognition over inertial sensor streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled sample stream as CSV.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Window a CSV stream and write one feature row per window (`f000..f097,label`).
    /// With `--out`, the column layout goes to a sidecar `<name>.layout.json`.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Input sample CSV.
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Run one learner test-then-train and write its prediction log (JSON lines).
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, value_parser = parse_algorithm, default_value = "inb")]
        algo: Algorithm,
    },
    /// Prequential comparison of several learners on one stream.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated learners (iknn,idt,irf,iadaboost,inb,nse). Default: all six.
        #[arg(long, value_parser = parse_algorithm, value_delimiter = ',')]
        algos: Vec<Algorithm>,
        /// Repeat with this many consecutive seeds and average the results.
        #[arg(long, default_value_t = 1)]
        subjects: u64,
    },
    /// Batch holdout accuracy next to prequential accuracy on the same data.
    BatchCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated learners. Default: all six.
        #[arg(long, value_parser = parse_algorithm, value_delimiter = ',')]
        algos: Vec<Algorithm>,
        /// Passes over the shuffled training split.
        #[arg(long)]
        epochs: Option<usize>,
        /// Share of each class held out for testing.
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Run the stream service (WebSocket `/stream`, `GET /health`).
    Serve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Bind address (default 127.0.0.1).
        #[arg(long)]
        addr: Option<String>,
        /// HTTP and WebSocket port (default 8080, 0 picks a free one).
        #[arg(long)]
        port: Option<u16>,
        /// Also accept newline-delimited JSON on this TCP port.
        #[arg(long)]
        tcp_port: Option<u16>,
        /// Per-session inbox capacity in messages.
        #[arg(long)]
        inbox: Option<usize>,
        /// Default learner for sessions whose hello names none.
        #[arg(long, value_parser = parse_algorithm)]
        algo: Option<Algorithm>,
    },
    /// Stream a recorded CSV to a running service and log its predictions.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Sample CSV to send.
        #[arg(long = "in")]
        input: PathBuf,
        /// `ws://host:port/stream` or `tcp://host:port`.
        #[arg(long, default_value = "ws://127.0.0.1:8080/stream")]
        url: String,
        /// Playback speed; 1 is real time, 0 sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Learner requested in the hello message.
        #[arg(long, value_parser = parse_algorithm)]
        algo: Option<Algorithm>,
        /// Session id sent in the hello message.
        #[arg(long)]
        session: Option<String>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Seed for generation and learners.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file or directory (stdout when omitted, where applicable).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioKind>,
    /// Number of activities in the three-round scenario.
    #[arg(long)]
    pub activities: Option<usize>,
    #[arg(long, value_enum)]
    pub profiles: Option<ProfileSet>,
    /// Move segment boundaries by up to this many seconds.
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Read samples from this CSV instead of generating them.
    #[arg(long = "in", conflicts_with_all = ["scenario", "activities", "profiles", "jitter"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Samples per window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Where to apply the online z-score: signal, features or off.
    #[arg(long, value_parser = parse_stage)]
    pub normalize: Option<NormalizeStage>,
    /// Use the signed signal magnitude area instead of absolute values.
    #[arg(long)]
    pub sma_literal: bool,
    /// Neighbours for IKNN.
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// IKNN memory size.
    #[arg(long, conflicts_with = "knn_unbounded")]
    pub knn_memory: Option<usize>,
    /// Keep every IKNN example.
    #[arg(long)]
    pub knn_unbounded: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|_| format!("unknown algorithm {s:?}; expected one of iknn, idt, irf, iadaboost, inb, nse"))
}

fn parse_stage(s: &str) -> Result<NormalizeStage, String> {
    match s.to_ascii_lowercase().as_str() {
        "signal" => Ok(NormalizeStage::Signal),
        "features" => Ok(NormalizeStage::Features),
        "off" | "none" => Ok(NormalizeStage::Off),
        _ => Err(format!("unknown normalization {s:?}; expected signal, features or off")),
    }
}

fn load_config(common: &Common) -> Result<HarConfig, CliError> {
    match &common.config {
        Some(p) => HarConfig::load(p).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(HarConfig::default()),
    }
}

fn seed(common: &Common, cfg: &HarConfig) -> u64 {
    common.seed.or(cfg.seed).unwrap_or(0)
}

fn pipeline_config(cfg: &HarConfig, args: &PipelineArgs, seed: u64) -> Result<PipelineConfig, CliError> {
    let mut p = cfg.pipeline.clone();
    p.seed = seed;
    if let Some(w) = args.window {
        p.window.size = w;
    }
    if p.window.size < 2 {
        return Err(CliError::Usage("window must hold at least 2 samples".into()));
    }
    if let Some(n) = args.normalize {
        p.normalize = n;
    }
    if args.sma_literal {
        p.features.sma = SmaMode::Literal;
    }
    if let Some(k) = args.knn_k {
        p.learner.knn_k = k;
    }
    if let Some(m) = args.knn_memory {
        p.learner.knn_capacity = Some(m);
    }
    if args.knn_unbounded {
        p.learner.knn_capacity = None;
    }
    Ok(p)
}

fn algorithms(flag: &[Algorithm], cfg: &HarConfig) -> Vec<Algorithm> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        cfg.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec())
    }
}

fn generate(cfg: &HarConfig, args: &ScenarioArgs, seed: u64) -> Result<Vec<SensorSample>, CliError> {
    let mut sc = cfg.scenario.clone();
    if let Some(k) = args.scenario {
        sc.kind = k;
    }
    if let Some(n) = args.activities {
        sc.activities = n;
    }
    if let Some(p) = args.profiles {
        sc.profiles = p;
    }
    if let Some(j) = args.jitter {
        sc.jitter_s = j;
    }
    if sc.activities > 5 && args.profiles.is_none() && sc.profiles == ProfileSet::Separated {
        sc.profiles = ProfileSet::Catalog;
    }
    let script = sc.script(seed).map_err(|e| CliError::Usage(e.to_string()))?;
    har_core::synth::generate(&sc.profiles(), &script).map_err(|e| CliError::Usage(e.to_string()))
}

fn samples(cfg: &HarConfig, src: &SourceArgs, seed: u64) -> Result<Vec<SensorSample>, CliError> {
    match &src.input {
        Some(p) => csvio::replay(p).map_err(rt(&p.display().to_string())),
        None => generate(cfg, &src.scenario, seed),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(rt(&p.display().to_string())),
        None => io::stdout().write_all(text.as_bytes()).map_err(rt("stdout")),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(rt(&path.display().to_string()))?;
    Ok(path)
}

fn cmd_gen(common: &Common, scenario: &ScenarioArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let s = generate(&cfg, scenario, seed(common, &cfg))?;
    let n = s.len();
    match &common.out {
        Some(p) => csvio::record(p, s).map_err(rt(&p.display().to_string()))?,
        None => csvio::write_samples(io::stdout().lock(), s).map_err(rt("stdout"))?,
    }
    tracing::info!(samples = n, "generated");
    Ok(())
}

fn cmd_extract(common: &Common, input: &Path, args: &PipelineArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let p = pipeline_config(&cfg, args, seed(common, &cfg))?;
    let mut pre = Preprocessor::new(p.window, p.features, p.normalize);
    let mut w = csv::Writer::from_writer(Vec::new());
    let columns: Vec<String> = (0..FEATURE_DIM).map(|i| format!("f{i:03}")).collect();
    w.write_record(columns.iter().map(String::as_str).chain(["label"]))
        .map_err(rt("csv"))?;
    for s in csvio::replay(input).map_err(rt(&input.display().to_string()))? {
        let t = s.t_ms;
        let pushed = pre.push(s).map_err(rt(&format!("sample at t_ms={t}")))?;
        if let Some(fv) = pushed.vector {
            let mut row: Vec<String> = fv.values.iter().map(f64::to_string).collect();
            row.push(fv.label.unwrap_or_default());
            w.write_record(&row).map_err(rt("csv"))?;
        }
    }
    let out = String::from_utf8(w.into_inner().map_err(rt("csv"))?).map_err(rt("csv"))?;
    write_out(common.out.as_deref(), &out)?;
    if let Some(path) = &common.out {
        let manifest = layout_path(path);
        fs::write(&manifest, layout_manifest(&columns, &p)).map_err(rt(&manifest.display().to_string()))?;
    }
    Ok(())
}

/// `features.csv` gets `features.layout.json` next to it.
pub fn layout_path(out: &Path) -> PathBuf {
    out.with_extension("layout.json")
}

fn layout_manifest(columns: &[String], p: &PipelineConfig) -> String {
    let features: Vec<serde_json::Value> = columns
        .iter()
        .zip(feature_names())
        .map(|(c, f)| serde_json::json!({ "column": c, "feature": f }))
        .collect();
    let manifest = serde_json::json!({
        "window": p.window,
        "features": p.features,
        "normalize": p.normalize,
        "columns": features,
        "label": "label",
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

fn cmd_run(common: &Common, source: &SourceArgs, args: &PipelineArgs, algo: Algorithm) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let seed = seed(common, &cfg);
    let mut p = pipeline_config(&cfg, args, seed)?;
    p.algorithm = algo;
    let s = samples(&cfg, source, seed)?;
    let run = run_stream(&s, &p, &MonotonicClock::new()).map_err(rt("run"))?;
    write_out(common.out.as_deref(), &report::predictions_jsonl(&run.records))?;
    eprint!("{}", report::comparison_table(std::slice::from_ref(&run)));
    Ok(())
}

fn cmd_bench(common: &Common, source: &SourceArgs, args: &PipelineArgs, algos: &[Algorithm], subjects: u64) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let base_seed = seed(common, &cfg);
    let algos = algorithms(algos, &cfg);
    if subjects == 0 {
        return Err(CliError::Usage("--subjects must be at least 1".into()));
    }
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("bench-out"));
    fs::create_dir_all(&dir).map_err(rt(&dir.display().to_string()))?;
    let mut all: Vec<RunOutput> = Vec::new();
    for subject in 0..subjects {
        let seed = base_seed + subject;
        let p = pipeline_config(&cfg, args, seed)?;
        let s = samples(&cfg, source, seed)?;
        let runs = run_bench(&s, &p, &algos).map_err(rt("bench"))?;
        for r in &runs {
            let stem = format!("{}_seed{}", r.algorithm.as_str(), seed);
            write_file(&dir, &format!("report_{stem}.txt"), &report::human_report(r))?;
            write_file(&dir, &format!("report_{stem}.json"), &(report::json_report(r) + "\n"))?;
            write_file(&dir, &format!("predictions_{stem}.jsonl"), &report::predictions_jsonl(&r.records))?;
            write_file(&dir, &format!("curve_{stem}.csv"), &report::curve_csv(r))?;
        }
        let table = report::comparison_table(&runs);
        write_file(&dir, &format!("comparison_seed{seed}.txt"), &table)?;
        write_file(&dir, &format!("comparison_seed{seed}.csv"), &report::comparison_csv(&runs))?;
        println!("seed {seed}\n{table}");
        all.extend(runs);
    }
    write_file(&dir, "averages.csv", &report::averages_csv(&all))?;
    let avg = report::averages_table(&all);
    write_file(&dir, "averages.txt", &avg)?;
    if subjects > 1 {
        println!("average over {subjects} seeds\n{avg}");
    }
    println!("reports written to {}", dir.display());
    Ok(())
}

fn cmd_batch(
    common: &Common,
    source: &SourceArgs,
    args: &PipelineArgs,
    algos: &[Algorithm],
    epochs: Option<usize>,
    test_fraction: Option<f64>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let seed = seed(common, &cfg);
    let p = pipeline_config(&cfg, args, seed)?;
    let epochs = epochs.unwrap_or(cfg.batch.epochs);
    let test_fraction = test_fraction.unwrap_or(cfg.batch.test_fraction);
    if epochs == 0 {
        return Err(CliError::Usage("--epochs must be at least 1".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::Usage("--test-fraction must lie strictly between 0 and 1".into()));
    }
    tracing::info!(epochs, test_fraction, seed, "batch compare");
    let s = samples(&cfg, source, seed)?;
    let rows = batch_compare(&s, &p, &algorithms(algos, &cfg), epochs, test_fraction).map_err(rt("batch-compare"))?;
    println!("epochs {epochs}, test fraction {test_fraction}, seed {seed}");
    print!("{}", report::batch_table(&rows));
    if let Some(out) = &common.out {
        write_out(Some(out), &report::batch_csv(&rows))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_serve(
    common: &Common,
    args: &PipelineArgs,
    addr: Option<String>,
    port: Option<u16>,
    tcp_port: Option<u16>,
    inbox: Option<usize>,
    algo: Option<Algorithm>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let mut defaults = pipeline_config(&cfg, args, seed(common, &cfg))?;
    if let Some(a) = algo {
        defaults.algorithm = a;
    }
    let opts = ServiceOptions {
        addr: addr.unwrap_or(cfg.serve.addr.clone()),
        port: port.unwrap_or(cfg.serve.port),
        tcp_port: tcp_port.or(cfg.serve.tcp_port),
        inbox: inbox.unwrap_or(cfg.serve.inbox),
        defaults,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(rt("runtime"))?;
    runtime
        .block_on(serve(opts, async {
            let _ = tokio::signal::ctrl_c().await;
        }))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn cmd_replay(
    common: &Common,
    input: &Path,
    url: String,
    speed: f64,
    algo: Option<Algorithm>,
    session: Option<String>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(CliError::Usage("--speed must be a non-negative number".into()));
    }
    let s = csvio::replay(input).map_err(rt(&input.display().to_string()))?;
    let opts = ReplayOptions {
        url,
        speed,
        session,
        algorithm: algo.or(cfg.algorithms.as_ref().and_then(|a| a.first().copied())),
        seed: common.seed.or(cfg.seed),
        window: None,
        ..ReplayOptions::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(rt("runtime"))?;
    let outcome = runtime.block_on(replay(&s, &opts)).map_err(rt("replay"))?;
    write_out(common.out.as_deref(), &report::predictions_jsonl(&outcome.records))?;
    for m in outcome.warnings.iter().chain(&outcome.errors) {
        eprintln!("{}", m.to_json());
    }
    if let Some(m) = &outcome.final_metrics {
        eprintln!(
            "session {}: {} windows, accuracy {:.2}%, macro F1 {:.2}%",
            outcome.session,
            m.windows,
            100.0 * m.accuracy,
            100.0 * m.macro_f1
        );
    }
    if outcome.errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("server reported {} error(s)", outcome.errors.len())))
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { common, scenario } => cmd_gen(&common, &scenario),
        Command::Extract { common, input, pipeline } => cmd_extract(&common, &input, &pipeline),
        Command::Run {
            common,
            source,
            pipeline,
            algo,
        } => cmd_run(&common, &source, &pipeline, algo),
        Command::Bench {
            common,
            source,
            pipeline,
            algos,
            subjects,
        } => cmd_bench(&common, &source, &pipeline, &algos, subjects),
        Command::BatchCompare {
            common,
            source,
            pipeline,
            algos,
            epochs,
            test_fraction,
        } => cmd_batch(&common, &source, &pipeline, &algos, epochs, test_fraction),
        Command::Serve {
            common,
            pipeline,
            addr,
            port,
            tcp_port,
            inbox,
            algo,
        } => cmd_serve(&common, &pipeline, addr, port, tcp_port, inbox, algo),
        Command::Replay {
            common,
            input,
            url,
            speed,
            algo,
            session,
        } => cmd_replay(&common, &input, url, speed, algo, session),
    }
}

fn init_logging(command: &Command) {
    let default = match command {
        Command::Serve { .. } | Command::Replay { .. } => "info",
        _ => "warn",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    init_logging(&cli.command);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_algorithm_lists() {
        let cli = Cli::try_parse_from(["har", "bench", "--algos", "iknn,inb", "--seed", "7"]).unwrap();
        match cli.command {
            Command::Bench { algos, common, .. } => {
                assert_eq!(algos, vec![Algorithm::Iknn, Algorithm::Inb]);
                assert_eq!(common.seed, Some(7));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scenario_alias_is_accepted() {
        let cli = Cli::try_parse_from(["har", "gen", "--scenario", "paper"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Gen {
                scenario: ScenarioArgs {
                    scenario: Some(ScenarioKind::ThreeRound),
                    ..
                },
                ..
            }
        ));
    }

    #[test]
    fn flags_override_config() {
        let cfg = HarConfig::parse("seed = 3\n[pipeline]\nnormalize = \"off\"\nwindow = { size = 20 }").unwrap();
        let common = Common {
            seed: Some(9),
            ..Common::default()
        };
        assert_eq!(seed(&common, &cfg), 9);
        assert_eq!(seed(&Common::default(), &cfg), 3);
        let args = PipelineArgs {
            normalize: Some(NormalizeStage::Features),
            ..PipelineArgs::default()
        };
        let p = pipeline_config(&cfg, &args, 1).unwrap();
        assert_eq!(p.normalize, NormalizeStage::Features);
        assert_eq!(p.window.size, 20);
        assert_eq!(p.window.rate_hz, 20.0);
    }

    #[test]
    fn usage_errors_exit_1_and_help_exits_0() {
        assert_eq!(main_with_args(["har", "bench", "--algos", "svm"]), 1);
        assert_eq!(main_with_args(["har", "frobnicate"]), 1);
        assert_eq!(main_with_args(["har", "gen", "--help"]), 0);
        assert_eq!(main_with_args(["har", "bench", "--subjects", "0", "--out", "/nonexistent/x"]), 1);
    }
}
