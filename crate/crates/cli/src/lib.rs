//! `gabm` command line: scaffold, validate, run, report and bench.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | invalid input: usage, scenario, reference or log file, or a file that would be overwritten |
//! | 2 | backend failure: unreachable, rejected, misconfigured or exhausted |
//! | 3 | internal error, including I/O on output files |
//! | 4 | bench comparison failed |
//!
//! Errors are printed to stderr as one JSON object; logs also go to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gabm_core::analytics::{
    compare, metrics_csv, run_many, split_reference, summarize_runs, ComparisonReport, ReferenceDataset, Tolerances,
};
use gabm_core::engine::EpisodeError;
use gabm_core::fixtures::{template, TEMPLATES};
use gabm_core::llm::{connect, BackendKind, ExhaustionMode};
use gabm_core::reporting::{render_html, summarize_episode, EpisodeSummary, ReportError};
use gabm_core::scenario::{load_scenario, validate_scenario};
use gabm_core::{run_episode, EpisodeLog, LlmError, ScenarioConfig, ScenarioError};
use serde_json::json;
use tracing::info;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BACKEND: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_COMPARISON: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gabm", version, about = "Generative agent-based modeling experiments")]
pub struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a scenario template into a directory.
    Init {
        /// Template name: connectnet or blank.
        template: String,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        /// Overwrite existing files.
        #[arg(long)]
        force: bool,
    },
    /// Check a scenario file and list every problem found.
    Validate { scenario: PathBuf },
    /// Run one episode and write its log, metrics and HTML report.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write news and per-agent summaries (extra backend calls).
        #[arg(long)]
        summarize: bool,
    },
    /// Render the HTML report for an existing episode log.
    Report {
        /// An `.episode.json` file written by `run`.
        log: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Generate summaries using the backend of this scenario file.
        #[arg(long)]
        summarize_with: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Run many episodes and compare their statistics with a reference.
    Bench {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Reference file of `metric,value` records.
        #[arg(long)]
        reference: PathBuf,
        /// Largest accepted absolute difference of means.
        #[arg(long, default_value_t = 0.5)]
        tolerance: f64,
        /// Per-metric tolerance as `name=value`; may be repeated.
        #[arg(long = "metric-tolerance", value_parser = parse_metric_tolerance)]
        metric_tolerance: Vec<(String, f64)>,
        /// Seed of run 0; run i uses base + i. Defaults to the scenario seed.
        #[arg(long)]
        base_seed: Option<u64>,
        /// Split the reference into calibration and validation subsets and
        /// gate on the validation subset.
        #[arg(long, requires = "split_seed")]
        split_fraction: Option<f64>,
        #[arg(long)]
        split_seed: Option<u64>,
        /// Run episodes one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Scripted,
    Http,
}

/// Overrides applied to the scenario's `[backend]` table.
#[derive(Debug, Args, Default)]
pub struct BackendArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Script file for the scripted backend (implies `--backend scripted`).
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Answer with placeholders once the script runs out instead of failing.
    #[arg(long)]
    pub echo: bool,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
}

fn parse_metric_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value: f64 = value.parse().map_err(|e| format!("bad tolerance {value:?}: {e}"))?;
    if value.is_nan() || value < 0.0 {
        return Err("tolerance must be non-negative".into());
    }
    Ok((name.to_string(), value))
}

/// A failure that ends the command.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub details: serde_json::Value,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
            details: serde_json::Value::Null,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_INTERNAL, "io", format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut error = json!({"code": self.code, "kind": self.kind, "message": self.message});
        if !self.details.is_null() {
            error["details"] = self.details.clone();
        }
        json!({ "error": error }).to_string()
    }
}

impl From<LlmError> for Failure {
    fn from(e: LlmError) -> Self {
        Self::new(EXIT_BACKEND, "backend", e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let mut f = Self::new(EXIT_INVALID, "scenario", e.to_string());
        match &e {
            ScenarioError::Invalid(report) => {
                f.details = json!(report
                    .violations
                    .iter()
                    .map(|v| json!({"path": v.path, "message": v.message}))
                    .collect::<Vec<_>>());
            }
            ScenarioError::Syntax { line, column, .. } => f.details = json!({"line": line, "column": column}),
            ScenarioError::Io { .. } => {}
            ScenarioError::Serialize(_) => f.code = EXIT_INTERNAL,
        }
        f
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::NoEvents => Self::new(EXIT_INVALID, "log", e.to_string()),
            ReportError::Backend(e) => e.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parse `args` (program name first). On `Err` the process should exit with
/// the given code; help and version text has already been written.
pub fn parse_args<I, T>(args: I, stdout: &mut dyn Write) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = write!(stdout, "{e}");
            EXIT_OK
        } else {
            let _ = e.print();
            EXIT_INVALID
        }
    })
}

/// Run a parsed command and return its exit code; `stdout` receives the
/// final summary line, errors go to stderr as JSON.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> i32 {
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.code
        }
    }
}

/// [`parse_args`] then [`run`].
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(args, stdout) {
        Ok(cli) => run(cli, stdout),
        Err(code) => code,
    }
}

/// `tracing` filter for a `-v` count; `GABM_LOG` takes precedence.
pub fn log_filter(verbose: u8) -> &'static str {
    match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Outcome {
    match command {
        Command::Init { template, dir, force } => cmd_init(&template, &dir, force, stdout),
        Command::Validate { scenario } => cmd_validate(&scenario, stdout),
        Command::Run {
            scenario,
            out,
            backend,
            seed,
            summarize,
        } => cmd_run(&scenario, &out.output_dir, &backend, seed, summarize, stdout),
        Command::Report {
            log,
            out,
            summarize_with,
            backend,
        } => cmd_report(&log, &out.output_dir, summarize_with.as_deref(), &backend, stdout),
        Command::Bench {
            scenario,
            runs,
            reference,
            tolerance,
            metric_tolerance,
            base_seed,
            split_fraction,
            split_seed,
            sequential,
            out,
            backend,
        } => {
            let mut tolerances = Tolerances::uniform(tolerance);
            tolerances.per_metric.extend(metric_tolerance);
            let bench = Bench {
                runs,
                reference: &reference,
                tolerances,
                base_seed,
                split: split_fraction.zip(split_seed),
                parallel: !sequential,
            };
            cmd_bench(&scenario, &bench, &out.output_dir, &backend, stdout)
        }
    }
}

pub fn cmd_init(name: &str, dir: &Path, force: bool, stdout: &mut dyn Write) -> Outcome {
    let Some(t) = template(name) else {
        let known: Vec<&str> = TEMPLATES.iter().map(|t| t.name).collect();
        return Err(Failure::new(
            EXIT_INVALID,
            "usage",
            format!("unknown template {name:?}; available: {}", known.join(", ")),
        ));
    };
    let targets: Vec<(PathBuf, &str)> = t.files.iter().map(|(f, c)| (dir.join(f), *c)).collect();
    if !force {
        let existing: Vec<String> = targets
            .iter()
            .filter(|(p, _)| p.exists())
            .map(|(p, _)| p.display().to_string())
            .collect();
        if !existing.is_empty() {
            let mut f = Failure::new(
                EXIT_INVALID,
                "exists",
                "refusing to overwrite existing files; pass --force",
            );
            f.details = json!(existing);
            return Err(f);
        }
    }
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    for (path, contents) in &targets {
        fs::write(path, contents).map_err(|e| Failure::io(path, e))?;
    }
    let _ = writeln!(stdout, "wrote {}", targets[0].0.display());
    Ok(EXIT_OK)
}

pub fn cmd_validate(path: &Path, stdout: &mut dyn Write) -> Outcome {
    let config = load_scenario(path)?;
    let _ = writeln!(
        stdout,
        "{}: valid ({} agents, {} rounds, {} metrics)",
        config.name,
        config.agents.len(),
        config.run.rounds,
        config.metrics.len()
    );
    Ok(EXIT_OK)
}

fn base_dir(scenario: &Path) -> PathBuf {
    scenario.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn apply_overrides(config: &mut ScenarioConfig, args: &BackendArgs) -> Result<(), Failure> {
    let b = &mut config.backend;
    let kind = match (args.backend, &args.script) {
        (Some(BackendChoice::Http), Some(_)) => {
            return Err(Failure::new(
                EXIT_INVALID,
                "usage",
                "--script only applies to the scripted backend",
            ))
        }
        (Some(BackendChoice::Http), None) => Some(BackendKind::Http),
        (Some(BackendChoice::Scripted), _) | (None, Some(_)) => Some(BackendKind::Scripted),
        (None, None) => None,
    };
    if let Some(kind) = kind {
        b.kind = kind;
    }
    if let Some(script) = &args.script {
        // Absolute so it does not resolve against the scenario directory.
        let abs = std::env::current_dir()
            .map(|d| d.join(script))
            .unwrap_or_else(|_| script.clone());
        b.script_path = Some(abs.display().to_string());
    }
    if args.echo {
        b.exhaustion_mode = ExhaustionMode::Echo;
    }
    if let Some(m) = &args.model {
        b.model_name = m.clone();
    }
    if let Some(u) = &args.base_url {
        b.base_url = u.clone();
    }
    if let Some(v) = &args.api_key_env {
        b.api_key_env_var = v.clone();
    }
    let report = validate_scenario(config);
    if report.is_valid() {
        Ok(())
    } else {
        Err(ScenarioError::Invalid(report).into())
    }
}

fn load_with_overrides(path: &Path, args: &BackendArgs) -> Result<ScenarioConfig, Failure> {
    let mut config = load_scenario(path)?;
    apply_overrides(&mut config, args)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

pub fn cmd_run(
    path: &Path,
    out_dir: &Path,
    args: &BackendArgs,
    seed: Option<u64>,
    summarize: bool,
    stdout: &mut dyn Write,
) -> Outcome {
    let mut config = load_with_overrides(path, args)?;
    if let Some(seed) = seed {
        config.run.seed = seed;
    }
    let backend = connect(&config.backend, &base_dir(path))?;
    ensure_dir(out_dir)?;
    let name = config.name.clone();
    info!(scenario = %name, agents = config.agents.len(), rounds = config.run.rounds, "running episode");

    let log = match run_episode(&config, backend.as_ref()) {
        Ok(log) => log,
        Err(EpisodeError { source, partial }) => {
            let partial_path = out_dir.join(format!("{name}.episode.json.partial"));
            write_file(&partial_path, &partial.to_json())?;
            let code = match source {
                gabm_core::engine::EngineError::Backend(_) => EXIT_BACKEND,
                _ => EXIT_INTERNAL,
            };
            let mut f = Failure::new(
                code,
                if code == EXIT_BACKEND { "backend" } else { "internal" },
                source.to_string(),
            );
            f.details = json!({"partial_log": partial_path.display().to_string(), "events": partial.events.len()});
            return Err(f);
        }
    };

    let summary = if summarize {
        let s = summarize_episode(&log, backend.as_ref(), &config.backend)?;
        write_file(&out_dir.join(format!("{name}.summary.json")), &summary_json(&s))?;
        Some(s)
    } else {
        None
    };
    let html_path = write_artifacts(&log, summary.as_ref(), out_dir)?;
    let _ = writeln!(
        stdout,
        "{name}: {} events over {} rounds, {} completions -> {}",
        log.events.len(),
        log.rounds,
        log.completion_transcript.len(),
        html_path.display()
    );
    Ok(EXIT_OK)
}

fn summary_json(s: &EpisodeSummary) -> String {
    let mut text = serde_json::to_string_pretty(s).expect("summaries serialize");
    text.push('\n');
    text
}

/// Writes `<name>.episode.json`, `<name>.metrics.csv` and `<name>.html`.
fn write_artifacts(log: &EpisodeLog, summary: Option<&EpisodeSummary>, out_dir: &Path) -> Result<PathBuf, Failure> {
    let name = &log.scenario_name;
    write_file(&out_dir.join(format!("{name}.episode.json")), &log.to_json())?;
    write_file(
        &out_dir.join(format!("{name}.metrics.csv")),
        &metrics_csv([(0, log.metrics.as_slice())]),
    )?;
    let html = out_dir.join(format!("{name}.html"));
    write_file(&html, &render_html(log, summary))?;
    Ok(html)
}

pub fn cmd_report(
    log_path: &Path,
    out_dir: &Path,
    summarize_with: Option<&Path>,
    args: &BackendArgs,
    stdout: &mut dyn Write,
) -> Outcome {
    let text = fs::read_to_string(log_path)
        .map_err(|e| Failure::new(EXIT_INVALID, "log", format!("{}: {e}", log_path.display())))?;
    let log = EpisodeLog::from_json(&text)
        .map_err(|e| Failure::new(EXIT_INVALID, "log", format!("{}: {e}", log_path.display())))?;
    ensure_dir(out_dir)?;
    let summary = match summarize_with {
        Some(scenario) => {
            let config = load_with_overrides(scenario, args)?;
            let backend = connect(&config.backend, &base_dir(scenario))?;
            let s = summarize_episode(&log, backend.as_ref(), &config.backend)?;
            write_file(
                &out_dir.join(format!("{}.summary.json", log.scenario_name)),
                &summary_json(&s),
            )?;
            Some(s)
        }
        None => None,
    };
    let html = out_dir.join(format!("{}.html", log.scenario_name));
    write_file(&html, &render_html(&log, summary.as_ref()))?;
    let _ = writeln!(stdout, "{}: report -> {}", log.scenario_name, html.display());
    Ok(EXIT_OK)
}

pub struct Bench<'a> {
    pub runs: usize,
    pub reference: &'a Path,
    pub tolerances: Tolerances,
    pub base_seed: Option<u64>,
    /// Fraction and seed for a calibration/validation split.
    pub split: Option<(f64, u64)>,
    pub parallel: bool,
}

pub fn cmd_bench(path: &Path, bench: &Bench, out_dir: &Path, args: &BackendArgs, stdout: &mut dyn Write) -> Outcome {
    if bench.runs == 0 {
        return Err(Failure::new(EXIT_INVALID, "usage", "--runs must be at least 1"));
    }
    let config = load_with_overrides(path, args)?;
    let ref_text = fs::read_to_string(bench.reference)
        .map_err(|e| Failure::new(EXIT_INVALID, "reference", format!("{}: {e}", bench.reference.display())))?;
    let reference = ReferenceDataset::parse(&ref_text)
        .map_err(|e| Failure::new(EXIT_INVALID, "reference", format!("{}: {e}", bench.reference.display())))?;
    let (calibration, gate) = match bench.split {
        Some((fraction, seed)) => {
            let (cal, val) = split_reference(&reference, fraction, seed)
                .map_err(|e| Failure::new(EXIT_INVALID, "reference", e.to_string()))?;
            (Some(cal), val)
        }
        None => (None, reference),
    };
    // Fail fast on a bad backend before fanning out.
    let dir = base_dir(path);
    connect(&config.backend, &dir)?;
    ensure_dir(out_dir)?;

    let base_seed = bench.base_seed.unwrap_or(config.run.seed);
    info!(runs = bench.runs, base_seed, parallel = bench.parallel, "bench");
    let outcomes = run_many(
        &config,
        |_, _| connect(&config.backend, &dir),
        bench.runs,
        base_seed,
        bench.parallel,
    );
    let summary = match summarize_runs(&outcomes) {
        Ok(s) => s,
        Err(_) => {
            let mut f = Failure::new(EXIT_BACKEND, "backend", "every run failed");
            f.details = json!(outcomes
                .iter()
                .filter_map(|o| o
                    .result
                    .as_ref()
                    .err()
                    .map(|e| json!({"run": o.index, "seed": o.seed, "error": e})))
                .collect::<Vec<_>>());
            return Err(f);
        }
    };
    let report = compare(&summary.statistics, &gate.statistics(), &bench.tolerances);
    let calibration_report = calibration.map(|c| compare(&summary.statistics, &c.statistics(), &bench.tolerances));

    let name = &config.name;
    let logs = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|l| (o.index, l.metrics.as_slice())));
    write_file(&out_dir.join(format!("{name}.bench.metrics.csv")), &metrics_csv(logs))?;
    let mut doc = json!({"summary": summary, "comparison": report});
    if let Some(c) = &calibration_report {
        doc["calibration_comparison"] = json!(c);
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("bench report serializes");
    text.push('\n');
    write_file(&out_dir.join(format!("{name}.bench.json")), &text)?;

    for f in &summary.failures {
        eprintln!("run {} (seed {}) failed: {}", f.index, f.seed, f.error);
    }
    if let Some(c) = &calibration_report {
        eprintln!("calibration subset:\n{}", c.render());
    }
    let _ = write!(stdout, "{}", render_bench(&report, summary.succeeded, bench.runs));
    Ok(if report.pass { EXIT_OK } else { EXIT_COMPARISON })
}

fn render_bench(report: &ComparisonReport, succeeded: usize, runs: usize) -> String {
    let mut out = format!("runs: {succeeded}/{runs} succeeded\n");
    out.push_str(&report.render());
    let failing: Vec<&str> = report.failing().map(|m| m.metric.as_str()).collect();
    if !failing.is_empty() {
        out.push_str(&format!("failing metrics: {}\n", failing.join(", ")));
    }
    out
}
