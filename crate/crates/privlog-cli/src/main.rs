//! Command-line interface: `anonymize` runs the three-step pipeline,
//! `inspect` prints log statistics, `report` compares utility measures of
//! an original/anonymized pair.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use privlog::enrichment::MatchingMode;
use privlog::log::AttributeSchema;
use privlog::mechanisms::NoiseParams;
use privlog::metrics::compare;
use privlog::pipeline::{run_pipeline, PipelineConfig};
use privlog::variant_query::QueryParams;
use privlog::xes::{parse_xes, parse_xes_with_schema, write_xes_file};

const DEFAULT_MAX_DEPTH: usize = 30;
const DEFAULT_SHIFT_SCALE_MS: f64 = 3_600_000.0; // 1 hour
const DEFAULT_INTERVAL_SCALE_MS: f64 = 900_000.0; // 15 minutes
const DEFAULT_BUCKET_MS: i64 = 86_400_000; // 1 day

#[derive(Parser)]
#[command(
    name = "privlog",
    version,
    about = "Anonymize business-process event logs under differential privacy \
             while preserving timestamps and event attributes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize an XES event log and write the result plus a run report
    Anonymize(AnonymizeArgs),
    /// Print trace, event, and variant counts of an XES log
    Inspect {
        /// Input XES file
        log: PathBuf,
    },
    /// Compare utility measures of an original and an anonymized log
    Report(ReportArgs),
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Input XES file
    input: PathBuf,
    /// Privacy parameter of the trace-variant query; also the default
    /// per-attribute epsilon (required here or in --config)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Maximum prefix-tree depth / longest released sequence
    #[arg(short = 'n', long = "max-depth")]
    max_depth: Option<usize>,
    /// Pruning threshold of the trace-variant query (required here or in
    /// --config)
    #[arg(short = 'k', long = "prune")]
    prune: Option<u64>,
    /// Master seed; omitted: drawn from the clock and echoed in the report
    #[arg(long)]
    seed: Option<u64>,
    /// JSON sidecar declaring per-attribute kind, domain, epsilon, utility
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Match sequences greedily instead of solving the assignment problem
    #[arg(long)]
    greedy_matching: bool,
    /// Laplace scale (ms) of the per-trace timestamp shift
    #[arg(long)]
    shift_scale: Option<f64>,
    /// Laplace scale (ms) of the per-interval timestamp noise
    #[arg(long)]
    interval_scale: Option<f64>,
    /// Default epsilon for attributes without a schema entry (falls back
    /// to --epsilon)
    #[arg(long)]
    attribute_epsilon: Option<f64>,
    /// Per-attribute epsilon override, repeatable (NAME=EPS)
    #[arg(long = "attr-epsilon", value_name = "NAME=EPS")]
    attr_epsilon: Vec<String>,
    /// Per-attribute Laplace sensitivity override, repeatable (NAME=VALUE)
    #[arg(long = "sensitivity", value_name = "NAME=VALUE")]
    sensitivity: Vec<String>,
    /// Output XES path (required here or in --config); the run report goes
    /// next to it with extension .report.json
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Original XES file
    original: PathBuf,
    /// Anonymized XES file
    anonymized: PathBuf,
    /// Boolean attributes to compare (default: all boolean attributes)
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
    /// Bucket width (ms) of the active-cases series
    #[arg(long, default_value_t = DEFAULT_BUCKET_MS)]
    bucket_ms: i64,
    /// Directory receiving utility_report.json and active_cases.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// TOML mirror of the anonymize flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    epsilon: Option<f64>,
    max_depth: Option<usize>,
    prune: Option<u64>,
    seed: Option<u64>,
    schema: Option<PathBuf>,
    greedy_matching: Option<bool>,
    shift_scale: Option<f64>,
    interval_scale: Option<f64>,
    attribute_epsilon: Option<f64>,
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<privlog::Error> for CliError {
    fn from(e: privlog::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful runs
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Anonymize(args) => anonymize(args),
        Command::Inspect { log } => inspect(&log),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn inspect(path: &Path) -> Result<(), CliError> {
    let log = read_log(path, None)?;
    println!(
        "{} traces, {} events, {} variants",
        log.num_traces(),
        log.num_events(),
        log.num_variants()
    );
    Ok(())
}

fn read_log(path: &Path, schema: Option<AttributeSchema>) -> Result<privlog::EventLog, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let log = match schema {
        Some(schema) => parse_xes_with_schema(&bytes, schema)?,
        None => parse_xes(&bytes)?,
    };
    Ok(log)
}

fn parse_override(raw: &str, flag: &str) -> Result<(String, f64), CliError> {
    let (name, value) = raw.split_once('=').ok_or_else(|| {
        CliError::Usage(format!("--{flag} expects NAME=VALUE, got {raw:?}"))
    })?;
    let value: f64 = value
        .parse()
        .map_err(|_| CliError::Usage(format!("--{flag} {raw:?}: not a number")))?;
    Ok((name.to_string(), value))
}

fn anonymize(args: AnonymizeArgs) -> Result<(), CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config file: {e}")))?
        }
        None => FileConfig::default(),
    };

    let epsilon = args
        .epsilon
        .or(file.epsilon)
        .ok_or_else(|| CliError::Usage("--epsilon is required".into()))?;
    let prune = args
        .prune
        .or(file.prune)
        .ok_or_else(|| CliError::Usage("--prune/-k is required".into()))?;
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let max_depth = args
        .max_depth
        .or(file.max_depth)
        .unwrap_or(DEFAULT_MAX_DEPTH);
    let seed = args.seed.or(file.seed).unwrap_or_else(clock_seed);
    let schema_path = args.schema.or(file.schema);
    let matching = if args.greedy_matching || file.greedy_matching.unwrap_or(false) {
        MatchingMode::Greedy
    } else {
        MatchingMode::Optimal
    };

    let sidecar = match &schema_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("cannot read schema {}: {e}", path.display()))
            })?;
            Some(AttributeSchema::from_json(&text)?)
        }
        None => None,
    };

    let mut log = read_log(&args.input, sidecar)?;

    // per-attribute overrides rebuild the schema, then the log revalidates
    if !args.attr_epsilon.is_empty() || !args.sensitivity.is_empty() {
        let mut schema = log.schema.clone();
        for raw in &args.attr_epsilon {
            let (name, eps) = parse_override(raw, "attr-epsilon")?;
            let spec = schema.attributes.get_mut(&name).ok_or_else(|| {
                CliError::Usage(format!("--attr-epsilon names unknown attribute {name:?}"))
            })?;
            spec.epsilon = Some(eps);
        }
        for raw in &args.sensitivity {
            let (name, value) = parse_override(raw, "sensitivity")?;
            let spec = schema.attributes.get_mut(&name).ok_or_else(|| {
                CliError::Usage(format!("--sensitivity names unknown attribute {name:?}"))
            })?;
            spec.sensitivity = Some(value);
        }
        log = privlog::EventLog::new(log.traces, schema)?;
    }

    let cfg = PipelineConfig {
        query: QueryParams {
            epsilon,
            max_depth,
            prune,
        },
        noise: NoiseParams {
            shift_scale: args
                .shift_scale
                .or(file.shift_scale)
                .unwrap_or(DEFAULT_SHIFT_SCALE_MS),
            interval_scale: args
                .interval_scale
                .or(file.interval_scale)
                .unwrap_or(DEFAULT_INTERVAL_SCALE_MS),
        },
        matching,
        attribute_epsilon: args.attribute_epsilon.or(file.attribute_epsilon),
        seed,
    };

    let (anonymized, run_report) = run_pipeline(&log, &cfg)?;
    write_xes_file(&anonymized, &out)?;
    let report_path = out.with_extension("report.json");
    std::fs::write(&report_path, run_report.to_json())?;

    for warning in &run_report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "anonymized {} -> {} ({} traces in, {} sequences released, {} traces out, seed {})",
        args.input.display(),
        out.display(),
        run_report.input_traces,
        run_report.query_size,
        run_report.output_traces,
        seed
    );
    println!("report written to {}", report_path.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let original = read_log(&args.original, None)?;
    let anonymized = read_log(&args.anonymized, None)?;
    let report = compare(&original, &anonymized, &args.attrs, args.bucket_ms)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let json_path = args.out_dir.join("utility_report.json");
    let csv_path = args.out_dir.join("active_cases.csv");
    std::fs::write(&json_path, report.to_json())?;
    std::fs::write(&csv_path, report.series_csv())?;

    for (attr, pair) in &report.boolean_fractions {
        println!(
            "{attr}: true fraction {:.3} -> {:.3}",
            pair.original, pair.anonymized
        );
    }
    if let Some(dur) = &report.case_duration {
        println!(
            "case duration (days): mean {:.2} -> {:.2}, median {:.2} -> {:.2}",
            dur.original_mean_days,
            dur.anonymized_mean_days,
            dur.original_median_days,
            dur.anonymized_median_days
        );
    }
    if let Some(r) = report.workload_correlation {
        println!("active-cases correlation: {r:.3}");
    }
    println!(
        "written: {} and {}",
        json_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}
