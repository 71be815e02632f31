//! `collab` command-line interface.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ingest::{
    read_manifest, select_person_pair, ManifestEntry, PairSelection, TimestampPattern, PERSON,
};
use crate::metrics::{
    read_metrics_csv, read_metrics_json, write_metrics_csv, write_metrics_json, SessionMetrics,
};
use crate::pipeline::{analyze_entries, load_session, map_entries, AnalyzeOptions, SessionFailure};
use crate::simulate::{write_study, SimConfig, SimError};
use crate::stats::{compare_conditions, Indicator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "collab",
    version,
    about = "Collaboration indicators from per-frame person detections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-session indicators for every team in a manifest
    Analyze(RunConfig),
    /// Compare treatment and control on one indicator
    Compare(CompareArgs),
    /// Generate a synthetic study (detection CSVs plus manifest)
    Simulate(SimulateArgs),
    /// Write per-frame overlap data for plotting
    Report(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunConfig {
    /// Session manifest CSV (team_id,condition,detections_path)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Minimum detector score for a person to count
    #[arg(long, default_value_t = crate::ingest::DEFAULT_MIN_SCORE)]
    pub min_score: f64,
    /// Filename timestamp pattern (HH, MM, SS, * and literals)
    #[arg(long, default_value = crate::ingest::DEFAULT_TIMESTAMP_PATTERN)]
    pub timestamp_pattern: String,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Worker threads (0 = one per CPU)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Metrics file written by `analyze` (.csv or .json)
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = Indicator::Collaboration)]
    pub indicator: Indicator,
    /// Report path (.json) or directory; defaults to the metrics file's directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(cfg) => cmd_analyze(&cfg, out, err),
        Command::Compare(args) => cmd_compare(&args, out, err),
        Command::Simulate(args) => cmd_simulate(&args, out, err),
        Command::Report(cfg) => cmd_report(&cfg, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn internal(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        message: message.into(),
    }
}

type CmdResult = Result<i32, Failure>;

impl RunConfig {
    fn options(&self) -> Result<AnalyzeOptions, Failure> {
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(input(format!(
                "--min-score {} outside [0, 1]",
                self.min_score
            )));
        }
        let pattern =
            TimestampPattern::new(&self.timestamp_pattern).map_err(|e| input(e.to_string()))?;
        Ok(AnalyzeOptions {
            min_score: self.min_score,
            pattern,
            jobs: self.jobs,
        })
    }

    fn entries(&self) -> Result<Vec<ManifestEntry>, Failure> {
        let entries = read_manifest(&self.manifest)
            .map_err(|e| input(format!("{}: {e}", self.manifest.display())))?;
        if entries.is_empty() {
            return Err(input("no sessions"));
        }
        Ok(entries)
    }
}

fn report_failures(failures: &[&SessionFailure], err: &mut dyn Write) {
    for f in failures {
        let _ = writeln!(err, "error: {f}");
    }
}

fn warn_low_coverage(rows: &[SessionMetrics], err: &mut dyn Write) {
    for m in rows.iter().filter(|m| m.low_coverage()) {
        let _ = writeln!(
            err,
            "warning: team `{}` has pair coverage {:.2} ({} of {} frames)",
            m.team_id, m.coverage, m.frames_with_pair, m.frames_total
        );
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<(), Failure> {
    w.flush()
        .map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn write_metrics(
    path: &Path,
    rows: &[SessionMetrics],
    format: OutputFormat,
) -> Result<(), Failure> {
    let mut w = create_file(path)?;
    match format {
        OutputFormat::Csv => write_metrics_csv(&mut w, rows),
        OutputFormat::Json => write_metrics_json(&mut w, rows),
    }
    .map_err(|e| internal(format!("{}: {e}", path.display())))?;
    finish(w, path)
}

fn metrics_path(dir: &Path, format: OutputFormat) -> PathBuf {
    match format {
        OutputFormat::Csv => dir.join("metrics.csv"),
        OutputFormat::Json => dir.join("metrics.json"),
    }
}

fn cmd_analyze(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let options = cfg.options()?;
    let entries = cfg.entries()?;
    let results = analyze_entries(&entries, &options);

    let failures: Vec<&SessionFailure> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let rows: Vec<SessionMetrics> = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .cloned()
        .collect();
    report_failures(&failures, err);
    warn_low_coverage(&rows, err);

    let path = metrics_path(&cfg.out, cfg.format);
    write_metrics(&path, &rows, cfg.format)?;
    let _ = writeln!(
        out,
        "analyzed {} of {} session(s); wrote {}",
        rows.len(),
        entries.len(),
        path.display()
    );
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "{} session(s) failed", failures.len());
        Ok(EXIT_INPUT)
    }
}

fn read_metrics(path: &Path) -> Result<Vec<SessionMetrics>, Failure> {
    let file = fs::File::open(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        read_metrics_json(reader)
    } else {
        read_metrics_csv(reader)
    };
    parsed.map_err(|e| input(format!("{}: {e}", path.display())))
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let rows = read_metrics(&args.metrics)?;
    let result = compare_conditions(&rows, args.indicator).map_err(|e| input(e.to_string()))?;

    let report_path = match &args.out {
        Some(p)
            if p.extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
        {
            p.clone()
        }
        Some(dir) => dir.join(format!("comparison_{}.json", args.indicator)),
        None => args
            .metrics
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join(format!("comparison_{}.json", args.indicator)),
    };
    let mut w = create_file(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &result).map_err(|e| internal(e.to_string()))?;
    writeln!(w).map_err(|e| internal(e.to_string()))?;
    finish(w, &report_path)?;

    let _ = write!(out, "{}", result.table());
    let _ = writeln!(out, "wrote {}", report_path.display());
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| input(format!("{}: {e}", args.config.display())))?;
    let config = SimConfig::from_toml(&text)
        .map_err(|e| input(format!("{}: {e}", args.config.display())))?;
    let entries = write_study(&config, &args.out).map_err(|e| match e {
        SimError::InvalidConfig(_) | SimError::Parse(_) => input(e.to_string()),
        other => internal(other.to_string()),
    })?;
    let _ = writeln!(
        out,
        "wrote {} session(s) and {}",
        entries.len(),
        args.out.join("manifest.csv").display()
    );
    Ok(EXIT_OK)
}

const FRAMES_HEADER: &str = "team_id,condition,image,timestamp_s,elapsed_s,persons,overlap_ratio";

/// One frame of the plotting export.
#[derive(Debug, serde::Serialize)]
struct FrameRow<'a> {
    team_id: &'a str,
    condition: crate::ingest::Condition,
    image: &'a str,
    timestamp_s: f64,
    elapsed_s: f64,
    persons: usize,
    overlap_ratio: Option<f64>,
}

fn write_frame_rows(
    w: &mut dyn Write,
    rows: &[FrameRow<'_>],
    format: OutputFormat,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{FRAMES_HEADER}")?;
            for r in rows {
                let ratio = r.overlap_ratio.map(|v| v.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.team_id, r.condition, r.image, r.timestamp_s, r.elapsed_s, r.persons, ratio
                )?;
            }
            Ok(())
        }
        OutputFormat::Json => serde_json::to_writer_pretty(w, rows).map_err(std::io::Error::other),
    }
}

fn cmd_report(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let options = cfg.options()?;
    let entries = cfg.entries()?;
    let sessions = map_entries(&entries, options.jobs, |e| {
        load_session(e, &options.pattern)
    });

    let mut failures = Vec::new();
    let mut frame_rows = Vec::new();
    let mut metrics = Vec::new();
    for session in &sessions {
        let session = match session {
            Ok(s) => s,
            Err(f) => {
                failures.push(f.to_string());
                continue;
            }
        };
        let start = session.frames().first().map_or(0.0, |f| f.timestamp());
        for frame in session.frames() {
            let persons = frame
                .detections()
                .iter()
                .filter(|d| d.category() == PERSON && d.score() >= options.min_score)
                .count();
            frame_rows.push(FrameRow {
                team_id: session.team_id(),
                condition: session.condition(),
                image: frame.image_name(),
                timestamp_s: frame.timestamp(),
                elapsed_s: frame.timestamp() - start,
                persons,
                overlap_ratio: match select_person_pair(frame, options.min_score) {
                    PairSelection::Pair(p) => Some(p.overlap_ratio()),
                    PairSelection::NotADyad { .. } => None,
                },
            });
        }
        match crate::metrics::session_metrics(session, options.min_score) {
            Ok(m) => metrics.push(m),
            Err(e) => failures.push(format!("team `{}`: {e}", session.team_id())),
        }
    }
    for f in &failures {
        let _ = writeln!(err, "error: {f}");
    }
    warn_low_coverage(&metrics, err);

    let frames_path = match cfg.format {
        OutputFormat::Csv => cfg.out.join("frames.csv"),
        OutputFormat::Json => cfg.out.join("frames.json"),
    };
    let mut w = create_file(&frames_path)?;
    write_frame_rows(&mut w, &frame_rows, cfg.format)
        .map_err(|e| internal(format!("{}: {e}", frames_path.display())))?;
    finish(w, &frames_path)?;
    let summary_path = metrics_path(&cfg.out, cfg.format);
    write_metrics(&summary_path, &metrics, cfg.format)?;

    for indicator in [Indicator::Collaboration, Indicator::Time] {
        if let Ok(result) = compare_conditions(&metrics, indicator) {
            let _ = writeln!(out, "{}", result.table());
        }
    }
    let _ = writeln!(
        out,
        "wrote {} and {}",
        frames_path.display(),
        summary_path.display()
    );
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_INPUT
    })
}
