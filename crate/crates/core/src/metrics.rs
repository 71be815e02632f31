//! Per-session collaboration indicators.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{select_person_pair, Condition, PairSelection, Session};

pub const METRICS_HEADER: &str =
    "team_id,condition,level_of_collaboration_pct,time_on_task_s,frames_total,frames_with_pair,coverage";

/// Sessions whose pair coverage falls below this are flagged in reports.
pub const COVERAGE_WARNING: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no frame in session `{team_id}` contains two persons")]
    NoPairsDetected { team_id: String },
    #[error("session `{team_id}` has {frames} frame(s); time on task needs at least 2")]
    TooFewFrames { team_id: String, frames: usize },
    #[error("metrics file: {0}")]
    Csv(#[from] csv::Error),
    #[error("metrics file: expected header `{METRICS_HEADER}`, found `{0}`")]
    BadHeader(String),
    #[error("metrics file line {line}: {reason}")]
    InvalidRecord { line: u64, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collaboration {
    /// Mean overlap ratio over pair-bearing frames, as a percentage.
    pub percent: f64,
    pub frames_with_pair: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub team_id: String,
    pub condition: Condition,
    #[serde(rename = "level_of_collaboration_pct")]
    pub level_of_collaboration: f64,
    #[serde(rename = "time_on_task_s")]
    pub time_on_task: f64,
    pub frames_total: usize,
    pub frames_with_pair: usize,
    pub coverage: f64,
}

impl SessionMetrics {
    pub fn low_coverage(&self) -> bool {
        self.coverage < COVERAGE_WARNING
    }
}

/// Overlap ratio of the selected pair in each frame, `None` where no pair was found.
pub fn frame_ratios(session: &Session, min_score: f64) -> Vec<Option<f64>> {
    session
        .frames()
        .iter()
        .map(|f| match select_person_pair(f, min_score) {
            PairSelection::Pair(p) => Some(p.overlap_ratio()),
            PairSelection::NotADyad { .. } => None,
        })
        .collect()
}

pub fn level_of_collaboration(
    session: &Session,
    min_score: f64,
) -> Result<Collaboration, MetricsError> {
    let ratios: Vec<f64> = frame_ratios(session, min_score)
        .into_iter()
        .flatten()
        .collect();
    if ratios.is_empty() {
        return Err(MetricsError::NoPairsDetected {
            team_id: session.team_id().to_string(),
        });
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(Collaboration {
        percent: 100.0 * mean,
        frames_with_pair: ratios.len(),
    })
}

/// Seconds between the first and last frame.
pub fn time_on_task(session: &Session) -> Result<f64, MetricsError> {
    match session.frames() {
        [first, .., last] => Ok(last.timestamp() - first.timestamp()),
        frames => Err(MetricsError::TooFewFrames {
            team_id: session.team_id().to_string(),
            frames: frames.len(),
        }),
    }
}

pub fn session_metrics(session: &Session, min_score: f64) -> Result<SessionMetrics, MetricsError> {
    let time = time_on_task(session)?;
    let collab = level_of_collaboration(session, min_score)?;
    let frames_total = session.frames().len();
    Ok(SessionMetrics {
        team_id: session.team_id().to_string(),
        condition: session.condition(),
        level_of_collaboration: collab.percent,
        time_on_task: time,
        frames_total,
        frames_with_pair: collab.frames_with_pair,
        coverage: collab.frames_with_pair as f64 / frames_total as f64,
    })
}

pub fn write_metrics_csv<W: Write>(mut writer: W, rows: &[SessionMetrics]) -> std::io::Result<()> {
    writeln!(writer, "{METRICS_HEADER}")?;
    for m in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            m.team_id,
            m.condition,
            m.level_of_collaboration,
            m.time_on_task,
            m.frames_total,
            m.frames_with_pair,
            m.coverage
        )?;
    }
    Ok(())
}

pub fn write_metrics_json<W: Write>(writer: W, rows: &[SessionMetrics]) -> std::io::Result<()> {
    serde_json::to_writer_pretty(writer, rows).map_err(std::io::Error::other)
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<SessionMetrics>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != METRICS_HEADER {
        return Err(MetricsError::BadHeader(header));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let m = parse_metrics_record(&record, line)?;
        validate(&m, line)?;
        rows.push(m);
    }
    Ok(rows)
}

fn parse_metrics_record(
    record: &csv::StringRecord,
    line: u64,
) -> Result<SessionMetrics, MetricsError> {
    let invalid = |reason: String| MetricsError::InvalidRecord { line, reason };
    if record.len() != 7 {
        return Err(invalid(format!(
            "expected 7 columns, found {}",
            record.len()
        )));
    }
    fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T, String> {
        record[i]
            .parse()
            .map_err(|_| format!("column {}: cannot parse `{}`", i + 1, &record[i]))
    }
    Ok(SessionMetrics {
        team_id: record[0].to_string(),
        condition: record[1]
            .parse()
            .map_err(|v| invalid(format!("unknown condition `{v}`")))?,
        level_of_collaboration: field(record, 2).map_err(invalid)?,
        time_on_task: field(record, 3).map_err(invalid)?,
        frames_total: field(record, 4).map_err(invalid)?,
        frames_with_pair: field(record, 5).map_err(invalid)?,
        coverage: field(record, 6).map_err(invalid)?,
    })
}

pub fn read_metrics_json<R: Read>(reader: R) -> Result<Vec<SessionMetrics>, MetricsError> {
    let rows: Vec<SessionMetrics> =
        serde_json::from_reader(reader).map_err(|e| MetricsError::InvalidRecord {
            line: e.line() as u64,
            reason: e.to_string(),
        })?;
    for (i, m) in rows.iter().enumerate() {
        validate(m, i as u64 + 1)?;
    }
    Ok(rows)
}

fn validate(m: &SessionMetrics, line: u64) -> Result<(), MetricsError> {
    let reason = if !(0.0..=100.0).contains(&m.level_of_collaboration) {
        "level_of_collaboration_pct outside [0, 100]"
    } else if !(m.time_on_task >= 0.0 && m.time_on_task.is_finite()) {
        "time_on_task_s must be finite and non-negative"
    } else if m.frames_with_pair > m.frames_total {
        "frames_with_pair exceeds frames_total"
    } else if !(0.0..=1.0).contains(&m.coverage) {
        "coverage outside [0, 1]"
    } else {
        return Ok(());
    };
    Err(MetricsError::InvalidRecord {
        line,
        reason: reason.to_string(),
    })
}
