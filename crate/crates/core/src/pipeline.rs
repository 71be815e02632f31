//! Manifest-driven batch processing shared by the CLI subcommands.

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{
    assemble_session, read_detection_file, IngestError, ManifestEntry, Session, TimestampPattern,
};
use crate::metrics::{session_metrics, MetricsError, SessionMetrics};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{}: {source}", path.display())]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A session that could not be processed.
#[derive(Debug, Error)]
#[error("team `{team_id}`: {error}")]
pub struct SessionFailure {
    pub team_id: String,
    pub error: SessionError,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub min_score: f64,
    pub pattern: TimestampPattern,
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            min_score: crate::ingest::DEFAULT_MIN_SCORE,
            pattern: TimestampPattern::default(),
            jobs: 0,
        }
    }
}

pub fn load_session(
    entry: &ManifestEntry,
    pattern: &TimestampPattern,
) -> Result<Session, SessionFailure> {
    let fail = |source| SessionFailure {
        team_id: entry.team_id.clone(),
        error: SessionError::Ingest {
            path: entry.detections_path.clone(),
            source,
        },
    };
    let detections = read_detection_file(&entry.detections_path).map_err(fail)?;
    assemble_session(&entry.team_id, entry.condition, detections, pattern).map_err(fail)
}

pub fn analyze_entry(
    entry: &ManifestEntry,
    options: &AnalyzeOptions,
) -> Result<SessionMetrics, SessionFailure> {
    let session = load_session(entry, &options.pattern)?;
    session_metrics(&session, options.min_score).map_err(|e| SessionFailure {
        team_id: entry.team_id.clone(),
        error: e.into(),
    })
}

/// Runs `f` over every entry on a pool of `jobs` threads, returning results
/// in manifest order.
pub fn map_entries<T, F>(entries: &[ManifestEntry], jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&ManifestEntry) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    match pool {
        Ok(pool) => pool.install(|| entries.par_iter().map(&f).collect()),
        Err(_) => entries.iter().map(f).collect(),
    }
}

pub fn analyze_entries(
    entries: &[ManifestEntry],
    options: &AnalyzeOptions,
) -> Vec<Result<SessionMetrics, SessionFailure>> {
    map_entries(entries, options.jobs, |e| analyze_entry(e, options))
}
