//! Status codes and the per-thread last-error message.

use std::cell::RefCell;
use std::panic::{catch_unwind, UnwindSafe};

use collab_core::ingest::IngestError;
use collab_core::metrics::MetricsError;
use collab_core::pipeline::SessionError;
use collab_core::stats::StatsError;

/// Result of every fallible `collab_*` call. `COLLAB_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    MalformedInput = 4,
    InvalidBox = 5,
    InvalidScore = 6,
    Timestamp = 7,
    NoPairsDetected = 8,
    TooFewFrames = 9,
    TooFewValues = 10,
    DegenerateVariance = 11,
    MissingCondition = 12,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

pub(crate) fn set_last_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

pub(crate) fn last_error() -> String {
    LAST_ERROR.with(|e| e.borrow().clone())
}

/// Error carried out of an FFI body: a status plus a message for
/// `collab_last_error_message`.
pub(crate) struct FfiError(pub CollabStatus, pub String);

impl FfiError {
    pub fn new(status: CollabStatus, message: impl Into<String>) -> Self {
        Self(status, message.into())
    }
}

impl From<IngestError> for FfiError {
    fn from(e: IngestError) -> Self {
        let status = match &e {
            IngestError::Io(_) => CollabStatus::Io,
            IngestError::InvalidBox { .. } => CollabStatus::InvalidBox,
            IngestError::InvalidScore { .. } => CollabStatus::InvalidScore,
            IngestError::PatternMismatch { .. }
            | IngestError::AmbiguousPattern { .. }
            | IngestError::DuplicateTimestamp { .. }
            | IngestError::UnorderedFrames { .. } => CollabStatus::Timestamp,
            _ => CollabStatus::MalformedInput,
        };
        Self(status, e.to_string())
    }
}

impl From<MetricsError> for FfiError {
    fn from(e: MetricsError) -> Self {
        let status = match &e {
            MetricsError::NoPairsDetected { .. } => CollabStatus::NoPairsDetected,
            MetricsError::TooFewFrames { .. } => CollabStatus::TooFewFrames,
            MetricsError::Io(_) => CollabStatus::Io,
            _ => CollabStatus::MalformedInput,
        };
        Self(status, e.to_string())
    }
}

impl From<SessionError> for FfiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Ingest { path, source } => {
                let FfiError(status, message) = source.into();
                Self(status, format!("{}: {message}", path.display()))
            }
            SessionError::Metrics(m) => m.into(),
        }
    }
}

impl From<StatsError> for FfiError {
    fn from(e: StatsError) -> Self {
        let status = match &e {
            StatsError::TooFewValues(_) => CollabStatus::TooFewValues,
            StatsError::DegenerateVariance => CollabStatus::DegenerateVariance,
            StatsError::MissingCondition(_) => CollabStatus::MissingCondition,
            StatsError::NonFinite | StatsError::InvalidDistribution { .. } => {
                CollabStatus::InvalidArgument
            }
        };
        Self(status, e.to_string())
    }
}

/// Runs an FFI body, recording any error message and converting panics.
pub(crate) fn guard<F>(body: F) -> CollabStatus
where
    F: FnOnce() -> Result<(), FfiError> + UnwindSafe,
{
    match catch_unwind(body) {
        Ok(Ok(())) => {
            set_last_error("");
            CollabStatus::Ok
        }
        Ok(Err(FfiError(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            CollabStatus::Panic
        }
    }
}
