//! C ABI for `collab-core`.
//!
//! Every fallible function returns a [`CollabStatus`]; on failure a message
//! is available from [`collab_last_error_message`] on the same thread.
//! Sessions are opaque handles created by `collab_session_from_*` and
//! released with [`collab_session_free`]. The header `include/collab.h` is
//! generated by cbindgen at build time.

#![allow(clippy::missing_safety_doc)]

mod error;

use std::ffi::{c_char, CStr};
use std::path::Path;
use std::ptr;

use collab_core::geometry::{self, BoundingBox};
use collab_core::ingest::{
    assemble_session, parse_detection_csv, read_detection_file, Condition, Session,
    TimestampPattern,
};
use collab_core::metrics::{session_metrics, SessionMetrics};
use collab_core::stats::{self, Indicator};

pub use error::CollabStatus;
use error::{guard, last_error, FfiError};

/// Axis-aligned box in pixels; requires `x_min < x_max` and `y_min < y_max`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollabBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollabCondition {
    Treatment = 0,
    Control = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollabIndicator {
    Collaboration = 0,
    Time = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollabSessionMetrics {
    pub condition: CollabCondition,
    /// Percent in [0, 100].
    pub level_of_collaboration: f64,
    /// Seconds.
    pub time_on_task: f64,
    pub frames_total: usize,
    pub frames_with_pair: usize,
    pub coverage: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollabGroupSummary {
    pub condition: CollabCondition,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollabAnova {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// Treatment versus control on one indicator.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollabComparison {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    /// Treatment mean minus control mean, over the pooled SD.
    pub cohens_d: f64,
    pub treatment: CollabGroupSummary,
    pub control: CollabGroupSummary,
}

/// Opaque session handle.
pub struct CollabSession {
    inner: Session,
}

impl From<Condition> for CollabCondition {
    fn from(c: Condition) -> Self {
        match c {
            Condition::Treatment => CollabCondition::Treatment,
            Condition::Control => CollabCondition::Control,
        }
    }
}

impl From<CollabCondition> for Condition {
    fn from(c: CollabCondition) -> Self {
        match c {
            CollabCondition::Treatment => Condition::Treatment,
            CollabCondition::Control => Condition::Control,
        }
    }
}

impl From<CollabIndicator> for Indicator {
    fn from(i: CollabIndicator) -> Self {
        match i {
            CollabIndicator::Collaboration => Indicator::Collaboration,
            CollabIndicator::Time => Indicator::Time,
        }
    }
}

impl From<&SessionMetrics> for CollabSessionMetrics {
    fn from(m: &SessionMetrics) -> Self {
        Self {
            condition: m.condition.into(),
            level_of_collaboration: m.level_of_collaboration,
            time_on_task: m.time_on_task,
            frames_total: m.frames_total,
            frames_with_pair: m.frames_with_pair,
            coverage: m.coverage,
        }
    }
}

impl From<&stats::GroupSummary> for CollabGroupSummary {
    fn from(s: &stats::GroupSummary) -> Self {
        Self {
            condition: s.condition.into(),
            n: s.n,
            mean: s.mean,
            sd: s.sd,
        }
    }
}

fn to_box(b: &CollabBox) -> Result<BoundingBox, FfiError> {
    BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
        .map_err(|e| FfiError::new(CollabStatus::InvalidBox, e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, FfiError> {
    // SAFETY: caller guarantees `p` is null or valid for reads.
    unsafe { p.as_ref() }
        .ok_or_else(|| FfiError::new(CollabStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, FfiError> {
    // SAFETY: caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }
        .ok_or_else(|| FfiError::new(CollabStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::new(
            CollabStatus::NullPointer,
            format!("`{name}` is null"),
        ));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        FfiError::new(
            CollabStatus::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], FfiError> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(FfiError::new(
            CollabStatus::NullPointer,
            format!("`{name}` is null"),
        ));
    }
    // SAFETY: caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn pattern(p: *const c_char) -> Result<TimestampPattern, FfiError> {
    if p.is_null() {
        return Ok(TimestampPattern::default());
    }
    // SAFETY: forwarded from the caller's contract.
    Ok(TimestampPattern::new(unsafe {
        c_str(p, "timestamp_pattern")
    }?)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn collab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length in bytes.
/// Pass a null `buf` to query the length.
#[no_mangle]
pub unsafe extern "C" fn collab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    let message = last_error();
    let bytes = message.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        // SAFETY: caller guarantees `len` writable bytes at `buf`.
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
    }
    bytes.len()
}

/// Intersection area of two boxes.
#[no_mangle]
pub unsafe extern "C" fn collab_overlap_area(
    a: *const CollabBox,
    b: *const CollabBox,
    out: *mut f64,
) -> CollabStatus {
    guard(|| {
        let a = to_box(unsafe { deref(a, "a") }?)?;
        let b = to_box(unsafe { deref(b, "b") }?)?;
        *unsafe { out_ref(out, "out") }? = geometry::overlap_area(&a, &b);
        Ok(())
    })
}

/// Intersection area divided by the smaller box's area.
#[no_mangle]
pub unsafe extern "C" fn collab_overlap_ratio(
    a: *const CollabBox,
    b: *const CollabBox,
    out: *mut f64,
) -> CollabStatus {
    guard(|| {
        let a = to_box(unsafe { deref(a, "a") }?)?;
        let b = to_box(unsafe { deref(b, "b") }?)?;
        *unsafe { out_ref(out, "out") }? = geometry::overlap_ratio(&a, &b);
        Ok(())
    })
}

/// Decodes a filename timestamp (seconds after midnight). A null `pattern`
/// selects `HH-MM-SS`.
#[no_mangle]
pub unsafe extern "C" fn collab_parse_filename_timestamp(
    name: *const c_char,
    pattern: *const c_char,
    out_seconds: *mut f64,
) -> CollabStatus {
    guard(|| {
        let name = unsafe { c_str(name, "name") }?;
        let pattern = unsafe { self::pattern(pattern) }?;
        *unsafe { out_ref(out_seconds, "out_seconds") }? = pattern.decode(name)?;
        Ok(())
    })
}

fn build_session(
    team_id: &str,
    condition: CollabCondition,
    detections: Vec<collab_core::Detection>,
    pattern: &TimestampPattern,
    out: *mut *mut CollabSession,
) -> Result<(), FfiError> {
    let session = assemble_session(team_id, condition.into(), detections, pattern)?;
    let handle = Box::into_raw(Box::new(CollabSession { inner: session }));
    // SAFETY: `out` checked non-null by the callers.
    unsafe { *out = handle };
    Ok(())
}

/// Loads a session from a detection CSV file. On success `*out` receives a
/// handle that must be released with `collab_session_free`.
#[no_mangle]
pub unsafe extern "C" fn collab_session_from_csv_path(
    path: *const c_char,
    team_id: *const c_char,
    condition: CollabCondition,
    timestamp_pattern: *const c_char,
    out: *mut *mut CollabSession,
) -> CollabStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        let team_id = unsafe { c_str(team_id, "team_id") }?;
        let pattern = unsafe { self::pattern(timestamp_pattern) }?;
        unsafe { out_ref(out, "out") }?;
        let detections = read_detection_file(Path::new(path))
            .map_err(|e| FfiError::from(e).with_context(path))?;
        build_session(team_id, condition, detections, &pattern, out)
    })
}

/// Loads a session from detection CSV text.
#[no_mangle]
pub unsafe extern "C" fn collab_session_from_csv_str(
    csv: *const c_char,
    team_id: *const c_char,
    condition: CollabCondition,
    timestamp_pattern: *const c_char,
    out: *mut *mut CollabSession,
) -> CollabStatus {
    guard(|| {
        let text = unsafe { c_str(csv, "csv") }?;
        let team_id = unsafe { c_str(team_id, "team_id") }?;
        let pattern = unsafe { self::pattern(timestamp_pattern) }?;
        unsafe { out_ref(out, "out") }?;
        let detections = parse_detection_csv(text.as_bytes())?;
        build_session(team_id, condition, detections, &pattern, out)
    })
}

/// Releases a session handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn collab_session_free(session: *mut CollabSession) {
    if session.is_null() {
        return;
    }
    // SAFETY: handle came from `Box::into_raw` in `build_session`.
    drop(unsafe { Box::from_raw(session) });
}

/// Number of frames in the session, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn collab_session_frame_count(session: *const CollabSession) -> usize {
    // SAFETY: caller passes a live handle or null.
    unsafe { session.as_ref() }.map_or(0, |s| s.inner.frames().len())
}

/// Level of collaboration, time on task and coverage for one session.
#[no_mangle]
pub unsafe extern "C" fn collab_session_metrics(
    session: *const CollabSession,
    min_score: f64,
    out: *mut CollabSessionMetrics,
) -> CollabStatus {
    guard(|| {
        let session = unsafe { deref(session, "session") }?;
        if !(0.0..=1.0).contains(&min_score) {
            return Err(FfiError::new(
                CollabStatus::InvalidArgument,
                format!("min_score {min_score} outside [0, 1]"),
            ));
        }
        let m = session_metrics(&session.inner, min_score)?;
        *unsafe { out_ref(out, "out") }? = (&m).into();
        Ok(())
    })
}

/// Upper-tail probability `P(F > f)` for the F distribution.
#[no_mangle]
pub unsafe extern "C" fn collab_f_p_value(
    f: f64,
    df1: f64,
    df2: f64,
    out: *mut f64,
) -> CollabStatus {
    guard(|| {
        *unsafe { out_ref(out, "out") }? = stats::f_p_value(f, df1, df2)?;
        Ok(())
    })
}

/// One-way ANOVA over two groups of values.
#[no_mangle]
pub unsafe extern "C" fn collab_anova_two_groups(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out: *mut CollabAnova,
) -> CollabStatus {
    guard(|| {
        let a = unsafe { slice(a, a_len, "a") }?;
        let b = unsafe { slice(b, b_len, "b") }?;
        let r = stats::anova_two_groups(a, b)?;
        *unsafe { out_ref(out, "out") }? = CollabAnova {
            f: r.f_statistic,
            df_between: r.df_between,
            df_within: r.df_within,
        };
        Ok(())
    })
}

/// Cohen's d of `a` relative to `b` with the pooled sample SD.
#[no_mangle]
pub unsafe extern "C" fn collab_cohens_d(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out: *mut f64,
) -> CollabStatus {
    guard(|| {
        let a = unsafe { slice(a, a_len, "a") }?;
        let b = unsafe { slice(b, b_len, "b") }?;
        *unsafe { out_ref(out, "out") }? = stats::cohens_d(a, b)?;
        Ok(())
    })
}

/// Compares treatment and control sessions on one indicator.
#[no_mangle]
pub unsafe extern "C" fn collab_compare_conditions(
    rows: *const CollabSessionMetrics,
    len: usize,
    indicator: CollabIndicator,
    out: *mut CollabComparison,
) -> CollabStatus {
    guard(|| {
        let rows: &[CollabSessionMetrics] = if len == 0 {
            &[]
        } else {
            if rows.is_null() {
                return Err(FfiError::new(CollabStatus::NullPointer, "`rows` is null"));
            }
            // SAFETY: caller guarantees `len` readable records.
            unsafe { std::slice::from_raw_parts(rows, len) }
        };
        let metrics: Vec<SessionMetrics> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| SessionMetrics {
                team_id: i.to_string(),
                condition: r.condition.into(),
                level_of_collaboration: r.level_of_collaboration,
                time_on_task: r.time_on_task,
                frames_total: r.frames_total,
                frames_with_pair: r.frames_with_pair,
                coverage: r.coverage,
            })
            .collect();
        let r = stats::compare_conditions(&metrics, indicator.into())?;
        *unsafe { out_ref(out, "out") }? = CollabComparison {
            f: r.f_statistic,
            df_between: r.df_between,
            df_within: r.df_within,
            p: r.p_value,
            cohens_d: r.cohens_d,
            treatment: (&r.summaries[0]).into(),
            control: (&r.summaries[1]).into(),
        };
        Ok(())
    })
}

impl FfiError {
    fn with_context(self, context: &str) -> Self {
        Self(self.0, format!("{context}: {}", self.1))
    }
}
