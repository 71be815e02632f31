//! Collaboration indicators for recorded dyad sessions.
//!
//! Per-frame person detections are turned into two indicators per team:
//! the level of collaboration (mean overlap of the two participants'
//! bounding boxes, relative to the smaller box) and the time on task
//! (elapsed time between the first and last captured frame). Teams are then
//! compared across the treatment and control conditions with a one-way ANOVA
//! and Cohen's d.
//!
//! ```
//! use collab_core::geometry::{overlap_ratio, BoundingBox};
//!
//! let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
//! let b = BoundingBox::new(5.0, 5.0, 15.0, 15.0).unwrap();
//! assert_eq!(overlap_ratio(&a, &b), 0.25);
//! ```

pub mod cli;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod simulate;
pub mod stats;

pub use geometry::{overlap_area, overlap_ratio, BoundingBox};
pub use ingest::{
    Condition, Detection, Frame, PairSelection, PersonPair, Session, TimestampPattern,
};
pub use metrics::SessionMetrics;
pub use stats::{ComparisonResult, GroupSummary, Indicator};
