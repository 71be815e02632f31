//! Detection CSV parsing, filename timestamps, and session assembly.
//!
//! The detection file format is fixed by its header line:
//!
//! ```text
//! image,category,score,x_min,y_min,x_max,y_max
//! ```
//!
//! One detection per row, no quoting. Image names must not contain commas.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, GeometryError};

pub const DETECTION_HEADER: &str = "image,category,score,x_min,y_min,x_max,y_max";
pub const MANIFEST_HEADER: &str = "team_id,condition,detections_path";
pub const PERSON: &str = "person";
pub const DEFAULT_MIN_SCORE: f64 = 0.7;
pub const DEFAULT_TIMESTAMP_PATTERN: &str = "HH-MM-SS";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line 1: expected header `{expected}`, found `{found}`")]
    BadHeader {
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: invalid box: {source}")]
    InvalidBox {
        line: u64,
        #[source]
        source: GeometryError,
    },
    #[error("line {line}: score {score} outside [0, 1]")]
    InvalidScore { line: u64, score: f64 },
    #[error("line {line}: unknown condition `{value}` (expected treatment or control)")]
    InvalidCondition { line: u64, value: String },
    #[error("`{name}` does not match timestamp pattern `{pattern}`")]
    PatternMismatch { name: String, pattern: String },
    #[error("timestamp pattern `{pattern}` is ambiguous: {reason}")]
    AmbiguousPattern { pattern: String, reason: String },
    #[error("`{first}` and `{second}` decode to the same timestamp ({seconds} s)")]
    DuplicateTimestamp {
        first: String,
        second: String,
        seconds: f64,
    },
    #[error("frames are not strictly increasing in time at `{image}`")]
    UnorderedFrames { image: String },
    #[error("no detections")]
    EmptyInput,
    #[error("image name `{0}` cannot be written (contains a comma or line break)")]
    UnwritableName(String),
}

/// Study arm a session belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Treatment,
    Control,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Treatment, Condition::Control];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Treatment => "treatment",
            Condition::Control => "control",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "treatment" => Ok(Condition::Treatment),
            "control" => Ok(Condition::Control),
            other => Err(other.to_string()),
        }
    }
}

/// One recognized object in one image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    image_name: String,
    category: String,
    score: f64,
    bbox: BoundingBox,
}

impl Detection {
    /// Fails with `None` when the score is outside `[0, 1]` or the category is empty.
    pub fn new(
        image_name: impl Into<String>,
        category: impl Into<String>,
        score: f64,
        bbox: BoundingBox,
    ) -> Option<Self> {
        let category = category.into();
        if category.is_empty() || !(0.0..=1.0).contains(&score) {
            return None;
        }
        Some(Self {
            image_name: image_name.into(),
            category,
            score,
            bbox,
        })
    }

    pub fn image_name(&self) -> &str {
        &self.image_name
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn is_person(&self) -> bool {
        self.category == PERSON
    }
}

/// All detections from one captured image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    image_name: String,
    timestamp: f64,
    detections: Vec<Detection>,
}

impl Frame {
    /// Detections belonging to other images are rejected with `None`.
    pub fn new(
        image_name: impl Into<String>,
        timestamp: f64,
        detections: Vec<Detection>,
    ) -> Option<Self> {
        let image_name = image_name.into();
        if detections.iter().any(|d| d.image_name != image_name) || !timestamp.is_finite() {
            return None;
        }
        Some(Self {
            image_name,
            timestamp,
            detections,
        })
    }

    pub fn image_name(&self) -> &str {
        &self.image_name
    }

    /// Seconds, as decoded from the filename.
    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }
}

/// One team's frames in capture order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    team_id: String,
    condition: Condition,
    frames: Vec<Frame>,
}

impl Session {
    pub fn new(
        team_id: impl Into<String>,
        condition: Condition,
        frames: Vec<Frame>,
    ) -> Result<Self, IngestError> {
        for pair in frames.windows(2) {
            if pair[1].timestamp == pair[0].timestamp {
                return Err(IngestError::DuplicateTimestamp {
                    first: pair[0].image_name.clone(),
                    second: pair[1].image_name.clone(),
                    seconds: pair[0].timestamp,
                });
            }
            if pair[1].timestamp < pair[0].timestamp {
                return Err(IngestError::UnorderedFrames {
                    image: pair[1].image_name.clone(),
                });
            }
        }
        Ok(Self {
            team_id: team_id.into(),
            condition,
            frames,
        })
    }

    pub fn team_id(&self) -> &str {
        &self.team_id
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

/// The two participant boxes of a dyad in one frame, highest score first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersonPair {
    pub first: BoundingBox,
    pub second: BoundingBox,
}

impl PersonPair {
    pub fn overlap_ratio(&self) -> f64 {
        crate::geometry::overlap_ratio(&self.first, &self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairSelection {
    Pair(PersonPair),
    /// Fewer than two persons passed the score filter.
    NotADyad {
        count: usize,
    },
}

impl PairSelection {
    pub fn pair(&self) -> Option<&PersonPair> {
        match self {
            PairSelection::Pair(p) => Some(p),
            PairSelection::NotADyad { .. } => None,
        }
    }
}

fn parse_number(field: &str, column: &str, line: u64) -> Result<f64, IngestError> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| IngestError::MalformedRow {
            line,
            reason: format!("{column}: `{field}` is not a number"),
        })?;
    if !value.is_finite() {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("{column}: `{field}` is not finite"),
        });
    }
    Ok(value)
}

fn parse_detection_row(record: &csv::StringRecord, line: u64) -> Result<Detection, IngestError> {
    if record.len() != 7 {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("expected 7 columns, found {}", record.len()),
        });
    }
    let image = &record[0];
    let category = &record[1];
    if image.is_empty() {
        return Err(IngestError::MalformedRow {
            line,
            reason: "empty image name".into(),
        });
    }
    if category.is_empty() {
        return Err(IngestError::MalformedRow {
            line,
            reason: "empty category".into(),
        });
    }
    let score = parse_number(&record[2], "score", line)?;
    let x_min = parse_number(&record[3], "x_min", line)?;
    let y_min = parse_number(&record[4], "y_min", line)?;
    let x_max = parse_number(&record[5], "x_max", line)?;
    let y_max = parse_number(&record[6], "y_max", line)?;
    if !(0.0..=1.0).contains(&score) {
        return Err(IngestError::InvalidScore { line, score });
    }
    let bbox = BoundingBox::new(x_min, y_min, x_max, y_max)
        .map_err(|source| IngestError::InvalidBox { line, source })?;
    Ok(Detection {
        image_name: image.to_string(),
        category: category.to_string(),
        score,
        bbox,
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(reader)
}

fn check_header(
    records: &mut csv::StringRecordsIter<'_, impl Read>,
    expected: &'static str,
) -> Result<(), IngestError> {
    match records.next() {
        None => Err(IngestError::BadHeader {
            expected,
            found: String::new(),
        }),
        Some(Err(e)) => Err(csv_error(e)),
        Some(Ok(header)) => {
            let found = header.iter().collect::<Vec<_>>().join(",");
            if found == expected {
                Ok(())
            } else {
                Err(IngestError::BadHeader { expected, found })
            }
        }
    }
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => IngestError::MalformedRow {
            line,
            reason: format!("invalid UTF-8: {err}"),
        },
        other => IngestError::MalformedRow {
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Parses a detection CSV. Row order is preserved and no category filtering
/// happens here.
pub fn parse_detection_csv<R: Read>(reader: R) -> Result<Vec<Detection>, IngestError> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    check_header(&mut records, DETECTION_HEADER)?;
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        out.push(parse_detection_row(&record, line)?);
    }
    Ok(out)
}

pub fn read_detection_file(path: &Path) -> Result<Vec<Detection>, IngestError> {
    let file = std::fs::File::open(path)?;
    parse_detection_csv(BufReader::new(file))
}

/// Writes detections in the canonical schema. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_detection_csv<W: Write>(
    mut writer: W,
    detections: &[Detection],
) -> Result<(), IngestError> {
    writeln!(writer, "{DETECTION_HEADER}")?;
    for d in detections {
        if d.image_name.contains([',', '\n', '\r']) {
            return Err(IngestError::UnwritableName(d.image_name.clone()));
        }
        if d.category.contains([',', '\n', '\r']) {
            return Err(IngestError::UnwritableName(d.category.clone()));
        }
        let b = &d.bbox;
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            d.image_name,
            d.category,
            d.score,
            b.x_min(),
            b.y_min(),
            b.x_max(),
            b.y_max()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Hours,
    Minutes,
    Seconds,
}

/// Filename timestamp pattern.
///
/// `HH`, `MM` and `SS` match two-digit hours, minutes and seconds; `*`
/// matches any run of characters; everything else is literal. The pattern
/// is tried against the whole file name and then against the name without
/// its extension, so `HH-MM-SS` accepts `14-32-05.jpg`.
#[derive(Debug, Clone)]
pub struct TimestampPattern {
    source: String,
    regex: Regex,
    fields: Vec<Field>,
}

impl TimestampPattern {
    pub fn new(pattern: &str) -> Result<Self, IngestError> {
        let ambiguous = |reason: &str| IngestError::AmbiguousPattern {
            pattern: pattern.to_string(),
            reason: reason.to_string(),
        };
        let mut expr = String::from("^");
        let mut fields = Vec::new();
        let mut rest = pattern;
        while !rest.is_empty() {
            let token = [
                ("HH", Field::Hours),
                ("MM", Field::Minutes),
                ("SS", Field::Seconds),
            ]
            .into_iter()
            .find(|(t, _)| rest.starts_with(t));
            if let Some((tok, field)) = token {
                if fields.contains(&field) {
                    return Err(ambiguous(&format!("`{tok}` appears more than once")));
                }
                fields.push(field);
                expr.push_str(r"(\d{2})");
                rest = &rest[2..];
            } else if let Some(r) = rest.strip_prefix('*') {
                expr.push_str(".*?");
                rest = r;
            } else {
                let c = rest.chars().next().expect("non-empty");
                expr.push_str(&regex::escape(c.encode_utf8(&mut [0; 4])));
                rest = &rest[c.len_utf8()..];
            }
        }
        expr.push('$');
        if fields.is_empty() {
            return Err(ambiguous("no HH, MM or SS field"));
        }
        let regex = Regex::new(&expr).map_err(|e| ambiguous(&e.to_string()))?;
        Ok(Self {
            source: pattern.to_string(),
            regex,
            fields,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Seconds since midnight encoded in `name`.
    pub fn decode(&self, name: &str) -> Result<f64, IngestError> {
        let mismatch = || IngestError::PatternMismatch {
            name: name.to_string(),
            pattern: self.source.clone(),
        };
        let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
        let stem = match base.rfind('.') {
            Some(i) if i > 0 => &base[..i],
            _ => base,
        };
        let caps = self
            .regex
            .captures(base)
            .or_else(|| self.regex.captures(stem))
            .ok_or_else(mismatch)?;
        let mut seconds = 0u32;
        for (i, field) in self.fields.iter().enumerate() {
            let value: u32 = caps[i + 1].parse().map_err(|_| mismatch())?;
            let (limit, weight) = match field {
                Field::Hours => (24, 3600),
                Field::Minutes => (60, 60),
                Field::Seconds => (60, 1),
            };
            if value >= limit {
                return Err(mismatch());
            }
            seconds += value * weight;
        }
        Ok(f64::from(seconds))
    }
}

impl Default for TimestampPattern {
    fn default() -> Self {
        Self::new(DEFAULT_TIMESTAMP_PATTERN).expect("default pattern is valid")
    }
}

impl FromStr for TimestampPattern {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

pub fn parse_filename_timestamp(
    name: &str,
    pattern: &TimestampPattern,
) -> Result<f64, IngestError> {
    pattern.decode(name)
}

/// Groups detections into frames by image name and orders them by the
/// timestamp decoded from each name.
pub fn assemble_session(
    team_id: &str,
    condition: Condition,
    detections: Vec<Detection>,
    pattern: &TimestampPattern,
) -> Result<Session, IngestError> {
    if detections.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<Detection>)> = Vec::new();
    for d in detections {
        match index.get(&d.image_name) {
            Some(&i) => groups[i].1.push(d),
            None => {
                index.insert(d.image_name.clone(), groups.len());
                groups.push((d.image_name.clone(), vec![d]));
            }
        }
    }
    let mut frames = groups
        .into_iter()
        .map(|(name, dets)| {
            let timestamp = pattern.decode(&name)?;
            Ok(Frame {
                image_name: name,
                timestamp,
                detections: dets,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Session::new(team_id, condition, frames)
}

/// Picks the dyad from a frame: persons scoring at least `min_score`, top two
/// by score, ties broken by larger area and then by row order.
pub fn select_person_pair(frame: &Frame, min_score: f64) -> PairSelection {
    let mut persons: Vec<(usize, &Detection)> = frame
        .detections
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_person() && d.score >= min_score)
        .collect();
    if persons.len() < 2 {
        return PairSelection::NotADyad {
            count: persons.len(),
        };
    }
    persons.sort_by(|(ia, a), (ib, b)| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.bbox.area().total_cmp(&a.bbox.area()))
            .then_with(|| ia.cmp(ib))
    });
    PairSelection::Pair(PersonPair {
        first: persons[0].1.bbox,
        second: persons[1].1.bbox,
    })
}

/// One row of a session manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub team_id: String,
    pub condition: Condition,
    pub detections_path: PathBuf,
}

/// Parses a manifest. Relative detection paths are resolved against `base`.
pub fn parse_manifest<R: Read>(reader: R, base: &Path) -> Result<Vec<ManifestEntry>, IngestError> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    check_header(&mut records, MANIFEST_HEADER)?;
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 columns, found {}", record.len()),
            });
        }
        if record[0].is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty team_id".into(),
            });
        }
        let condition = record[1]
            .parse()
            .map_err(|value| IngestError::InvalidCondition { line, value })?;
        let path = PathBuf::from(&record[2]);
        out.push(ManifestEntry {
            team_id: record[0].to_string(),
            condition,
            detections_path: if path.is_absolute() {
                path
            } else {
                base.join(path)
            },
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, IngestError> {
    let file = std::fs::File::open(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(BufReader::new(file), base)
}

/// Writes a manifest. Paths are written as given.
pub fn write_manifest<W: Write>(mut writer: W, entries: &[ManifestEntry]) -> io::Result<()> {
    writeln!(writer, "{MANIFEST_HEADER}")?;
    for e in entries {
        writeln!(
            writer,
            "{},{},{}",
            e.team_id,
            e.condition,
            e.detections_path.display()
        )?;
    }
    Ok(())
}
