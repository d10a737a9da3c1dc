//! Readers and writers for every on-disk format.
//!
//! Text formats are line oriented and start with a versioned header line.
//! Numbers are parsed with [`str::parse`], which always expects a period
//! decimal separator regardless of the process locale. Floats are written
//! in their shortest round-trip form, so write → parse is bit exact.

mod annotations;
mod dense_map;
mod kitti;
mod predictions;
pub(crate) mod scene;

pub use annotations::{parse_annotations, write_annotations, ANNOTATIONS_HEADER};
pub use dense_map::{parse_dense_map, write_dense_map, DENSE_MAP_MAGIC, DENSE_MAP_VERSION};
pub use kitti::{parse_kitti_calibration, parse_kitti_tracking, KittiConfig, KITTI_FIELDS};
pub use predictions::{parse_predictions, write_predictions, PREDICTIONS_HEADER};
pub use scene::{parse_scene, write_scene, SCENE_FORMAT};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("byte offset {offset}: malformed dense map: {reason}")]
    MalformedBinary { offset: usize, reason: String },
    #[error("missing calibration: {0}")]
    MissingCalibration(String),
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
}

impl IngestError {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Self::MalformedRecord {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::SchemaViolation {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Non-fatal findings collected while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub warnings: Vec<(usize, String)>,
    pub skipped_records: usize,
}

impl ParseDiagnostics {
    pub(crate) fn skip(&mut self, line: usize, message: impl Into<String>) {
        self.warnings.push((line, message.into()));
        self.skipped_records += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty() && self.skipped_records == 0
    }
}

/// Content lines of a versioned text document, with 1-based line numbers.
/// Blank lines and `#` comments are dropped.
pub(crate) fn content_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>, IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, first)) if first.trim() == header => {}
        Some((n, first)) => {
            return Err(IngestError::malformed(
                n,
                format!("expected header {header:?}, found {first:?}"),
            ))
        }
        None => return Err(IngestError::malformed(1, format!("missing header {header:?}"))),
    }
    Ok(lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    }))
}

pub(crate) fn parse_f64(line: usize, name: &str, field: &str) -> Result<f64, IngestError> {
    let v: f64 = field
        .parse()
        .map_err(|_| IngestError::malformed(line, format!("{name}: {field:?} is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IngestError::malformed(line, format!("{name}: {field:?} is not finite")))
    }
}

pub(crate) fn parse_u32(line: usize, name: &str, field: &str) -> Result<u32, IngestError> {
    field.parse().map_err(|_| {
        IngestError::malformed(line, format!("{name}: {field:?} is not a non-negative integer"))
    })
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
