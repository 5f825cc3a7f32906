//! COCO-format ground truth, detection results and classifier predictions.

mod classifications;
mod dataset;
mod detections;
mod types;

use std::path::Path;

pub use classifications::{load_classifications, ClassificationSet};
pub use dataset::{load_ground_truth, rules, validate, Dataset, ValidationReport};
pub use detections::{count_detections, load_detections, DetectionSet};
pub use types::{Annotation, BBox, Category, ClassificationRecord, Detection, ImageRecord, SegMask};

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Maps a serde_json line/column position back to a byte offset in `text`.
pub(crate) fn parse_error(path: &Path, text: &str, e: &serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    let offset = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column.saturating_sub(1);
    Error::Parse {
        path: path.to_path_buf(),
        offset: offset.min(text.len()),
        line,
        column,
        message: e.to_string(),
    }
}
