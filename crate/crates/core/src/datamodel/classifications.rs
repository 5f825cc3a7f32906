use std::collections::BTreeMap;
use std::path::Path;

use super::types::ClassificationRecord;
use super::{read_file, Dataset};
use crate::error::{Error, Result};

/// Classifier predictions keyed by (annotation id, sample index). Records
/// without a sample index label the ground-truth box itself.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassificationSet {
    records: BTreeMap<(u64, Option<u32>), ClassificationRecord>,
}

impl ClassificationSet {
    /// Builds a set, rejecting duplicate keys.
    pub fn new(records: impl IntoIterator<Item = ClassificationRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dups = Vec::new();
        for r in records {
            let key = (r.annotation_id, r.sample_index);
            if map.insert(key, r).is_some() {
                dups.push(key.0);
            }
        }
        if dups.is_empty() {
            Ok(ClassificationSet { records: map })
        } else {
            Err(Error::validation("duplicate (annotation_id, sample_index)", dups))
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All records ordered by (annotation id, sample index).
    pub fn records(&self) -> impl Iterator<Item = &ClassificationRecord> {
        self.records.values()
    }

    pub fn get(&self, annotation_id: u64, sample_index: Option<u32>) -> Option<&ClassificationRecord> {
        self.records.get(&(annotation_id, sample_index))
    }

    /// The prediction for the ground-truth box itself.
    pub fn on_target(&self, annotation_id: u64) -> Option<&ClassificationRecord> {
        self.get(annotation_id, None)
    }

    /// Predictions on sampled boxes around one annotation, by sample index.
    pub fn samples(&self, annotation_id: u64) -> impl Iterator<Item = &ClassificationRecord> {
        self.records
            .range((annotation_id, Some(0))..=(annotation_id, Some(u32::MAX)))
            .map(|(_, r)| r)
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in self.records.values() {
            s.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
            s.push('\n');
        }
        s
    }

    /// Parses JSON Lines and validates every record against `ds`. Blank lines
    /// are skipped.
    pub fn parse(text: &str, origin: &Path, ds: &Dataset) -> Result<Self> {
        let mut records = Vec::new();
        let mut line_start = 0usize;
        for (lineno, line) in text.split('\n').enumerate() {
            let start = line_start;
            line_start += line.len() + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ClassificationRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                offset: start + e.column().saturating_sub(1),
                line: lineno + 1,
                column: e.column(),
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        let unknown_ann: Vec<u64> = records
            .iter()
            .filter(|r| ds.annotation(r.annotation_id).is_none())
            .map(|r| r.annotation_id)
            .collect();
        if !unknown_ann.is_empty() {
            return Err(Error::validation("classification for unknown annotation_id", unknown_ann));
        }
        let unknown_label: Vec<u64> = records
            .iter()
            .filter(|r| ds.category(r.label).is_none())
            .map(|r| r.annotation_id)
            .collect();
        if !unknown_label.is_empty() {
            return Err(Error::validation(
                "classification label is not a category (annotation ids)",
                unknown_label,
            ));
        }
        let bad_score: Vec<u64> = records
            .iter()
            .filter(|r| !(0.0..=1.0).contains(&r.score))
            .map(|r| r.annotation_id)
            .collect();
        if !bad_score.is_empty() {
            return Err(Error::validation(
                "classification score outside [0, 1] (annotation ids)",
                bad_score,
            ));
        }
        ClassificationSet::new(records)
    }
}

pub fn load_classifications(path: impl AsRef<Path>, ds: &Dataset) -> Result<ClassificationSet> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let set = ClassificationSet::parse(&text, path, ds)?;
    log::info!("{}: {} classification records", path.display(), set.len());
    Ok(set)
}
