//! Upper-bound detectors: ground-truth boxes labeled and scored by a
//! classifier, either directly (strategy 1) or by aggregating predictions on
//! boxes sampled around each target (strategy 2).

mod accuracy;
mod manifest;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use accuracy::{accuracy_uap_correlation, top1_accuracy, AccuracyReport, ClassAccuracy, CorrelationPoint, CorrelationReport};
pub use manifest::{sample_manifest, SampleManifest, SampleRow};

use crate::datamodel::{Annotation, ClassificationRecord, ClassificationSet, Dataset, Detection, DetectionSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy2Mode {
    /// Label and score of the single highest-scored sample.
    MostConfidentBox,
    /// Modal label across samples, scored by its best sample.
    MostFrequentLabel,
}

fn target_detection(a: &Annotation, label: u64, score: f64) -> Detection {
    Detection {
        image_id: a.image_id,
        category_id: label,
        bbox: a.bbox,
        score,
        segmentation: a.segmentation.clone(),
    }
}

fn check_override(v: Option<f64>) -> Result<()> {
    match v {
        Some(c) if !(0.0..=1.0).contains(&c) => Err(Error::Argument(format!(
            "confidence override must lie in [0, 1], got {c}"
        ))),
        _ => Ok(()),
    }
}

/// One detection per non-crowd annotation: the ground-truth box with the
/// classifier's label and score (or `confidence_override`). Output is ordered
/// by annotation id.
pub fn build_uap_detections(
    ds: &Dataset,
    cls: &ClassificationSet,
    confidence_override: Option<f64>,
) -> Result<DetectionSet> {
    check_override(confidence_override)?;
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for a in ds.annotations().iter().filter(|a| !a.iscrowd) {
        match cls.on_target(a.id) {
            Some(r) => out.push(target_detection(a, r.label, confidence_override.unwrap_or(r.score))),
            None => missing.push(a.id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::validation("annotations without a strategy-1 prediction", missing));
    }
    Ok(DetectionSet::new(out))
}

/// Picks (label, score) from the predictions on one target's samples.
pub fn aggregate_samples<'a>(
    samples: impl IntoIterator<Item = &'a ClassificationRecord>,
    mode: Strategy2Mode,
) -> Option<(u64, f64)> {
    let samples: Vec<&ClassificationRecord> = samples.into_iter().collect();
    match mode {
        Strategy2Mode::MostConfidentBox => samples
            .iter()
            .fold(None::<&ClassificationRecord>, |best, r| match best {
                Some(b) if b.score >= r.score => Some(b),
                _ => Some(r),
            })
            .map(|r| (r.label, r.score)),
        Strategy2Mode::MostFrequentLabel => {
            // label -> (count, best score)
            let mut tally: BTreeMap<u64, (usize, f64)> = BTreeMap::new();
            for r in &samples {
                let e = tally.entry(r.label).or_insert((0, f64::NEG_INFINITY));
                e.0 += 1;
                e.1 = e.1.max(r.score);
            }
            // BTreeMap iterates labels ascending, so on a full tie the first
            // (lowest) label is kept.
            tally
                .into_iter()
                .fold(None::<(u64, usize, f64)>, |best, (label, (n, s))| match best {
                    Some((_, bn, bs)) if (bn, bs) >= (n, s) => best,
                    _ => Some((label, n, s)),
                })
                .map(|(label, _, s)| (label, s))
        }
    }
}

/// Strategy 2: the ground-truth box keeps its coordinates; its label and score
/// come from the predictions on the boxes sampled around it.
pub fn strategy2_aggregate(
    ds: &Dataset,
    manifest: &SampleManifest,
    preds: &ClassificationSet,
    mode: Strategy2Mode,
) -> Result<DetectionSet> {
    let stray: Vec<u64> = preds
        .records()
        .filter_map(|r| r.sample_index.map(|s| (r.annotation_id, s)))
        .filter(|&(a, s)| !manifest.contains(a, s))
        .map(|(a, _)| a)
        .collect();
    if !stray.is_empty() {
        return Err(Error::validation(
            "predictions for samples missing from the manifest (annotation ids)",
            stray,
        ));
    }
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for a in ds.annotations().iter().filter(|a| !a.iscrowd) {
        match aggregate_samples(preds.samples(a.id), mode) {
            Some((label, score)) => out.push(target_detection(a, label, score)),
            None => missing.push(a.id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::validation("annotations without sampled predictions", missing));
    }
    Ok(DetectionSet::new(out))
}
