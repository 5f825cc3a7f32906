//! Four-stage error diagnosis. Working per (category, image) pair, the stages
//! remove background confusions, snap mislocalized boxes onto their best
//! target, drop duplicates, and finally add every missed target as a score-1
//! detection. The full evaluator runs after each stage.
//!
//! Crowd annotations are not targets here: they are ignore regions during
//! evaluation, so detections on them never count either way.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::datamodel::{Annotation, Dataset, Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, match_greedy, EvalConfig, MatchTarget};
use crate::geometry::iou_box;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosisConfig {
    /// Matching threshold for duplicates and the one-to-one assignment.
    pub base_iou: f64,
    /// Detections whose best overlap is at or below this are background.
    pub background_iou: f64,
    /// Area range (by name) the reported mAP is restricted to.
    pub area_range: Option<String>,
    pub eval: EvalConfig,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        DiagnosisConfig {
            base_iou: 0.5,
            background_iou: 0.1,
            area_range: None,
            eval: EvalConfig::default(),
        }
    }
}

impl DiagnosisConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0 <= self.background_iou && self.background_iou < self.base_iou && self.base_iou <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 <= background_iou ({}) < base_iou ({}) <= 1",
                self.background_iou, self.base_iou
            )));
        }
        if let Some(name) = &self.area_range {
            if self.eval.area_index(name).is_none() {
                return Err(Error::Config(format!("unknown area range {name:?}")));
            }
        }
        self.eval.check()
    }
}

fn targets_for<'a>(ds: &'a Dataset, d: &Detection) -> Vec<&'a Annotation> {
    ds.annotations_for(d.image_id, d.category_id)
        .filter(|a| !a.iscrowd)
        .collect()
}

/// Best overlap with a same-class target and the first target reaching it.
fn best_target<'a>(d: &Detection, targets: &[&'a Annotation]) -> (f64, Option<&'a Annotation>) {
    let mut best = (0.0, None);
    for t in targets {
        let iou = iou_box(&d.bbox, &t.bbox);
        if iou > best.0 {
            best = (iou, Some(*t));
        }
    }
    best
}

fn snap(d: &mut Detection, target: &Annotation) -> bool {
    let moved = d.bbox != target.bbox;
    d.bbox = target.bbox;
    if d.segmentation.is_some() {
        d.segmentation = target.segmentation.clone();
    }
    moved
}

/// Drops detections whose best overlap with any same-class target in their
/// image is at most `background_iou`.
pub fn stage1_remove_background(dets: &DetectionSet, ds: &Dataset, cfg: &DiagnosisConfig) -> DetectionSet {
    dets.detections()
        .iter()
        .filter(|d| best_target(d, &targets_for(ds, d)).0 > cfg.background_iou)
        .cloned()
        .collect()
}

/// Replaces the box of every detection with `background_iou < best < base_iou`
/// by its best target's box. Scores and labels stay.
pub fn stage2_fix_localization(dets: &DetectionSet, ds: &Dataset, cfg: &DiagnosisConfig) -> DetectionSet {
    dets.detections()
        .iter()
        .map(|d| {
            let mut d = d.clone();
            let targets = targets_for(ds, &d);
            if let (iou, Some(t)) = best_target(&d, &targets) {
                if iou > cfg.background_iou && iou < cfg.base_iou {
                    snap(&mut d, t);
                }
            }
            d
        })
        .collect()
}

/// Greedy one-to-one assignment at `base_iou` for one (image, category)
/// pair. Returns (detection index in the set, target) pairs plus the targets
/// left unassigned and the unassigned detections.
struct Assignment<'a> {
    assigned: Vec<(usize, &'a Annotation)>,
    unassigned_dets: Vec<usize>,
    missed: Vec<&'a Annotation>,
}

fn assign_pair<'a>(
    dets: &DetectionSet,
    ds: &'a Dataset,
    image_id: u64,
    category_id: u64,
    base_iou: f64,
) -> Assignment<'a> {
    let targets: Vec<&Annotation> = ds
        .annotations_for(image_id, category_id)
        .filter(|a| !a.iscrowd)
        .collect();
    let order = crate::evaluator::sorted_by_score(dets, image_id, category_id);
    let ious: Vec<Vec<f64>> = order
        .iter()
        .map(|(_, d)| targets.iter().map(|t| iou_box(&d.bbox, &t.bbox)).collect())
        .collect();
    let plain = vec![MatchTarget { ignore: false, crowd: false }; targets.len()];
    let m = match_greedy(&ious, &plain, base_iou);
    let mut out = Assignment {
        assigned: Vec::new(),
        unassigned_dets: Vec::new(),
        missed: Vec::new(),
    };
    for (rank, &(idx, _)) in order.iter().enumerate() {
        match m.det_target[rank] {
            Some(g) => out.assigned.push((idx, targets[g])),
            None => out.unassigned_dets.push(idx),
        }
    }
    out.missed = targets
        .iter()
        .enumerate()
        .filter(|(g, _)| m.target_det[*g].is_none())
        .map(|(_, t)| *t)
        .collect();
    out
}

fn all_pairs(dets: &DetectionSet, ds: &Dataset) -> BTreeSet<(u64, u64)> {
    dets.image_category_pairs().chain(ds.image_category_pairs()).collect()
}

/// Removes every unassigned detection that overlaps an assigned target at
/// `base_iou` or more (a lower-scored second hit on the same object).
pub fn stage3_remove_duplicates(dets: &DetectionSet, ds: &Dataset, cfg: &DiagnosisConfig) -> DetectionSet {
    let mut drop = BTreeSet::new();
    for (img, cat) in dets.image_category_pairs() {
        let a = assign_pair(dets, ds, img, cat, cfg.base_iou);
        for &d in &a.unassigned_dets {
            let bbox = dets.detections()[d].bbox;
            if a.assigned.iter().any(|(_, t)| iou_box(&bbox, &t.bbox) >= cfg.base_iou) {
                drop.insert(d);
            }
        }
    }
    dets.detections()
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, d)| d.clone())
        .collect()
}

/// Snaps every assigned detection onto its target, then appends each
/// unassigned target as a score-1 detection of its own class.
pub fn stage4_add_misses(dets: &DetectionSet, ds: &Dataset, cfg: &DiagnosisConfig) -> DetectionSet {
    let mut out: Vec<Detection> = dets.detections().to_vec();
    let mut misses: Vec<&Annotation> = Vec::new();
    for (img, cat) in all_pairs(dets, ds) {
        let a = assign_pair(dets, ds, img, cat, cfg.base_iou);
        for (idx, t) in a.assigned {
            snap(&mut out[idx], t);
        }
        misses.extend(a.missed);
    }
    misses.sort_by_key(|a| a.id);
    out.extend(misses.into_iter().map(|t| Detection {
        image_id: t.image_id,
        category_id: t.category_id,
        bbox: t.bbox,
        score: 1.0,
        segmentation: t.segmentation.clone(),
    }));
    DetectionSet::new(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageResult {
    pub name: &'static str,
    /// AP averaged over the IOU sweep.
    pub map: f64,
    pub map50: f64,
    pub map_per_threshold: Vec<f64>,
    pub detections: usize,
    pub detections_added: usize,
    pub detections_removed: usize,
    pub detections_moved: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosisReport {
    /// original, cls_type1, localization, duplicates, misses
    pub stages: Vec<StageResult>,
}

impl DiagnosisReport {
    pub fn maps(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.map).collect()
    }

    pub fn map_original(&self) -> f64 {
        self.stages[0].map
    }

    pub fn map_after_cls_type1(&self) -> f64 {
        self.stages[1].map
    }

    pub fn map_after_localization(&self) -> f64 {
        self.stages[2].map
    }

    pub fn map_after_duplicates(&self) -> f64 {
        self.stages[3].map
    }

    pub fn map_after_misses(&self) -> f64 {
        self.stages[4].map
    }

    /// mAP gain contributed by each of the four stages.
    pub fn deltas(&self) -> Vec<f64> {
        self.stages.windows(2).map(|w| w[1].map - w[0].map).collect()
    }
}

pub const STAGE_NAMES: [&str; 5] = ["original", "cls_type1", "localization", "duplicates", "misses"];

/// Counts (added, removed, moved) between consecutive stages. Stages only
/// ever append, drop, or change boxes in place, so records are compared by
/// (image, category, score) identity in order.
fn stage_delta(before: &DetectionSet, after: &DetectionSet) -> (usize, usize, usize) {
    type Key = (u64, u64, u64);
    let key = |d: &Detection| (d.image_id, d.category_id, d.score.to_bits());
    let mut pool: BTreeMap<Key, Vec<&Detection>> = BTreeMap::new();
    for d in before.detections() {
        pool.entry(key(d)).or_default().push(d);
    }
    let (mut added, mut moved) = (0, 0);
    let mut matched = 0;
    for d in after.detections() {
        // prefer an unchanged twin, otherwise any record with the same identity
        match pool.get_mut(&key(d)) {
            Some(v) if !v.is_empty() => {
                let pos = v.iter().position(|b| b.bbox == d.bbox).unwrap_or(0);
                let b = v.remove(pos);
                matched += 1;
                if b.bbox != d.bbox {
                    moved += 1;
                }
            }
            _ => added += 1,
        }
    }
    (added, before.len() - matched, moved)
}

/// Runs the four stages in order and evaluates after each.
pub fn diagnose(ds: &Dataset, dets: &DetectionSet, cfg: &DiagnosisConfig) -> Result<DiagnosisReport> {
    cfg.check()?;
    let area = cfg.eval.area_index(cfg.area_range.as_deref().unwrap_or("all")).unwrap_or(0);
    let t50 = cfg.eval.threshold_index(0.5);

    let s1 = stage1_remove_background(dets, ds, cfg);
    let s2 = stage2_fix_localization(&s1, ds, cfg);
    let s3 = stage3_remove_duplicates(&s2, ds, cfg);
    let s4 = stage4_add_misses(&s3, ds, cfg);
    let sets = [dets, &s1, &s2, &s3, &s4];

    let mut stages = Vec::with_capacity(5);
    for (i, set) in sets.iter().enumerate() {
        let ev = evaluate(ds, set, &cfg.eval)?;
        let m = cfg.eval.max_dets.len() - 1;
        let (added, removed, moved) = if i == 0 { (0, 0, 0) } else { stage_delta(sets[i - 1], set) };
        stages.push(StageResult {
            name: STAGE_NAMES[i],
            map: ev.ap(None, None, area, m),
            map50: t50.map_or(-1.0, |t| ev.ap(None, Some(t), area, m)),
            map_per_threshold: ev.ap_per_threshold(area),
            detections: set.len(),
            detections_added: added,
            detections_removed: removed,
            detections_moved: moved,
        });
    }
    Ok(DiagnosisReport { stages })
}
