use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::config::{EvalConfig, IouKernel};
use super::curve::{mean_defined, PrCurve};
use super::matching::{match_greedy, IouMatrix, MatchTarget};
use crate::datamodel::{Annotation, Dataset, Detection, DetectionSet, ImageRecord};
use crate::error::{Error, Result};
use crate::geometry::{iof_box, iof_mask, iou_box, iou_mask, segmentation_to_rle, RleMask};

/// One detection's fate at one (area range, threshold).
#[derive(Clone, Copy, Debug)]
struct Outcome {
    score: f64,
    input_index: usize,
    /// Rank within its (image, category) list; compared against max_dets.
    rank: usize,
    hit: bool,
    ignored: bool,
}

/// Accumulated results for one category.
#[derive(Clone, Debug)]
struct CategoryEval {
    /// [area][maxdet][threshold][recall point]
    precision: Vec<f64>,
    /// [area][maxdet][threshold]
    recall: Vec<f64>,
    /// Curves at the largest cap, per [area][threshold].
    curves: Vec<PrCurve>,
}

/// Full evaluation results: interpolated precision and recall for every
/// (category, area range, detection cap, IOU threshold).
#[derive(Clone, Debug)]
pub struct Evaluation {
    config: EvalConfig,
    category_ids: Vec<u64>,
    category_names: Vec<String>,
    per_category: Vec<CategoryEval>,
}

struct Prepared {
    areas: Vec<f64>,
    rles: Option<Vec<RleMask>>,
}

fn gt_regions(gts: &[&Annotation], img: &ImageRecord, kernel: IouKernel) -> Result<Prepared> {
    let areas = gts.iter().map(|g| g.area).collect();
    let rles = match kernel {
        IouKernel::Box => None,
        IouKernel::Mask => Some(
            gts.iter()
                .map(|g| {
                    let seg = g.segmentation.as_ref().ok_or_else(|| {
                        Error::Config(format!("mask kernel: annotation {} has no segmentation", g.id))
                    })?;
                    segmentation_to_rle(seg, img.width, img.height)
                })
                .collect::<Result<_>>()?,
        ),
    };
    Ok(Prepared { areas, rles })
}

fn det_regions(dets: &[(usize, &Detection)], img: &ImageRecord, kernel: IouKernel) -> Result<Prepared> {
    match kernel {
        IouKernel::Box => Ok(Prepared {
            areas: dets.iter().map(|(_, d)| d.bbox.area()).collect(),
            rles: None,
        }),
        IouKernel::Mask => {
            let rles: Vec<RleMask> = dets
                .iter()
                .map(|(i, d)| {
                    let seg = d.segmentation.as_ref().ok_or_else(|| {
                        Error::Config(format!("mask kernel: detection {i} has no segmentation"))
                    })?;
                    segmentation_to_rle(seg, img.width, img.height)
                })
                .collect::<Result<_>>()?;
            Ok(Prepared {
                areas: rles.iter().map(|r| r.area() as f64).collect(),
                rles: Some(rles),
            })
        }
    }
}

fn overlap_matrix(
    dets: &[(usize, &Detection)],
    det_p: &Prepared,
    gts: &[&Annotation],
    gt_p: &Prepared,
) -> Result<IouMatrix> {
    dets.iter()
        .enumerate()
        .map(|(di, (_, d))| {
            gts.iter()
                .enumerate()
                .map(|(gi, g)| match (&det_p.rles, &gt_p.rles) {
                    (Some(dr), Some(gr)) => {
                        if g.iscrowd {
                            iof_mask(&dr[di], &gr[gi])
                        } else {
                            iou_mask(&dr[di], &gr[gi])
                        }
                    }
                    _ => Ok(if g.iscrowd {
                        iof_box(&d.bbox, &g.bbox)
                    } else {
                        iou_box(&d.bbox, &g.bbox)
                    }),
                })
                .collect()
        })
        .collect()
}

/// Sorts an (image, category) detection list by descending score; ties keep
/// input order.
pub(crate) fn sorted_by_score(set: &DetectionSet, image_id: u64, category_id: u64) -> Vec<(usize, &Detection)> {
    let mut v: Vec<(usize, &Detection)> = set
        .indices_for(image_id, category_id)
        .iter()
        .map(|&i| (i, &set.detections()[i]))
        .collect();
    v.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));
    v
}

fn evaluate_category(
    ds: &Dataset,
    dets: &DetectionSet,
    cfg: &EvalConfig,
    category_id: u64,
    image_ids: &BTreeSet<u64>,
) -> Result<CategoryEval> {
    let (na, nt) = (cfg.area_ranges.len(), cfg.iou_thresholds.len());
    let cap = cfg.largest_max_det();
    // outcomes[a][t], n_gt[a]
    let mut outcomes: Vec<Vec<Vec<Outcome>>> = vec![vec![Vec::new(); nt]; na];
    let mut n_gt = vec![0usize; na];

    for &image_id in image_ids {
        let img = ds
            .image(image_id)
            .ok_or_else(|| Error::validation("detection on unknown image", vec![image_id]))?;
        let gts: Vec<&Annotation> = ds.annotations_for(image_id, category_id).collect();
        let mut ds_dets = sorted_by_score(dets, image_id, category_id);
        ds_dets.truncate(cap);
        let gt_p = gt_regions(&gts, img, cfg.kernel)?;
        let det_p = det_regions(&ds_dets, img, cfg.kernel)?;
        let ious = overlap_matrix(&ds_dets, &det_p, &gts, &gt_p)?;

        for (a, range) in cfg.area_ranges.iter().enumerate() {
            let targets: Vec<MatchTarget> = gts
                .iter()
                .zip(&gt_p.areas)
                .map(|(g, &area)| MatchTarget {
                    ignore: g.iscrowd || !range.contains(area),
                    crowd: g.iscrowd,
                })
                .collect();
            n_gt[a] += targets.iter().filter(|t| !t.ignore).count();
            for (t, &thresh) in cfg.iou_thresholds.iter().enumerate() {
                let m = match_greedy(&ious, &targets, thresh);
                for (rank, &(input_index, d)) in ds_dets.iter().enumerate() {
                    let matched = m.det_target[rank].is_some();
                    let ignored = m.det_ignored[rank] || (!matched && !range.contains(det_p.areas[rank]));
                    outcomes[a][t].push(Outcome {
                        score: d.score,
                        input_index,
                        rank,
                        hit: matched && !ignored,
                        ignored,
                    });
                }
            }
        }
    }

    let nm = cfg.max_dets.len();
    let nr = cfg.recall_points.len();
    let mut precision = vec![-1.0; na * nm * nt * nr];
    let mut recall = vec![-1.0; na * nm * nt];
    let mut curves = Vec::with_capacity(na * nt);
    for a in 0..na {
        for t in 0..nt {
            let list = &mut outcomes[a][t];
            list.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.input_index.cmp(&y.input_index)));
            for (mi, &max_det) in cfg.max_dets.iter().enumerate() {
                let curve = PrCurve::from_hits(
                    list.iter().filter(|o| o.rank < max_det && !o.ignored).map(|o| o.hit),
                    n_gt[a],
                );
                if n_gt[a] > 0 {
                    let base = ((a * nm + mi) * nt + t) * nr;
                    precision[base..base + nr].copy_from_slice(&curve.interpolated(&cfg.recall_points));
                    recall[(a * nm + mi) * nt + t] = curve.max_recall();
                }
                if mi == nm - 1 {
                    curves.push(curve);
                }
            }
        }
    }
    Ok(CategoryEval { precision, recall, curves })
}

/// COCO-style evaluation of `dets` against `ds`.
///
/// Categories are evaluated independently (in parallel on the current rayon
/// pool); results are reduced in category-id order, so the outcome does not
/// depend on the number of threads.
pub fn evaluate(ds: &Dataset, dets: &DetectionSet, cfg: &EvalConfig) -> Result<Evaluation> {
    cfg.check()?;
    let mut images_by_category: BTreeMap<u64, BTreeSet<u64>> =
        ds.category_ids().map(|c| (c, BTreeSet::new())).collect();
    for (img, cat) in ds.image_category_pairs().chain(dets.image_category_pairs()) {
        if let Some(set) = images_by_category.get_mut(&cat) {
            set.insert(img);
        }
    }
    let cats: Vec<(u64, &BTreeSet<u64>)> = images_by_category.iter().map(|(&c, s)| (c, s)).collect();
    let per_category = cats
        .par_iter()
        .map(|&(cat, imgs)| evaluate_category(ds, dets, cfg, cat, imgs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        config: cfg.clone(),
        category_ids: cats.iter().map(|(c, _)| *c).collect(),
        category_names: cats
            .iter()
            .map(|(c, _)| ds.category(*c).map(|x| x.name.clone()).unwrap_or_default())
            .collect(),
        per_category,
    })
}

impl Evaluation {
    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn category_ids(&self) -> &[u64] {
        &self.category_ids
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    fn dims(&self) -> (usize, usize, usize) {
        (
            self.config.max_dets.len(),
            self.config.iou_thresholds.len(),
            self.config.recall_points.len(),
        )
    }

    /// Interpolated precision at every recall point (all −1 without ground truth).
    pub fn class_precision(&self, k: usize, area: usize, max_det: usize, threshold: usize) -> &[f64] {
        let (nm, nt, nr) = self.dims();
        let base = ((area * nm + max_det) * nt + threshold) * nr;
        &self.per_category[k].precision[base..base + nr]
    }

    pub fn class_recall(&self, k: usize, area: usize, max_det: usize, threshold: usize) -> f64 {
        let (nm, nt, _) = self.dims();
        self.per_category[k].recall[(area * nm + max_det) * nt + threshold]
    }

    /// Raw precision/recall curve at the largest detection cap.
    pub fn class_curve(&self, k: usize, area: usize, threshold: usize) -> &PrCurve {
        &self.per_category[k].curves[area * self.config.iou_thresholds.len() + threshold]
    }

    fn thresholds(&self, threshold: Option<usize>) -> Vec<usize> {
        match threshold {
            Some(t) => vec![t],
            None => (0..self.config.iou_thresholds.len()).collect(),
        }
    }

    fn classes(&self, k: Option<usize>) -> Vec<usize> {
        match k {
            Some(k) => vec![k],
            None => (0..self.category_ids.len()).collect(),
        }
    }

    /// Mean interpolated precision over the selected thresholds, recall points
    /// and classes, skipping undefined entries; −1 if nothing is defined.
    /// Over the whole sweep this is the mean of the per-threshold values
    /// (every threshold holds the same number of defined entries).
    pub fn ap(&self, class: Option<usize>, threshold: Option<usize>, area: usize, max_det: usize) -> f64 {
        if threshold.is_none() {
            return mean_defined(
                (0..self.config.iou_thresholds.len()).map(|t| self.ap(class, Some(t), area, max_det)),
            );
        }
        let ts = self.thresholds(threshold);
        let ks = self.classes(class);
        let nr = self.config.recall_points.len();
        let mut vals = Vec::with_capacity(ts.len() * nr * ks.len());
        for &t in &ts {
            for r in 0..nr {
                for &k in &ks {
                    vals.push(self.class_precision(k, area, max_det, t)[r]);
                }
            }
        }
        mean_defined(vals)
    }

    pub fn ar(&self, class: Option<usize>, threshold: Option<usize>, area: usize, max_det: usize) -> f64 {
        if threshold.is_none() {
            return mean_defined(
                (0..self.config.iou_thresholds.len()).map(|t| self.ar(class, Some(t), area, max_det)),
            );
        }
        let ts = self.thresholds(threshold);
        let ks = self.classes(class);
        let mut vals = Vec::with_capacity(ts.len() * ks.len());
        for &t in &ts {
            for &k in &ks {
                vals.push(self.class_recall(k, area, max_det, t));
            }
        }
        mean_defined(vals)
    }

    fn named(&self, area: &str) -> Option<usize> {
        self.config.area_index(area)
    }

    fn ap_named(&self, class: Option<usize>, iou: Option<f64>, area: &str) -> f64 {
        let m = self.config.max_dets.len() - 1;
        let t = match iou {
            None => None,
            Some(v) => match self.config.threshold_index(v) {
                Some(t) => Some(t),
                None => return -1.0,
            },
        };
        self.named(area).map_or(-1.0, |a| self.ap(class, t, a, m))
    }

    fn ar_named(&self, area: &str, max_det: usize) -> f64 {
        self.named(area).map_or(-1.0, |a| self.ar(None, None, a, max_det))
    }

    /// The twelve summary metrics.
    pub fn metrics(&self) -> Metrics {
        let last = self.config.max_dets.len() - 1;
        Metrics {
            ap: self.ap_named(None, None, "all"),
            ap50: self.ap_named(None, Some(0.5), "all"),
            ap75: self.ap_named(None, Some(0.75), "all"),
            ap_small: self.ap_named(None, None, "small"),
            ap_medium: self.ap_named(None, None, "medium"),
            ap_large: self.ap_named(None, None, "large"),
            ar1: self.ar_named("all", 0),
            ar10: self.ar_named("all", 1),
            ar100: self.ar_named("all", last),
            ar_small: self.ar_named("small", last),
            ar_medium: self.ar_named("medium", last),
            ar_large: self.ar_named("large", last),
        }
    }

    /// AP over all classes at each IOU threshold, for one area range (largest cap).
    pub fn ap_per_threshold(&self, area: usize) -> Vec<f64> {
        let m = self.config.max_dets.len() - 1;
        (0..self.config.iou_thresholds.len())
            .map(|t| self.ap(None, Some(t), area, m))
            .collect()
    }

    pub fn per_class(&self) -> Vec<ClassMetrics> {
        (0..self.category_ids.len())
            .map(|k| ClassMetrics {
                category_id: self.category_ids[k],
                name: self.category_names[k].clone(),
                ap: self.ap_named(Some(k), None, "all"),
                ap50: self.ap_named(Some(k), Some(0.5), "all"),
                ap75: self.ap_named(Some(k), Some(0.75), "all"),
                ap_small: self.ap_named(Some(k), None, "small"),
                ap_medium: self.ap_named(Some(k), None, "medium"),
                ap_large: self.ap_named(Some(k), None, "large"),
            })
            .collect()
    }

    /// Class-mean interpolated precision at each (threshold, recall point),
    /// area `all` and the largest cap. Classes without ground truth are skipped.
    pub fn pr_curve(&self) -> Vec<PrPoint> {
        let Some(a) = self.named("all") else {
            return Vec::new();
        };
        let m = self.config.max_dets.len() - 1;
        let mut out = Vec::new();
        for (t, &threshold) in self.config.iou_thresholds.iter().enumerate() {
            for (r, &recall) in self.config.recall_points.iter().enumerate() {
                let precision = mean_defined(
                    (0..self.category_ids.len()).map(|k| self.class_precision(k, a, m, t)[r]),
                );
                out.push(PrPoint { threshold, recall, precision });
            }
        }
        out
    }

    pub fn summary(&self) -> EvalSummary {
        EvalSummary {
            metrics: self.metrics(),
            per_class: self.per_class(),
            pr_curve: self.pr_curve(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_small: f64,
    pub ap_medium: f64,
    pub ap_large: f64,
    pub ar1: f64,
    pub ar10: f64,
    pub ar100: f64,
    pub ar_small: f64,
    pub ar_medium: f64,
    pub ar_large: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 12] = [
        "ap", "ap50", "ap75", "ap_small", "ap_medium", "ap_large", "ar1", "ar10", "ar100",
        "ar_small", "ar_medium", "ar_large",
    ];

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.ap, self.ap50, self.ap75, self.ap_small, self.ap_medium, self.ap_large,
            self.ar1, self.ar10, self.ar100, self.ar_small, self.ar_medium, self.ar_large,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ClassMetrics {
    pub category_id: u64,
    pub name: String,
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_small: f64,
    pub ap_medium: f64,
    pub ap_large: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EvalSummary {
    pub metrics: Metrics,
    pub per_class: Vec<ClassMetrics>,
    pub pr_curve: Vec<PrPoint>,
}
