use std::collections::BTreeMap;

use serde::Serialize;

use crate::datamodel::{ClassificationSet, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// Fraction of scored annotations whose predicted label is the true one;
    /// −1 when nothing was scored.
    pub overall: f64,
    pub correct: usize,
    pub total: usize,
    /// Keyed by true category id.
    pub per_class: BTreeMap<u64, ClassAccuracy>,
}

impl AccuracyReport {
    pub fn per_class_accuracy(&self) -> BTreeMap<u64, f64> {
        self.per_class.iter().map(|(&k, v)| (k, v.accuracy)).collect()
    }
}

fn ratio(correct: usize, total: usize) -> f64 {
    if total == 0 {
        -1.0
    } else {
        correct as f64 / total as f64
    }
}

/// Top-1 accuracy of the strategy-1 predictions, over non-crowd annotations
/// that have one.
pub fn top1_accuracy(cls: &ClassificationSet, ds: &Dataset) -> AccuracyReport {
    let mut per_class: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for a in ds.annotations().iter().filter(|a| !a.iscrowd) {
        if let Some(r) = cls.on_target(a.id) {
            let e = per_class.entry(a.category_id).or_default();
            e.0 += usize::from(r.label == a.category_id);
            e.1 += 1;
        }
    }
    let correct = per_class.values().map(|v| v.0).sum();
    let total = per_class.values().map(|v| v.1).sum();
    AccuracyReport {
        overall: ratio(correct, total),
        correct,
        total,
        per_class: per_class
            .into_iter()
            .map(|(k, (c, t))| (k, ClassAccuracy { correct: c, total: t, accuracy: ratio(c, t) }))
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub category_id: u64,
    pub accuracy: f64,
    pub uap: f64,
}

/// Ordinary least squares fit of per-class UAP on per-class accuracy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub slope: f64,
    pub intercept: f64,
    /// Squared Pearson correlation; 0 when UAP is constant.
    pub r_squared: f64,
    pub points: Vec<CorrelationPoint>,
}

/// Classes present in both maps with defined (non-negative) values enter the
/// fit.
pub fn accuracy_uap_correlation(
    accuracy: &BTreeMap<u64, f64>,
    uap: &BTreeMap<u64, f64>,
) -> Result<CorrelationReport> {
    let points: Vec<CorrelationPoint> = accuracy
        .iter()
        .filter_map(|(&k, &acc)| {
            let &u = uap.get(&k)?;
            (acc >= 0.0 && u >= 0.0).then_some(CorrelationPoint { category_id: k, accuracy: acc, uap: u })
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::Argument(format!(
            "correlation needs at least 2 classes with defined accuracy and UAP, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.accuracy).sum::<f64>() / n;
    let my = if points.iter().all(|p| p.uap == points[0].uap) {
        points[0].uap
    } else {
        points.iter().map(|p| p.uap).sum::<f64>() / n
    };
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &points {
        let (dx, dy) = (p.accuracy - mx, p.uap - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Argument("per-class accuracy has zero variance".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 0.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(CorrelationReport {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points,
    })
}
