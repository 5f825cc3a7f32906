use serde::Serialize;

/// Precision/recall along a score-sorted detection list for one class at one
/// IOU threshold. Ignored detections are left out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub n_gt: usize,
}

impl PrCurve {
    /// `hits[i]` says whether the i-th counted detection is a true positive.
    pub fn from_hits(hits: impl IntoIterator<Item = bool>, n_gt: usize) -> Self {
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut recall = Vec::new();
        let mut precision = Vec::new();
        for hit in hits {
            if hit {
                tp += 1;
            } else {
                fp += 1;
            }
            recall.push(if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 });
            precision.push(tp as f64 / (tp + fp) as f64);
        }
        PrCurve { recall, precision, n_gt }
    }

    /// Final recall, 0 with no detections, −1 with no ground truth.
    pub fn max_recall(&self) -> f64 {
        if self.n_gt == 0 {
            -1.0
        } else {
            self.recall.last().copied().unwrap_or(0.0)
        }
    }

    /// Precision made non-increasing by taking the running maximum from the
    /// right, sampled at each recall point: the first position whose recall
    /// reaches the point, or 0 when recall never does.
    pub fn interpolated(&self, recall_points: &[f64]) -> Vec<f64> {
        let mut pr = self.precision.clone();
        for i in (1..pr.len()).rev() {
            if pr[i] > pr[i - 1] {
                pr[i - 1] = pr[i];
            }
        }
        recall_points
            .iter()
            .map(|&r| {
                let idx = self.recall.partition_point(|&x| x < r);
                pr.get(idx).copied().unwrap_or(0.0)
            })
            .collect()
    }
}

/// Mean interpolated precision over `recall_points`; −1 when the class has no
/// ground truth.
pub fn average_precision(curve: &PrCurve, recall_points: &[f64]) -> f64 {
    if curve.n_gt == 0 {
        return -1.0;
    }
    let q = curve.interpolated(recall_points);
    q.iter().sum::<f64>() / q.len() as f64
}

/// Mean over IOU thresholds of the recall reached under a detection cap.
/// Thresholds without ground truth (−1) are skipped; −1 when none remain.
pub fn average_recall(per_threshold_recall: &[f64]) -> f64 {
    mean_defined(per_threshold_recall.iter().copied())
}

/// Mean of the values > −1, or −1 when there are none.
pub fn mean_defined(values: impl IntoIterator<Item = f64>) -> f64 {
    // shifted by the first value, so equal inputs give that value exactly
    let mut pivot = None;
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.into_iter().filter(|&v| v > -1.0) {
        let p = *pivot.get_or_insert(v);
        sum += v - p;
        n += 1;
    }
    match pivot {
        None => -1.0,
        Some(p) => p + sum / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::linspace;

    fn points() -> Vec<f64> {
        linspace(0.0, 1.0, 101)
    }

    #[test]
    fn single_hit_is_perfect() {
        let c = PrCurve::from_hits([true], 1);
        assert_eq!(average_precision(&c, &points()), 1.0);
    }

    #[test]
    fn false_positive_first_halves_precision() {
        // precision is 0.5 at the only reached recall (1.0)
        let c = PrCurve::from_hits([false, true], 1);
        assert_eq!(average_precision(&c, &points()), 0.5);
    }

    #[test]
    fn no_detections_and_no_ground_truth() {
        assert_eq!(average_precision(&PrCurve::from_hits([], 3), &points()), 0.0);
        assert_eq!(average_precision(&PrCurve::from_hits([false], 0), &points()), -1.0);
        assert_eq!(PrCurve::from_hits([], 0).max_recall(), -1.0);
    }

    #[test]
    fn interpolation_is_monotone() {
        let c = PrCurve::from_hits([true, false, false, true, true, false, true], 5);
        let q = c.interpolated(&points());
        assert!(q.windows(2).all(|w| w[0] >= w[1]));
        assert!(c.recall.windows(2).all(|w| w[0] <= w[1]));
        // recall never exceeds 0.8
        assert_eq!(q[81], 0.0);
    }

    #[test]
    fn recall_average_skips_sentinels() {
        assert_eq!(average_recall(&[1.0, 0.5, -1.0]), 0.75);
        assert_eq!(average_recall(&[-1.0]), -1.0);
    }
}
