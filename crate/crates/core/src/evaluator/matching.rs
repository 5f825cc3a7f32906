use serde::Serialize;

/// Ground-truth attributes that steer matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchTarget {
    /// Matches to this target count neither as hit nor as false positive.
    pub ignore: bool,
    /// Crowd regions may absorb any number of detections; their overlap is
    /// measured as intersection over detection area.
    pub crowd: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchResult {
    /// Per detection (in the order given): index of the matched target.
    pub det_target: Vec<Option<usize>>,
    /// Overlap with the matched target, 0 when unmatched.
    pub det_iou: Vec<f64>,
    /// Detection matched an ignored target.
    pub det_ignored: Vec<bool>,
    /// Per target: index of the detection that took it (first one for crowds).
    pub target_det: Vec<Option<usize>>,
}

impl MatchResult {
    pub fn is_true_positive(&self, d: usize) -> bool {
        self.det_target[d].is_some() && !self.det_ignored[d]
    }
}

/// Overlaps between detections (rows) and targets (columns).
pub type IouMatrix = Vec<Vec<f64>>;

/// Greedy matching of detections, already sorted by descending score, to
/// targets.
///
/// Each detection takes the unassigned target with the highest overlap, as
/// long as that overlap reaches `thresh`. Non-ignored targets are preferred:
/// once a detection holds a candidate that counts, ignored targets are not
/// considered. On exactly equal overlaps the later target wins. Crowd
/// targets never become "assigned".
pub fn match_greedy(ious: &IouMatrix, targets: &[MatchTarget], thresh: f64) -> MatchResult {
    let nd = ious.len();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by_key(|&g| targets[g].ignore);

    let mut res = MatchResult {
        det_target: vec![None; nd],
        det_iou: vec![0.0; nd],
        det_ignored: vec![false; nd],
        target_det: vec![None; targets.len()],
    };
    let floor = thresh.min(1.0 - 1e-10);
    for (d, row) in ious.iter().enumerate() {
        let mut best = floor;
        let mut m: Option<usize> = None;
        for &g in &order {
            if res.target_det[g].is_some() && !targets[g].crowd {
                continue;
            }
            if let Some(mg) = m {
                if !targets[mg].ignore && targets[g].ignore {
                    break;
                }
            }
            if row[g] < best {
                continue;
            }
            best = row[g];
            m = Some(g);
        }
        if let Some(g) = m {
            res.det_target[d] = Some(g);
            res.det_iou[d] = row[g];
            res.det_ignored[d] = targets[g].ignore;
            if res.target_det[g].is_none() {
                res.target_det[g] = Some(d);
            }
        }
    }
    res
}
