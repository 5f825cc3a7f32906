use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKernel {
    Box,
    Mask,
}

/// Object-area interval, inclusive at both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl AreaRange {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        AreaRange { name: name.to_string(), lo, hi }
    }

    pub fn contains(&self, area: f64) -> bool {
        area >= self.lo && area <= self.hi
    }

    pub fn all() -> Self {
        AreaRange::new("all", 0.0, 1e10)
    }

    pub fn small() -> Self {
        AreaRange::new("small", 0.0, 32.0 * 32.0)
    }

    pub fn medium() -> Self {
        AreaRange::new("medium", 32.0 * 32.0, 96.0 * 96.0)
    }

    pub fn large() -> Self {
        AreaRange::new("large", 96.0 * 96.0, 1e10)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "all" => Some(Self::all()),
            "small" => Some(Self::small()),
            "medium" => Some(Self::medium()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }
}

/// `n` evenly spaced values from `start` to `stop`, computed as
/// `start + i * step` with the last value pinned to `stop`. The exact float
/// values matter: recall thresholds are compared against `tp / n_gt`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * step + start).collect();
    v[n - 1] = stop;
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub recall_points: Vec<f64>,
    pub area_ranges: Vec<AreaRange>,
    /// Per-image, per-category detection caps, ascending. Exactly three:
    /// they feed the AR@first / AR@second / AR@third summary slots.
    pub max_dets: Vec<usize>,
    pub kernel: IouKernel,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: linspace(0.5, 0.95, 10),
            recall_points: linspace(0.0, 1.0, 101),
            area_ranges: vec![
                AreaRange::all(),
                AreaRange::small(),
                AreaRange::medium(),
                AreaRange::large(),
            ],
            max_dets: vec![1, 10, 100],
            kernel: IouKernel::Box,
        }
    }
}

impl EvalConfig {
    pub fn with_kernel(kernel: IouKernel) -> Self {
        EvalConfig { kernel, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        let t = &self.iou_thresholds;
        if t.is_empty() || t.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Config("IOU thresholds must be non-empty and lie in (0, 1]".into()));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("IOU thresholds must be strictly increasing".into()));
        }
        let r = &self.recall_points;
        if r.is_empty() || r.iter().any(|&x| !(0.0..=1.0).contains(&x)) || r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("recall points must be strictly increasing in [0, 1]".into()));
        }
        if self.max_dets.len() != 3 || self.max_dets.windows(2).any(|w| w[0] > w[1]) || self.max_dets[0] == 0 {
            return Err(Error::Config("max_dets must be three positive ascending caps".into()));
        }
        if self.area_ranges.is_empty() || self.area_ranges.iter().any(|a| a.lo.partial_cmp(&a.hi).is_none_or(|o| o.is_gt())) {
            return Err(Error::Config("area ranges must be non-empty with lo <= hi".into()));
        }
        Ok(())
    }

    pub fn largest_max_det(&self) -> usize {
        self.max_dets.iter().copied().max().unwrap_or(100)
    }

    /// Index of the threshold equal to `t` (within 1e-12).
    pub fn threshold_index(&self, t: f64) -> Option<usize> {
        self.iou_thresholds.iter().position(|&x| (x - t).abs() < 1e-12)
    }

    pub fn area_index(&self, name: &str) -> Option<usize> {
        self.area_ranges.iter().position(|a| a.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_matches_numpy() {
        // values printed by numpy.linspace
        let t = linspace(0.5, 0.95, 10);
        assert_eq!(t[8], 0.8999999999999999);
        assert_eq!(t[5], 0.75);
        assert_eq!(t[9], 0.95);
        let r = linspace(0.0, 1.0, 101);
        assert_eq!(r.len(), 101);
        assert_eq!(r[29], 0.29);
        assert_eq!(r[100], 1.0);
    }

    #[test]
    fn default_config_is_valid() {
        let c = EvalConfig::default();
        c.check().unwrap();
        assert_eq!(c.threshold_index(0.5), Some(0));
        assert_eq!(c.threshold_index(0.75), Some(5));
        assert_eq!(c.area_index("medium"), Some(2));
    }

    #[test]
    fn rejects_bad_thresholds() {
        let mut c = EvalConfig {
            iou_thresholds: vec![0.5, 0.5],
            ..Default::default()
        };
        assert!(c.check().is_err());
        c.iou_thresholds = vec![0.0];
        assert!(c.check().is_err());
        c.iou_thresholds = vec![0.5];
        c.max_dets = vec![100];
        assert!(c.check().is_err());
    }

    #[test]
    fn area_bounds_are_inclusive() {
        let s = AreaRange::small();
        assert!(s.contains(0.0) && s.contains(1024.0) && !s.contains(1024.5));
        assert!(AreaRange::medium().contains(1024.0));
    }
}
