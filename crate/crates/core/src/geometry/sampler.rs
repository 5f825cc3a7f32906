//! Sampling same-size boxes whose IOU with a target box is at least `gamma`.
//!
//! A box of the target's width `U` and height `V`, shifted so that it
//! overlaps the target on a fraction `alpha` of the width and `beta` of the
//! height, has IOU `alpha*beta / (2 - alpha*beta)`. IOU equals `gamma` exactly
//! when `alpha*beta = 2*gamma / (1 + gamma)`. The shifted box can overlap the
//! target from any of its four corners, which gives four curves of top-left
//! positions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::datamodel::BBox;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

const PRODUCT_TOLERANCE: f64 = 1e-12;

/// `2*gamma / (1 + gamma)`: the overlap-area fraction at which IOU = `gamma`.
pub fn constraint_threshold(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Argument(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(2.0 * gamma / (1.0 + gamma))
}

/// The target corner the sampled box overlaps from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CornerBranch {
    /// Sampled box sits up and to the left of the target.
    P,
    /// Up and to the right.
    Q,
    /// Down and to the right.
    R,
    /// Down and to the left.
    S,
}

impl CornerBranch {
    pub const ALL: [CornerBranch; 4] = [CornerBranch::P, CornerBranch::Q, CornerBranch::R, CornerBranch::S];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// `alpha*beta` equals the threshold: IOU is exactly gamma.
    Boundary,
    /// `alpha*beta` anywhere in [threshold, 1]: IOU anywhere in [gamma, 1].
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub gamma: f64,
    pub k: usize,
    pub mode: SampleMode,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(gamma: f64, k: usize, mode: SampleMode, seed: u64) -> Result<Self> {
        let spec = SamplerSpec { gamma, k, mode, seed };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        constraint_threshold(self.gamma)?;
        if self.k == 0 {
            return Err(Error::Argument("sample count k must be at least 1".into()));
        }
        Ok(())
    }

    /// Same spec with its seed mixed with a record key, so each annotation
    /// gets an independent stream.
    pub fn for_key(&self, key: u64) -> SamplerSpec {
        SamplerSpec {
            seed: derive_seed(self.seed, key),
            ..*self
        }
    }
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            gamma: 0.5,
            k: 4,
            mode: SampleMode::Boundary,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub alpha: f64,
    pub beta: f64,
    pub branch: CornerBranch,
    pub target: BBox,
}

impl SampleParams {
    /// IOU a box built from these parameters has with the target.
    pub fn expected_iou(&self) -> f64 {
        let p = self.alpha * self.beta;
        p / (2.0 - p)
    }
}

/// Top-left corner of the sampled box, then the box itself (same size as the
/// target).
pub fn corner_box(params: &SampleParams, gamma: f64) -> Result<BBox> {
    let threshold = constraint_threshold(gamma)?;
    let SampleParams { alpha, beta, branch, target } = *params;
    let in_unit = |v: f64| v > 0.0 && v <= 1.0;
    if !in_unit(alpha) || !in_unit(beta) {
        return Err(Error::Argument(format!(
            "overlap fractions must lie in (0, 1], got alpha={alpha}, beta={beta}"
        )));
    }
    if alpha * beta < threshold * (1.0 - PRODUCT_TOLERANCE) {
        return Err(Error::Argument(format!(
            "alpha*beta = {} is below 2*gamma/(1+gamma) = {threshold}",
            alpha * beta
        )));
    }
    let (u, v) = (target.w, target.h);
    let dx = (1.0 - alpha) * u;
    let dy = (1.0 - beta) * v;
    let (x, y) = match branch {
        CornerBranch::P => (target.x - dx, target.y - dy),
        CornerBranch::Q => (target.x + dx, target.y - dy),
        CornerBranch::R => (target.x + dx, target.y + dy),
        CornerBranch::S => (target.x - dx, target.y + dy),
    };
    Ok(BBox::new(x, y, u, v))
}

/// Draws `spec.k` parameter sets: branch uniform over the four corners,
/// `alpha` uniform in [threshold, 1], then `beta = threshold / alpha`
/// (boundary) or uniform in [threshold / alpha, 1] (interior).
pub fn sample_params(target: &BBox, spec: &SamplerSpec) -> Result<Vec<SampleParams>> {
    spec.check()?;
    let threshold = constraint_threshold(spec.gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.k);
    for _ in 0..spec.k {
        let branch = CornerBranch::ALL[rng.gen_range(0..4)];
        let (alpha, beta) = if threshold >= 1.0 {
            (1.0, 1.0)
        } else {
            let alpha: f64 = rng.gen_range(threshold..=1.0);
            let lo = (threshold / alpha).min(1.0);
            let beta = match spec.mode {
                SampleMode::Boundary => lo,
                SampleMode::Interior => rng.gen_range(lo..=1.0),
            };
            (alpha, beta)
        };
        out.push(SampleParams { alpha, beta, branch, target: *target });
    }
    Ok(out)
}

/// `spec.k` boxes of the target's size with IOU >= gamma (exactly gamma in
/// boundary mode). Boxes are not clamped to any image.
pub fn sample_boxes(target: &BBox, spec: &SamplerSpec) -> Result<Vec<BBox>> {
    sample_params(target, spec)?
        .iter()
        .map(|p| corner_box(p, spec.gamma))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou_box;
    use proptest::prelude::*;

    #[test]
    fn threshold_values() {
        assert!((constraint_threshold(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(constraint_threshold(1.0).unwrap(), 1.0);
        assert!((constraint_threshold(0.75).unwrap() - 6.0 / 7.0).abs() < 1e-15);
        assert!(constraint_threshold(0.0).is_err());
        assert!(constraint_threshold(1.5).is_err());
        assert!(constraint_threshold(f64::NAN).is_err());
    }

    #[test]
    fn threshold_075_cross_checked_by_sampling() {
        let t = constraint_threshold(0.75).unwrap();
        let target = BBox::new(10.0, 20.0, 30.0, 40.0);
        let p = SampleParams { alpha: t, beta: 1.0, branch: CornerBranch::Q, target };
        assert!((iou_box(&corner_box(&p, 0.75).unwrap(), &target) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn full_overlap_is_target_on_every_branch() {
        let target = BBox::new(3.5, 7.25, 12.0, 9.0);
        for branch in CornerBranch::ALL {
            let p = SampleParams { alpha: 1.0, beta: 1.0, branch, target };
            assert_eq!(corner_box(&p, 0.5).unwrap(), target);
        }
    }

    #[test]
    fn branch_p_offset() {
        let target = BBox::new(0.0, 0.0, 6.0, 9.0);
        let p = SampleParams { alpha: 1.0, beta: 2.0 / 3.0, branch: CornerBranch::P, target };
        let b = corner_box(&p, 0.5).unwrap();
        assert_eq!(b.x, 0.0);
        assert!((b.y + 3.0).abs() < 1e-12);
        // overlap 2UV/3, union 4UV/3
        assert!((iou_box(&b, &target) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn branch_r_symmetric_fractions() {
        let target = BBox::new(100.0, 50.0, 40.0, 25.0);
        let a = (2.0f64 / 3.0).sqrt();
        let p = SampleParams { alpha: a, beta: a, branch: CornerBranch::R, target };
        assert!((iou_box(&corner_box(&p, 0.5).unwrap(), &target) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_product_below_threshold() {
        let target = BBox::new(0.0, 0.0, 10.0, 10.0);
        let p = SampleParams { alpha: 0.7, beta: 0.7, branch: CornerBranch::S, target };
        assert!(corner_box(&p, 0.5).is_err());
        let p = SampleParams { alpha: 1.2, beta: 0.9, branch: CornerBranch::S, target };
        assert!(corner_box(&p, 0.5).is_err());
    }

    #[test]
    fn gamma_one_returns_copies() {
        let target = BBox::new(1.0, 2.0, 3.0, 4.0);
        let spec = SamplerSpec::new(1.0, 5, SampleMode::Interior, 9).unwrap();
        assert_eq!(sample_boxes(&target, &spec).unwrap(), vec![target; 5]);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let target = BBox::new(12.0, 30.0, 50.0, 20.0);
        let spec = SamplerSpec::new(0.5, 4, SampleMode::Boundary, 42).unwrap();
        let a = sample_boxes(&target, &spec).unwrap();
        let b = sample_boxes(&target, &spec).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        for bx in &a {
            let iou = iou_box(bx, &target);
            assert!((0.5 - 1e-9..=1.0).contains(&iou));
        }
        let other = sample_boxes(&target, &spec.for_key(1)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn all_branches_get_used() {
        let target = BBox::new(0.0, 0.0, 10.0, 10.0);
        let spec = SamplerSpec::new(0.3, 400, SampleMode::Interior, 3).unwrap();
        let params = sample_params(&target, &spec).unwrap();
        for b in CornerBranch::ALL {
            assert!(params.iter().any(|p| p.branch == b));
        }
    }

    proptest! {
        #[test]
        fn boundary_corner_boxes_hit_gamma(
            gamma in 0.01f64..1.0,
            u in 0.0f64..1.0,
            branch in 0usize..4,
            x in -500.0f64..500.0,
            y in -500.0f64..500.0,
            w in 0.5f64..400.0,
            h in 0.5f64..400.0,
        ) {
            let t = constraint_threshold(gamma).unwrap();
            let alpha = t + (1.0 - t) * u;
            let target = BBox::new(x, y, w, h);
            let p = SampleParams { alpha, beta: t / alpha, branch: CornerBranch::ALL[branch], target };
            let b = corner_box(&p, gamma).unwrap();
            prop_assert_eq!((b.w, b.h), (w, h));
            prop_assert!((iou_box(&b, &target) - gamma).abs() < 1e-9);
        }

        #[test]
        fn interior_samples_clear_gamma(gamma in 0.05f64..1.0, seed in any::<u64>()) {
            let target = BBox::new(5.0, 5.0, 33.0, 17.0);
            let spec = SamplerSpec::new(gamma, 16, SampleMode::Interior, seed).unwrap();
            for b in sample_boxes(&target, &spec).unwrap() {
                prop_assert!(iou_box(&b, &target) >= gamma - 1e-9);
            }
        }
    }
}
