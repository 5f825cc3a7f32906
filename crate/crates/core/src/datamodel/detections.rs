use std::collections::BTreeMap;
use std::path::Path;

use super::types::{Detection, RawDetection, SegMask};
use super::{parse_error, read_file, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{decode_mask, mask_to_box, rle_to_box};

/// Scored detections in input order, indexed by (image, category).
///
/// Input order is kept because it breaks score ties during matching.
#[derive(Clone, Debug, Default)]
pub struct DetectionSet {
    detections: Vec<Detection>,
    by_image_category: BTreeMap<(u64, u64), Vec<usize>>,
}

impl PartialEq for DetectionSet {
    fn eq(&self, other: &Self) -> bool {
        self.detections == other.detections
    }
}

impl FromIterator<Detection> for DetectionSet {
    fn from_iter<I: IntoIterator<Item = Detection>>(iter: I) -> Self {
        DetectionSet::new(iter.into_iter().collect())
    }
}

impl DetectionSet {
    pub fn new(detections: Vec<Detection>) -> Self {
        let mut by_image_category: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
        for (i, d) in detections.iter().enumerate() {
            by_image_category
                .entry((d.image_id, d.category_id))
                .or_default()
                .push(i);
        }
        DetectionSet {
            detections,
            by_image_category,
        }
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn into_vec(self) -> Vec<Detection> {
        self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Indices into `detections()` for one (image, category) pair, in input order.
    pub fn indices_for(&self, image_id: u64, category_id: u64) -> &[usize] {
        self.by_image_category
            .get(&(image_id, category_id))
            .map_or(&[], Vec::as_slice)
    }

    pub fn detections_for(&self, image_id: u64, category_id: u64) -> impl Iterator<Item = &Detection> {
        self.indices_for(image_id, category_id)
            .iter()
            .map(|&i| &self.detections[i])
    }

    pub fn image_category_pairs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.by_image_category.keys().copied()
    }

    pub fn concat(&self, other: &DetectionSet) -> DetectionSet {
        DetectionSet::new(
            self.detections
                .iter()
                .chain(other.detections.iter())
                .cloned()
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.detections).expect("detection serialization is infallible")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Parses a COCO results array and validates it against `ds`.
    pub fn parse(text: &str, origin: &Path, ds: &Dataset) -> Result<Self> {
        let raw: Vec<RawDetection> =
            serde_json::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        let mut out = Vec::with_capacity(raw.len());
        let mut bad_score = Vec::new();
        let mut bad_image = Vec::new();
        let mut bad_category = Vec::new();
        let mut bad_box = Vec::new();
        let mut bad_mask = Vec::new();
        for (i, r) in raw.into_iter().enumerate() {
            let idx = i as u64;
            if !(0.0..=1.0).contains(&r.score) {
                bad_score.push(idx);
            }
            if ds.category(r.category_id).is_none() {
                bad_category.push(idx);
            }
            let Some(img) = ds.image(r.image_id) else {
                bad_image.push(idx);
                continue;
            };
            if let Some(SegMask::Rle(rle)) = &r.segmentation {
                if rle.width() != img.width || rle.height() != img.height {
                    bad_mask.push(idx);
                    continue;
                }
            }
            let bbox = match (&r.bbox, &r.segmentation) {
                (Some(b), _) => Some(*b),
                (None, Some(SegMask::Rle(rle))) => rle_to_box(rle),
                (None, Some(seg)) => decode_mask(seg, img.width, img.height)
                    .ok()
                    .and_then(|m| mask_to_box(&m).ok()),
                (None, None) => None,
            };
            match bbox {
                Some(b) if b.is_valid() => out.push(Detection {
                    image_id: r.image_id,
                    category_id: r.category_id,
                    bbox: b,
                    score: r.score,
                    segmentation: r.segmentation,
                }),
                _ => bad_box.push(idx),
            }
        }
        for (rule, ids) in [
            ("detection score outside [0, 1] (record indices)", bad_score),
            ("detection with unknown image_id (record indices)", bad_image),
            ("detection with unknown category_id (record indices)", bad_category),
            ("detection mask size differs from its image (record indices)", bad_mask),
            ("detection box missing or not positive (record indices)", bad_box),
        ] {
            if !ids.is_empty() {
                return Err(Error::validation(rule, ids));
            }
        }
        Ok(DetectionSet::new(out))
    }
}

pub fn load_detections(path: impl AsRef<Path>, ds: &Dataset) -> Result<DetectionSet> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let set = DetectionSet::parse(&text, path, ds)?;
    log::info!("{}: {} detections", path.display(), set.len());
    Ok(set)
}

/// Number of records, as reported next to the ground-truth count when
/// comparing how many boxes a model emits on a transformed dataset.
pub fn count_detections(dets: &DetectionSet) -> usize {
    dets.len()
}
