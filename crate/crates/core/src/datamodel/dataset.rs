use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{Annotation, Category, ImageRecord, RawAnnotation};
use super::{parse_error, read_file};
use crate::error::{Error, Result};

/// Ground truth: images, categories and annotations, each sorted by id.
///
/// Lookups by image and by (image, category) go through indexes built at
/// construction; they always agree with a linear scan over `annotations()`.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    images: Vec<ImageRecord>,
    categories: Vec<Category>,
    annotations: Vec<Annotation>,
    image_index: HashMap<u64, usize>,
    category_index: HashMap<u64, usize>,
    annotation_index: HashMap<u64, usize>,
    by_image: BTreeMap<u64, Vec<usize>>,
    by_image_category: BTreeMap<(u64, u64), Vec<usize>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
            && self.categories == other.categories
            && self.annotations == other.annotations
    }
}

#[derive(Serialize)]
struct DatasetRef<'a> {
    images: &'a [ImageRecord],
    annotations: &'a [Annotation],
    categories: &'a [Category],
}

#[derive(Deserialize)]
struct RawDataset {
    images: Vec<ImageRecord>,
    annotations: Vec<RawAnnotation>,
    categories: Vec<Category>,
}

impl Dataset {
    /// Builds a dataset without validating it. Records are sorted by id
    /// (stable, so duplicate ids keep their input order).
    pub fn new(
        mut images: Vec<ImageRecord>,
        mut categories: Vec<Category>,
        mut annotations: Vec<Annotation>,
    ) -> Self {
        images.sort_by_key(|i| i.id);
        categories.sort_by_key(|c| c.id);
        annotations.sort_by_key(|a| a.id);
        let mut ds = Dataset {
            images,
            categories,
            annotations,
            ..Default::default()
        };
        ds.reindex();
        ds
    }

    fn reindex(&mut self) {
        fn first_index<T>(items: &[T], id: impl Fn(&T) -> u64) -> HashMap<u64, usize> {
            let mut m = HashMap::with_capacity(items.len());
            for (i, it) in items.iter().enumerate() {
                m.entry(id(it)).or_insert(i);
            }
            m
        }
        self.image_index = first_index(&self.images, |i| i.id);
        self.category_index = first_index(&self.categories, |c| c.id);
        self.annotation_index = first_index(&self.annotations, |a| a.id);
        self.by_image.clear();
        self.by_image_category.clear();
        for (i, a) in self.annotations.iter().enumerate() {
            self.by_image.entry(a.image_id).or_default().push(i);
            self.by_image_category
                .entry((a.image_id, a.category_id))
                .or_default()
                .push(i);
        }
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.image_index.get(&id).map(|&i| &self.images[i])
    }

    pub fn category(&self, id: u64) -> Option<&Category> {
        self.category_index.get(&id).map(|&i| &self.categories[i])
    }

    pub fn annotation(&self, id: u64) -> Option<&Annotation> {
        self.annotation_index.get(&id).map(|&i| &self.annotations[i])
    }

    pub fn image_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.images.iter().map(|i| i.id)
    }

    pub fn category_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.categories.iter().map(|c| c.id)
    }

    pub fn annotations_in_image(&self, image_id: u64) -> impl Iterator<Item = &Annotation> {
        self.by_image
            .get(&image_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.annotations[i])
    }

    pub fn annotations_for(&self, image_id: u64, category_id: u64) -> impl Iterator<Item = &Annotation> {
        self.by_image_category
            .get(&(image_id, category_id))
            .into_iter()
            .flatten()
            .map(|&i| &self.annotations[i])
    }

    /// (image, category) pairs that carry at least one annotation, in key order.
    pub fn image_category_pairs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.by_image_category.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DatasetRef {
            images: &self.images,
            annotations: &self.annotations,
            categories: &self.categories,
        })
        .expect("dataset serialization is infallible")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Parses COCO ground truth without validating it.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let raw: RawDataset =
            serde_json::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        Ok(Dataset::new(
            raw.images,
            raw.categories,
            raw.annotations.into_iter().map(Annotation::from).collect(),
        ))
    }

    /// Clamps every box to its image bounds and returns the ids of the
    /// annotations that changed. Boxes that would vanish are left alone
    /// (`validate` reports them).
    pub fn clamp_boxes(&mut self) -> Vec<u64> {
        let mut changed = Vec::new();
        for a in &mut self.annotations {
            let Some(img) = self.image_index.get(&a.image_id).map(|&i| &self.images[i]) else {
                continue;
            };
            let (w, h) = (img.width as f64, img.height as f64);
            if a.bbox.within(w, h) {
                continue;
            }
            if let Some(c) = a.bbox.clamp_to(w, h) {
                a.bbox = c;
                changed.push(a.id);
            }
        }
        changed
    }
}

/// Loads and validates COCO ground truth. Boxes extending past the image are
/// clamped with a warning; every other violation is an error.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut ds = Dataset::parse(&text, path)?;
    validate(&ds).into_result()?;
    let clamped = ds.clamp_boxes();
    if !clamped.is_empty() {
        log::warn!(
            "{}: clamped {} boxes to image bounds (first ids: {:?})",
            path.display(),
            clamped.len(),
            &clamped[..clamped.len().min(10)]
        );
    }
    log::info!(
        "{}: {} images, {} categories, {} annotations",
        path.display(),
        ds.images.len(),
        ds.categories.len(),
        ds.annotations.len()
    );
    Ok(ds)
}

pub mod rules {
    pub const DUPLICATE_IMAGE_ID: &str = "duplicate_image_id";
    pub const DUPLICATE_CATEGORY_ID: &str = "duplicate_category_id";
    pub const DUPLICATE_ANNOTATION_ID: &str = "duplicate_annotation_id";
    pub const INVALID_IMAGE_SIZE: &str = "invalid_image_size";
    pub const EMPTY_CATEGORY_NAME: &str = "empty_category_name";
    pub const UNKNOWN_IMAGE: &str = "unknown_image";
    pub const UNKNOWN_CATEGORY: &str = "unknown_category";
    pub const NONPOSITIVE_BOX: &str = "nonpositive_box";
    pub const NONPOSITIVE_AREA: &str = "nonpositive_area";
    pub const BOX_OUTSIDE_IMAGE: &str = "box_outside_image";
    pub const BOX_CLAMPED: &str = "box_clamped";

    pub const VIOLATIONS: [&str; 10] = [
        DUPLICATE_IMAGE_ID,
        DUPLICATE_CATEGORY_ID,
        DUPLICATE_ANNOTATION_ID,
        INVALID_IMAGE_SIZE,
        EMPTY_CATEGORY_NAME,
        UNKNOWN_IMAGE,
        UNKNOWN_CATEGORY,
        NONPOSITIVE_BOX,
        NONPOSITIVE_AREA,
        BOX_OUTSIDE_IMAGE,
    ];
    pub const WARNINGS: [&str; 1] = [BOX_CLAMPED];
}

/// Per-rule offending ids. Every rule is always present, so a clean report
/// lists each rule with an empty id list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: BTreeMap<String, Vec<u64>>,
    pub warnings: BTreeMap<String, Vec<u64>>,
}

impl ValidationReport {
    fn empty() -> Self {
        ValidationReport {
            violations: rules::VIOLATIONS.iter().map(|r| (r.to_string(), Vec::new())).collect(),
            warnings: rules::WARNINGS.iter().map(|r| (r.to_string(), Vec::new())).collect(),
        }
    }

    fn flag(&mut self, rule: &str, id: u64) {
        if let Some(v) = self.violations.get_mut(rule) {
            v.push(id);
        } else {
            self.warnings.entry(rule.to_string()).or_default().push(id);
        }
    }

    pub fn count(&self, rule: &str) -> usize {
        self.violations
            .get(rule)
            .or_else(|| self.warnings.get(rule))
            .map_or(0, Vec::len)
    }

    pub fn total_violations(&self) -> usize {
        self.violations.values().map(Vec::len).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.total_violations() == 0
    }

    /// Converts the first failing rule into an error.
    pub fn into_result(self) -> Result<()> {
        match self.violations.into_iter().find(|(_, ids)| !ids.is_empty()) {
            None => Ok(()),
            Some((rule, ids)) => Err(Error::validation(rule, ids)),
        }
    }
}

pub fn validate(ds: &Dataset) -> ValidationReport {
    use rules::*;
    let mut r = ValidationReport::empty();

    let mut seen = HashSet::new();
    for img in &ds.images {
        if !seen.insert(img.id) {
            r.flag(DUPLICATE_IMAGE_ID, img.id);
        }
        if img.width == 0 || img.height == 0 {
            r.flag(INVALID_IMAGE_SIZE, img.id);
        }
    }
    seen.clear();
    for c in &ds.categories {
        if !seen.insert(c.id) {
            r.flag(DUPLICATE_CATEGORY_ID, c.id);
        }
        if c.name.trim().is_empty() {
            r.flag(EMPTY_CATEGORY_NAME, c.id);
        }
    }
    seen.clear();
    for a in &ds.annotations {
        if !seen.insert(a.id) {
            r.flag(DUPLICATE_ANNOTATION_ID, a.id);
        }
        if ds.category(a.category_id).is_none() {
            r.flag(UNKNOWN_CATEGORY, a.id);
        }
        if !(a.area.is_finite() && a.area > 0.0) {
            r.flag(NONPOSITIVE_AREA, a.id);
        }
        if !a.bbox.is_valid() {
            r.flag(NONPOSITIVE_BOX, a.id);
            continue;
        }
        match ds.image(a.image_id) {
            None => r.flag(UNKNOWN_IMAGE, a.id),
            Some(img) => {
                let (w, h) = (img.width as f64, img.height as f64);
                if !a.bbox.within(w, h) {
                    if a.bbox.clamp_to(w, h).is_some() {
                        r.flag(BOX_CLAMPED, a.id);
                    } else {
                        r.flag(BOX_OUTSIDE_IMAGE, a.id);
                    }
                }
            }
        }
    }
    r
}
