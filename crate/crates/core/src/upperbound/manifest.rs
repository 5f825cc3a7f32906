use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{BBox, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{sample_boxes, SamplerSpec};

/// One sampled box around a ground-truth annotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub annotation_id: u64,
    pub sample_index: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default)]
    pub crop_path: String,
}

impl SampleRow {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x, self.y, self.w, self.h)
    }
}

/// CSV `annotation_id,sample_index,x,y,w,h,crop_path`, rows ordered by
/// (annotation id, sample index).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleManifest {
    pub rows: Vec<SampleRow>,
}

impl SampleManifest {
    pub fn new(mut rows: Vec<SampleRow>) -> Self {
        rows.sort_by_key(|r| (r.annotation_id, r.sample_index));
        SampleManifest { rows }
    }

    pub fn contains(&self, annotation_id: u64, sample_index: u32) -> bool {
        self.rows
            .binary_search_by_key(&(annotation_id, sample_index), |r| (r.annotation_id, r.sample_index))
            .is_ok()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<SampleRow>, _>>()?;
        Ok(SampleManifest::new(rows))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["annotation_id", "sample_index", "x", "y", "w", "h", "crop_path"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Samples `spec.k` boxes around every non-crowd annotation. Each annotation
/// draws from its own stream keyed by its id.
pub fn sample_manifest(ds: &Dataset, spec: &SamplerSpec) -> Result<SampleManifest> {
    use rayon::prelude::*;
    spec.check()?;
    let targets: Vec<_> = ds.annotations().iter().filter(|a| !a.iscrowd).collect();
    let per_ann = targets
        .par_iter()
        .map(|a| {
            let boxes = sample_boxes(&a.bbox, &spec.for_key(a.id))?;
            Ok(boxes
                .into_iter()
                .enumerate()
                .map(|(i, b)| SampleRow {
                    annotation_id: a.id,
                    sample_index: i as u32,
                    x: b.x,
                    y: b.y,
                    w: b.w,
                    h: b.h,
                    crop_path: String::new(),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleManifest::new(per_ann.into_iter().flatten().collect()))
}
