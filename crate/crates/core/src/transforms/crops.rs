use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{ImageSink, ImageSource};
use super::kinds::{pixel_region, ImageFailure};
use crate::datamodel::{BBox, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropMode {
    ObjectOnly,
    ObjectContext,
    ContextOnly,
    WholeImage,
}

impl CropMode {
    pub fn name(self) -> &'static str {
        match self {
            CropMode::ObjectOnly => "object_only",
            CropMode::ObjectContext => "object_context",
            CropMode::ContextOnly => "context_only",
            CropMode::WholeImage => "whole_image",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub factor: f64,
    pub mode: CropMode,
    #[serde(default = "default_fill")]
    pub fill: [u8; 3],
}

fn default_fill() -> [u8; 3] {
    [128, 128, 128]
}

impl CropSpec {
    pub fn new(factor: f64, mode: CropMode) -> Result<Self> {
        let s = CropSpec {
            factor,
            mode,
            fill: default_fill(),
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.factor.is_finite() && self.factor > 0.0) {
            return Err(Error::Config(format!("crop factor {} must be positive", self.factor)));
        }
        match self.mode {
            CropMode::ObjectOnly if self.factor > 1.0 => Err(Error::Config(format!(
                "object_only needs factor <= 1, got {}",
                self.factor
            ))),
            CropMode::ObjectContext if self.factor <= 1.0 => Err(Error::Config(format!(
                "object_context needs factor > 1, got {}",
                self.factor
            ))),
            _ => Ok(()),
        }
    }

    fn file_name(&self, annotation_id: u64) -> String {
        format!("{}_x{}/{annotation_id:012}.png", self.mode.name(), self.factor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropRow {
    pub crop_path: String,
    pub annotation_id: u64,
    pub category_id: u64,
    pub mode: CropMode,
    pub factor: f64,
}

#[derive(Debug, Default)]
pub struct CropExport {
    pub rows: Vec<CropRow>,
    /// Annotation ids whose crop vanished after clamping, per spec.
    pub skipped: Vec<(u64, CropMode, f64)>,
    pub failures: Vec<ImageFailure>,
}

impl CropExport {
    pub fn manifest_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Codec(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Pixels of the whole-pixel rectangle holding `b`, with its origin.
pub fn crop_pixels(img: &RgbImage, b: &BBox) -> Option<(RgbImage, u32, u32)> {
    let (x0, y0, x1, y1) = pixel_region(b, img.width(), img.height())?;
    let crop = image::imageops::crop_imm(img, x0, y0, x1 - x0, y1 - y0).to_image();
    Some((crop, x0, y0))
}

/// One crop per (non-crowd annotation, spec), written to `sink`.
pub fn export_context_crops(
    ds: &Dataset,
    source: &dyn ImageSource,
    specs: &[CropSpec],
    sink: &dyn ImageSink,
) -> Result<CropExport> {
    for s in specs {
        s.check()?;
    }
    type PerImage = Result<(Vec<CropRow>, Vec<(u64, CropMode, f64)>)>;
    let results: Vec<(u64, String, PerImage)> = ds
        .images()
        .par_iter()
        .map(|rec| {
            let r = source.load(&rec.file_name).and_then(|img| {
                let mut rows = Vec::new();
                let mut skipped = Vec::new();
                for ann in ds.annotations_in_image(rec.id).filter(|a| !a.iscrowd) {
                    for spec in specs {
                        match crop_one(&img, &ann.bbox, spec) {
                            Some(crop) => {
                                let crop_path = spec.file_name(ann.id);
                                sink.store(&crop_path, &crop)?;
                                rows.push(CropRow {
                                    crop_path,
                                    annotation_id: ann.id,
                                    category_id: ann.category_id,
                                    mode: spec.mode,
                                    factor: spec.factor,
                                });
                            }
                            None => skipped.push((ann.id, spec.mode, spec.factor)),
                        }
                    }
                }
                Ok((rows, skipped))
            });
            (rec.id, rec.file_name.clone(), r)
        })
        .collect();
    let mut out = CropExport::default();
    for (image_id, file_name, r) in results {
        match r {
            Ok((rows, skipped)) => {
                out.rows.extend(rows);
                out.skipped.extend(skipped);
            }
            Err(e) => {
                log::error!("image {image_id} ({file_name}): {e}");
                out.failures.push(ImageFailure {
                    image_id,
                    file_name,
                    message: e.to_string(),
                });
            }
        }
    }
    for (id, mode, factor) in &out.skipped {
        log::warn!("annotation {id}: {} crop at factor {factor} is empty", mode.name());
    }
    Ok(out)
}

fn crop_one(img: &RgbImage, b: &BBox, spec: &CropSpec) -> Option<RgbImage> {
    if spec.mode == CropMode::WholeImage {
        return Some(img.clone());
    }
    let region = b
        .scaled_about_center(spec.factor)
        .clamp_to(img.width() as f64, img.height() as f64)?;
    let (mut crop, x0, y0) = crop_pixels(img, &region)?;
    if spec.mode == CropMode::ContextOnly {
        if let Some((ox0, oy0, ox1, oy1)) = pixel_region(b, img.width(), img.height()) {
            let fill = Rgb(spec.fill);
            for y in oy0.max(y0)..oy1.min(y0 + crop.height()) {
                for x in ox0.max(x0)..ox1.min(x0 + crop.width()) {
                    crop.put_pixel(x - x0, y - y0, fill);
                }
            }
        }
    }
    Some(crop)
}
