use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::geometry::{rle_from_string, rle_to_string, RleMask};

/// Axis-aligned box in pixel coordinates, serialized as `[x, y, w, h]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }

    /// Scales width and height by `factor` about the box center.
    pub fn scaled_about_center(&self, factor: f64) -> BBox {
        let (cx, cy) = self.center();
        let w = self.w * factor;
        let h = self.h * factor;
        BBox::new(cx - 0.5 * w, cy - 0.5 * h, w, h)
    }

    /// Intersection with the image rectangle `[0, width] x [0, height]`.
    /// Returns `None` when nothing of positive area remains.
    pub fn clamp_to(&self, width: f64, height: f64) -> Option<BBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.right() <= width && self.bottom() <= height
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        match v.as_slice() {
            &[x, y, w, h] => Ok(BBox::new(x, y, w, h)),
            _ => Err(de::Error::invalid_length(v.len(), &"a box [x, y, w, h]")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: u64,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supercategory: Option<String>,
}

/// Segmentation in either COCO form: a list of flat `[x1, y1, x2, y2, ...]`
/// polygons, or a run-length encoded mask.
#[derive(Clone, Debug, PartialEq)]
pub enum SegMask {
    Polygons(Vec<Vec<f64>>),
    Rle(RleMask),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RleCounts {
    Compressed(String),
    Raw(Vec<u32>),
}

#[derive(Deserialize)]
struct RawRle {
    size: [u32; 2],
    counts: RleCounts,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSegMask {
    Polygons(Vec<Vec<f64>>),
    Rle(RawRle),
}

impl<'de> Deserialize<'de> for SegMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawSegMask::deserialize(d)? {
            RawSegMask::Polygons(p) => Ok(SegMask::Polygons(p)),
            RawSegMask::Rle(RawRle { size: [h, w], counts }) => {
                let rle = match counts {
                    RleCounts::Compressed(s) => rle_from_string(&s, w, h),
                    RleCounts::Raw(c) => RleMask::new(w, h, c),
                };
                rle.map(SegMask::Rle).map_err(de::Error::custom)
            }
        }
    }
}

impl Serialize for SegMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SegMask::Polygons(p) => p.serialize(s),
            SegMask::Rle(rle) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("size", &[rle.height(), rle.width()])?;
                m.serialize_entry("counts", &rle_to_string(rle))?;
                m.end()
            }
        }
    }
}

fn crowd_flag<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Int(i64),
    }
    Ok(match Flag::deserialize(d)? {
        Flag::Bool(b) => b,
        Flag::Int(i) => i != 0,
    })
}

fn crowd_to_int<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    /// Segment area when the source file carries one, otherwise `w * h`.
    pub area: f64,
    #[serde(
        default,
        deserialize_with = "crowd_flag",
        serialize_with = "crowd_to_int"
    )]
    pub iscrowd: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegMask>,
}

/// Annotation as it appears on disk; `area` may be missing.
#[derive(Deserialize)]
pub(crate) struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: BBox,
    #[serde(default)]
    area: Option<f64>,
    #[serde(default, deserialize_with = "crowd_flag")]
    iscrowd: bool,
    #[serde(default)]
    segmentation: Option<SegMask>,
}

impl From<RawAnnotation> for Annotation {
    fn from(r: RawAnnotation) -> Self {
        Annotation {
            id: r.id,
            image_id: r.image_id,
            category_id: r.category_id,
            area: r.area.unwrap_or_else(|| r.bbox.area()),
            bbox: r.bbox,
            iscrowd: r.iscrowd,
            segmentation: r.segmentation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detection {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegMask>,
}

#[derive(Deserialize)]
pub(crate) struct RawDetection {
    pub image_id: u64,
    pub category_id: u64,
    #[serde(default)]
    pub bbox: Option<BBox>,
    pub score: f64,
    #[serde(default)]
    pub segmentation: Option<SegMask>,
}

/// A classifier prediction for one ground-truth box (strategy 1, no sample
/// index) or for one sampled box around it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub annotation_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_index: Option<u32>,
    pub label: u64,
    pub score: f64,
}
