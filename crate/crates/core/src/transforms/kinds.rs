use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blur::{default_sigma, gaussian_blur};
use super::io::{ImageSink, ImageSource};
use crate::datamodel::{Annotation, BBox, Dataset, ImageRecord, SegMask};
use crate::error::{Error, Result};
use crate::geometry::{decode_mask, box_to_mask, encode_rle, Bitmask};
use crate::seed::rng_for;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    WhiteBg,
    NoiseBg {
        #[serde(default)]
        seed: u64,
    },
    ObjectsOnly,
    Crop,
    CropResized {
        #[serde(default = "default_min_dim")]
        min_dim: u32,
    },
    Blur {
        #[serde(default = "default_kernel")]
        kernel: u32,
        #[serde(default)]
        sigma: Option<f64>,
    },
    Vflip,
    Incongruent(IncongruentSpec),
}

fn default_min_dim() -> u32 {
    300
}

fn default_kernel() -> u32 {
    11
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Placement {
    Fixed { x: u32, y: u32 },
    Random,
}

/// Every object in `objects` pasted once onto every background.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncongruentSpec {
    pub objects: Vec<u64>,
    pub backgrounds: Vec<String>,
    pub placement: Placement,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn unit_scale() -> f64 {
    1.0
}

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::WhiteBg => "white_bg",
            TransformSpec::NoiseBg { .. } => "noise_bg",
            TransformSpec::ObjectsOnly => "objects_only",
            TransformSpec::Crop => "crop",
            TransformSpec::CropResized { .. } => "crop_resized",
            TransformSpec::Blur { .. } => "blur",
            TransformSpec::Vflip => "vflip",
            TransformSpec::Incongruent(_) => "incongruent",
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            TransformSpec::CropResized { min_dim } if *min_dim < 1 => {
                Err(Error::Config("min_dim must be at least 1".into()))
            }
            TransformSpec::Blur { kernel, sigma } => {
                if kernel % 2 == 0 {
                    return Err(Error::Config(format!("blur kernel {kernel} is not odd")));
                }
                match sigma {
                    Some(s) if !(s.is_finite() && *s > 0.0) => {
                        Err(Error::Config(format!("blur sigma {s} must be positive")))
                    }
                    _ => Ok(()),
                }
            }
            TransformSpec::Incongruent(p) => {
                if !(p.scale.is_finite() && p.scale > 0.0) {
                    return Err(Error::Config(format!("scale {} must be positive", p.scale)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Resolved parameters, including defaults the caller did not set.
    pub fn metadata(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("spec serializes");
        if let TransformSpec::Blur { kernel, sigma } = self {
            v["sigma"] = sigma.unwrap_or_else(|| default_sigma(*kernel)).into();
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageFailure {
    pub image_id: u64,
    pub file_name: String,
    pub message: String,
}

#[derive(Debug)]
pub struct TransformOutput {
    pub dataset: Dataset,
    pub failures: Vec<ImageFailure>,
    /// Annotations drawn from their box because they carry no segmentation.
    pub bbox_fallback: Vec<u64>,
    pub metadata: serde_json::Value,
}

struct Produced {
    images: Vec<ImageRecord>,
    annotations: Vec<Annotation>,
    fallback: Vec<u64>,
}

/// Applies `spec` to every image of `ds`. Images go to `sink`; the returned
/// dataset describes them. Failed images are reported and left out.
pub fn transform_dataset(
    ds: &Dataset,
    source: &dyn ImageSource,
    sink: &dyn ImageSink,
    spec: &TransformSpec,
) -> Result<TransformOutput> {
    spec.check()?;
    if let TransformSpec::Incongruent(p) = spec {
        return incongruent(ds, source, sink, p, spec.metadata());
    }
    let results: Vec<(ImageFailure, Result<Produced>)> = ds
        .images()
        .par_iter()
        .map(|img| {
            let r = source
                .load(&img.file_name)
                .and_then(|px| process_image(ds, img, px, sink, spec));
            let tag = ImageFailure {
                image_id: img.id,
                file_name: img.file_name.clone(),
                message: String::new(),
            };
            (tag, r)
        })
        .collect();
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut failures = Vec::new();
    let mut bbox_fallback = Vec::new();
    for (mut tag, r) in results {
        match r {
            Ok(p) => {
                images.extend(p.images);
                annotations.extend(p.annotations);
                bbox_fallback.extend(p.fallback);
            }
            Err(e) => {
                log::error!("image {} ({}): {e}", tag.image_id, tag.file_name);
                tag.message = e.to_string();
                failures.push(tag);
            }
        }
    }
    if !bbox_fallback.is_empty() {
        log::warn!(
            "{} annotations have no segmentation; their boxes were used as masks",
            bbox_fallback.len()
        );
    }
    bbox_fallback.sort_unstable();
    Ok(TransformOutput {
        dataset: Dataset::new(images, ds.categories().to_vec(), annotations),
        failures,
        bbox_fallback,
        metadata: spec.metadata(),
    })
}

fn process_image(
    ds: &Dataset,
    img: &ImageRecord,
    px: RgbImage,
    sink: &dyn ImageSink,
    spec: &TransformSpec,
) -> Result<Produced> {
    if px.dimensions() != (img.width, img.height) {
        return Err(Error::Image {
            name: img.file_name.clone(),
            message: format!(
                "pixels are {}x{}, annotation says {}x{}",
                px.width(),
                px.height(),
                img.width,
                img.height
            ),
        });
    }
    let anns: Vec<&Annotation> = ds.annotations_in_image(img.id).collect();
    let mut out = Produced {
        images: Vec::new(),
        annotations: Vec::new(),
        fallback: Vec::new(),
    };
    match spec {
        TransformSpec::WhiteBg | TransformSpec::NoiseBg { .. } => {
            for ann in anns {
                let mask = object_mask(ann, img, &mut out.fallback)?;
                let mut canvas = match spec {
                    TransformSpec::NoiseBg { seed } => noise_image(img.width, img.height, *seed, ann.id),
                    _ => RgbImage::from_pixel(img.width, img.height, WHITE),
                };
                copy_masked(&px, &mut canvas, &mask);
                let rec = ImageRecord {
                    id: ann.id,
                    file_name: per_object_name(ann.id),
                    width: img.width,
                    height: img.height,
                };
                sink.store(&rec.file_name, &canvas)?;
                out.images.push(rec);
                out.annotations.push(Annotation {
                    image_id: ann.id,
                    ..ann.clone()
                });
            }
        }
        TransformSpec::ObjectsOnly => {
            let mut union = Bitmask::new(img.width, img.height);
            for ann in &anns {
                union.union_with(&object_mask(ann, img, &mut out.fallback)?);
            }
            let mut canvas = RgbImage::from_pixel(img.width, img.height, WHITE);
            copy_masked(&px, &mut canvas, &union);
            sink.store(&img.file_name, &canvas)?;
            out.images.push(img.clone());
            out.annotations.extend(anns.into_iter().cloned());
        }
        TransformSpec::Crop | TransformSpec::CropResized { .. } => {
            for ann in anns {
                let (x0, y0, x1, y1) = pixel_region(&ann.bbox, img.width, img.height).ok_or_else(|| {
                    Error::Image {
                        name: img.file_name.clone(),
                        message: format!("annotation {} has an empty crop", ann.id),
                    }
                })?;
                let crop = imageops::crop_imm(&px, x0, y0, x1 - x0, y1 - y0).to_image();
                let moved = translate_annotation(ann, x0 as f64, y0 as f64, img, crop.dimensions())?;
                let (pixels, annotation) = match spec {
                    TransformSpec::CropResized { min_dim } => resize_crop(&crop, moved, *min_dim)?,
                    _ => (crop, moved),
                };
                let rec = ImageRecord {
                    id: ann.id,
                    file_name: per_object_name(ann.id),
                    width: pixels.width(),
                    height: pixels.height(),
                };
                sink.store(&rec.file_name, &pixels)?;
                out.images.push(rec);
                out.annotations.push(Annotation {
                    image_id: ann.id,
                    ..annotation
                });
            }
        }
        TransformSpec::Blur { kernel, sigma } => {
            let s = sigma.unwrap_or_else(|| default_sigma(*kernel));
            sink.store(&img.file_name, &gaussian_blur(&px, *kernel, s))?;
            out.images.push(img.clone());
            out.annotations.extend(anns.into_iter().cloned());
        }
        TransformSpec::Vflip => {
            sink.store(&img.file_name, &imageops::flip_vertical(&px))?;
            out.images.push(img.clone());
            for ann in anns {
                out.annotations.push(vflip_annotation(ann, img.height));
            }
        }
        TransformSpec::Incongruent(_) => unreachable!("handled separately"),
    }
    Ok(out)
}

fn per_object_name(annotation_id: u64) -> String {
    format!("{annotation_id:012}.png")
}

/// Decoded segmentation, or the box when there is none.
fn object_mask(ann: &Annotation, img: &ImageRecord, fallback: &mut Vec<u64>) -> Result<Bitmask> {
    match &ann.segmentation {
        Some(seg) => decode_mask(seg, img.width, img.height),
        None => {
            fallback.push(ann.id);
            Ok(box_to_mask(&ann.bbox, img.width, img.height))
        }
    }
}

fn copy_masked(from: &RgbImage, to: &mut RgbImage, mask: &Bitmask) {
    for (x, y, p) in to.enumerate_pixels_mut() {
        if mask.get(x, y) {
            *p = *from.get_pixel(x, y);
        }
    }
}

/// Uniform per-channel noise seeded by (seed, output image id).
pub fn noise_image(width: u32, height: u32, seed: u64, image_id: u64) -> RgbImage {
    let mut buf = vec![0u8; width as usize * height as usize * 3];
    rng_for(seed, image_id).fill_bytes(&mut buf);
    RgbImage::from_raw(width, height, buf).expect("buffer has the image size")
}

/// Smallest whole-pixel rectangle `(x0, y0, x1, y1)` holding the box,
/// clipped to the image.
pub fn pixel_region(b: &BBox, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
    let x0 = b.x.floor().max(0.0);
    let y0 = b.y.floor().max(0.0);
    let x1 = b.right().ceil().min(width as f64);
    let y1 = b.bottom().ceil().min(height as f64);
    (x1 > x0 && y1 > y0).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
}

fn translate_annotation(
    ann: &Annotation,
    dx: f64,
    dy: f64,
    img: &ImageRecord,
    (cw, ch): (u32, u32),
) -> Result<Annotation> {
    let bbox = BBox::new(ann.bbox.x - dx, ann.bbox.y - dy, ann.bbox.w, ann.bbox.h)
        .clamp_to(cw as f64, ch as f64)
        .unwrap_or(ann.bbox);
    let segmentation = match &ann.segmentation {
        None => None,
        Some(SegMask::Polygons(polys)) => Some(SegMask::Polygons(
            polys
                .iter()
                .map(|p| {
                    p.chunks(2)
                        .flat_map(|xy| [xy[0] - dx, xy[1] - dy])
                        .collect()
                })
                .collect(),
        )),
        Some(seg @ SegMask::Rle(_)) => {
            let full = decode_mask(seg, img.width, img.height)?;
            let mut part = Bitmask::new(cw, ch);
            for y in 0..ch {
                for x in 0..cw {
                    part.set(x, y, full.get(x + dx as u32, y + dy as u32));
                }
            }
            Some(SegMask::Rle(encode_rle(&part)))
        }
    };
    Ok(Annotation {
        bbox,
        segmentation,
        ..ann.clone()
    })
}

/// Output size with the short side exactly `min_dim`; the long side is
/// rounded up so the uniformly scaled content always fits.
pub fn resized_dims(width: u32, height: u32, min_dim: u32) -> (u32, u32, f64) {
    let s = min_dim as f64 / width.min(height) as f64;
    let long = |v: u32| ((v as f64 * s) - 1e-9).ceil().max(1.0) as u32;
    if width <= height {
        (min_dim, long(height), s)
    } else {
        (long(width), min_dim, s)
    }
}

fn resize_crop(crop: &RgbImage, ann: Annotation, min_dim: u32) -> Result<(RgbImage, Annotation)> {
    let (w, h, s) = resized_dims(crop.width(), crop.height(), min_dim);
    let pixels = imageops::resize(crop, w, h, FilterType::Triangle);
    let b = &ann.bbox;
    let segmentation = match &ann.segmentation {
        None => None,
        Some(SegMask::Polygons(polys)) => Some(SegMask::Polygons(
            polys.iter().map(|p| p.iter().map(|v| v * s).collect()).collect(),
        )),
        Some(seg @ SegMask::Rle(_)) => {
            let m = decode_mask(seg, crop.width(), crop.height())?;
            Some(SegMask::Rle(encode_rle(&resize_mask(&m, w, h))))
        }
    };
    let ann = Annotation {
        bbox: BBox::new(b.x * s, b.y * s, b.w * s, b.h * s),
        area: ann.area * s * s,
        segmentation,
        ..ann
    };
    Ok((pixels, ann))
}

/// Nearest-neighbor resampling at pixel centers.
fn resize_mask(m: &Bitmask, width: u32, height: u32) -> Bitmask {
    let sx = m.width() as f64 / width as f64;
    let sy = m.height() as f64 / height as f64;
    let mut out = Bitmask::new(width, height);
    for y in 0..height {
        let src_y = (((y as f64 + 0.5) * sy) as u32).min(m.height() - 1);
        for x in 0..width {
            let src_x = (((x as f64 + 0.5) * sx) as u32).min(m.width() - 1);
            if m.get(src_x, src_y) {
                out.set(x, y, true);
            }
        }
    }
    out
}

const FIXED_SCALE: f64 = 1e9;

fn to_fixed(v: f64) -> i128 {
    (v * FIXED_SCALE).round() as i128
}

fn from_fixed(v: i128) -> f64 {
    v as f64 / FIXED_SCALE
}

/// `H - y - h` in fixed point (nine decimals), so flipping twice restores
/// inputs written with at most nine decimals bit for bit.
pub fn vflip_box(b: &BBox, height: u32) -> BBox {
    let y = to_fixed(height as f64) - to_fixed(b.y) - to_fixed(b.h);
    BBox::new(b.x, from_fixed(y), b.w, b.h)
}

fn vflip_annotation(ann: &Annotation, height: u32) -> Annotation {
    let hf = to_fixed(height as f64);
    let segmentation = ann.segmentation.as_ref().map(|seg| match seg {
        SegMask::Polygons(polys) => SegMask::Polygons(
            polys
                .iter()
                .map(|p| {
                    p.chunks(2)
                        .flat_map(|xy| [xy[0], from_fixed(hf - to_fixed(xy[1]))])
                        .collect()
                })
                .collect(),
        ),
        SegMask::Rle(rle) => SegMask::Rle(encode_rle(
            &crate::geometry::decode_rle(rle).flip_vertical(),
        )),
    });
    Annotation {
        bbox: vflip_box(&ann.bbox, height),
        segmentation,
        ..ann.clone()
    }
}

struct Patch {
    pixels: RgbImage,
    mask: Bitmask,
    /// Box position relative to the patch origin.
    offset: (f64, f64),
    scale: f64,
    source: Annotation,
}

fn load_patch(
    ds: &Dataset,
    source: &dyn ImageSource,
    ann_id: u64,
    scale: f64,
    fallback: &mut Vec<u64>,
) -> Result<Patch> {
    let ann = ds
        .annotation(ann_id)
        .ok_or_else(|| Error::validation("unknown_annotation", vec![ann_id]))?;
    let img = ds.image(ann.image_id).expect("validated dataset");
    let px = source.load(&img.file_name)?;
    let (x0, y0, x1, y1) = pixel_region(&ann.bbox, img.width, img.height)
        .ok_or_else(|| Error::validation("empty_object", vec![ann_id]))?;
    let full = object_mask(ann, img, fallback)?;
    let (cw, ch) = (x1 - x0, y1 - y0);
    let mut mask = Bitmask::new(cw, ch);
    for y in 0..ch {
        for x in 0..cw {
            mask.set(x, y, full.get(x0 + x, y0 + y));
        }
    }
    let mut pixels = imageops::crop_imm(&px, x0, y0, cw, ch).to_image();
    if scale != 1.0 {
        let w = ((cw as f64 * scale).round() as u32).max(1);
        let h = ((ch as f64 * scale).round() as u32).max(1);
        pixels = imageops::resize(&pixels, w, h, FilterType::Nearest);
        mask = resize_mask(&mask, w, h);
    }
    Ok(Patch {
        pixels,
        mask,
        offset: (ann.bbox.x - x0 as f64, ann.bbox.y - y0 as f64),
        scale,
        source: ann.clone(),
    })
}

fn incongruent(
    ds: &Dataset,
    source: &dyn ImageSource,
    sink: &dyn ImageSink,
    spec: &IncongruentSpec,
    metadata: serde_json::Value,
) -> Result<TransformOutput> {
    let mut fallback = Vec::new();
    let patches = spec
        .objects
        .iter()
        .map(|&id| load_patch(ds, source, id, spec.scale, &mut fallback))
        .collect::<Result<Vec<_>>>()?;
    let n = patches.len() as u64;
    type Pasted = Result<Vec<(ImageRecord, Annotation)>>;
    let results: Vec<(usize, Pasted)> = spec
        .backgrounds
        .par_iter()
        .enumerate()
        .map(|(bi, name)| {
            let r = source.load(name).and_then(|bg| {
                patches
                    .iter()
                    .enumerate()
                    .map(|(oi, patch)| {
                        let id = bi as u64 * n + oi as u64 + 1;
                        paste(&bg, patch, id, &spec.placement, spec.seed, sink)
                    })
                    .collect()
            });
            (bi, r)
        })
        .collect();
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut failures = Vec::new();
    for (bi, r) in results {
        match r {
            Ok(pairs) => {
                for (img, ann) in pairs {
                    images.push(img);
                    annotations.push(ann);
                }
            }
            Err(e) => {
                log::error!("background {}: {e}", spec.backgrounds[bi]);
                failures.push(ImageFailure {
                    image_id: bi as u64,
                    file_name: spec.backgrounds[bi].clone(),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(TransformOutput {
        dataset: Dataset::new(images, ds.categories().to_vec(), annotations),
        failures,
        bbox_fallback: fallback,
        metadata,
    })
}

fn paste(
    bg: &RgbImage,
    patch: &Patch,
    id: u64,
    placement: &Placement,
    seed: u64,
    sink: &dyn ImageSink,
) -> Result<(ImageRecord, Annotation)> {
    let (pw, ph) = patch.pixels.dimensions();
    let (bw, bh) = bg.dimensions();
    if pw > bw || ph > bh {
        return Err(Error::Argument(format!(
            "object {} ({pw}x{ph}) does not fit a {bw}x{bh} background",
            patch.source.id
        )));
    }
    let (px, py) = match placement {
        Placement::Fixed { x, y } => {
            if x + pw > bw || y + ph > bh {
                return Err(Error::Argument(format!(
                    "object {} placed at ({x}, {y}) leaves the {bw}x{bh} background",
                    patch.source.id
                )));
            }
            (*x, *y)
        }
        Placement::Random => {
            let mut rng = rng_for(seed, id);
            (rng.gen_range(0..=bw - pw), rng.gen_range(0..=bh - ph))
        }
    };
    let mut canvas = bg.clone();
    let mut mask = Bitmask::new(bw, bh);
    for y in 0..ph {
        for x in 0..pw {
            if patch.mask.get(x, y) {
                canvas.put_pixel(px + x, py + y, *patch.pixels.get_pixel(x, y));
                mask.set(px + x, py + y, true);
            }
        }
    }
    let b = &patch.source.bbox;
    let scale = patch.scale;
    let bbox = BBox::new(
        px as f64 + patch.offset.0 * scale,
        py as f64 + patch.offset.1 * scale,
        b.w * scale,
        b.h * scale,
    );
    let rec = ImageRecord {
        id,
        file_name: format!("incongruent_{id:06}.png"),
        width: bw,
        height: bh,
    };
    sink.store(&rec.file_name, &canvas)?;
    let area = mask.count() as f64;
    let ann = Annotation {
        id,
        image_id: id,
        category_id: patch.source.category_id,
        bbox,
        area: if area > 0.0 { area } else { bbox.area() },
        iscrowd: false,
        segmentation: Some(SegMask::Rle(encode_rle(&mask))),
    };
    Ok((rec, ann))
}
