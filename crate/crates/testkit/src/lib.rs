//! Test support: a brute-force COCO-style evaluator written without any of
//! the library's code, and a seeded generator of small random scenes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Gt {
    pub id: u64,
    pub image: u64,
    pub class: u64,
    /// x, y, w, h
    pub bbox: [f64; 4],
    pub area: f64,
    pub crowd: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Det {
    pub image: u64,
    pub class: u64,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    /// (id, width, height)
    pub images: Vec<(u64, u32, u32)>,
    pub classes: Vec<u64>,
    pub gts: Vec<Gt>,
    pub dets: Vec<Det>,
}

impl Scene {
    /// Ground truth as COCO JSON.
    pub fn gt_json(&self) -> String {
        let images: Vec<String> = self
            .images
            .iter()
            .map(|(id, w, h)| format!(r#"{{"id":{id},"file_name":"{id}.png","width":{w},"height":{h}}}"#))
            .collect();
        let cats: Vec<String> = self
            .classes
            .iter()
            .map(|c| format!(r#"{{"id":{c},"name":"class{c}"}}"#))
            .collect();
        let anns: Vec<String> = self
            .gts
            .iter()
            .map(|g| {
                format!(
                    r#"{{"id":{},"image_id":{},"category_id":{},"bbox":[{:?},{:?},{:?},{:?}],"area":{:?},"iscrowd":{}}}"#,
                    g.id, g.image, g.class, g.bbox[0], g.bbox[1], g.bbox[2], g.bbox[3], g.area,
                    u8::from(g.crowd)
                )
            })
            .collect();
        format!(
            r#"{{"images":[{}],"annotations":[{}],"categories":[{}]}}"#,
            images.join(","),
            anns.join(","),
            cats.join(",")
        )
    }

    /// Detections as a COCO results array.
    pub fn dets_json(&self) -> String {
        let dets: Vec<String> = self
            .dets
            .iter()
            .map(|d| {
                format!(
                    r#"{{"image_id":{},"category_id":{},"bbox":[{:?},{:?},{:?},{:?}],"score":{:?}}}"#,
                    d.image, d.class, d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3], d.score
                )
            })
            .collect();
        format!("[{}]", dets.join(","))
    }
}

pub const METRIC_NAMES: [&str; 12] = [
    "ap", "ap50", "ap75", "ap_small", "ap_medium", "ap_large", "ar1", "ar10", "ar100", "ar_small",
    "ar_medium", "ar_large",
];

const AREAS: [(f64, f64); 4] = [(0.0, 1e10), (0.0, 1024.0), (1024.0, 9216.0), (9216.0, 1e10)];
const MAX_DETS: [usize; 3] = [1, 10, 100];

fn thresholds() -> Vec<f64> {
    let step = (0.95 - 0.5) / 9.0;
    let mut t: Vec<f64> = (0..10).map(|i| 0.5 + step * i as f64).collect();
    t[9] = 0.95;
    t
}

fn overlap(d: &[f64; 4], g: &[f64; 4], crowd: bool) -> f64 {
    let iw = (d[0] + d[2]).min(g[0] + g[2]) - d[0].max(g[0]);
    let ih = (d[1] + d[3]).min(g[1] + g[3]) - d[1].max(g[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let denom = if crowd { d[2] * d[3] } else { d[2] * d[3] + g[2] * g[3] - inter };
    inter / denom
}

/// Per-detection outcome for one (image, class, area, threshold): matched,
/// ignored.
fn match_image(dets: &[&Det], gts: &[&Gt], lo: f64, hi: f64, t: f64) -> Vec<(bool, bool)> {
    let ignored = |g: &Gt| g.crowd || g.area < lo || g.area > hi;
    // non-ignored ground truth first, otherwise in input order
    let mut order: Vec<&Gt> = gts.iter().copied().filter(|g| !ignored(g)).collect();
    order.extend(gts.iter().copied().filter(|g| ignored(g)));
    let mut taken = vec![false; order.len()];
    let mut out = Vec::new();
    for d in dets {
        let mut best: Option<usize> = None;
        let mut best_iou = t.min(1.0 - 1e-10);
        for (j, g) in order.iter().enumerate() {
            if taken[j] && !g.crowd {
                continue;
            }
            if let Some(b) = best {
                if !ignored(order[b]) && ignored(g) {
                    break;
                }
            }
            let iou = overlap(&d.bbox, &g.bbox, g.crowd);
            if iou < best_iou {
                continue;
            }
            best_iou = iou;
            best = Some(j);
        }
        match best {
            Some(j) => {
                taken[j] = true;
                out.push((true, ignored(order[j])));
            }
            None => {
                let a = d.bbox[2] * d.bbox[3];
                out.push((false, a < lo || a > hi));
            }
        }
    }
    out
}

/// (precision at each recall point, recall) or `None` when the class has no
/// counted ground truth.
fn class_curve(scene: &Scene, class: u64, area: usize, max_det: usize, t: f64) -> Option<(Vec<f64>, f64)> {
    let (lo, hi) = AREAS[area];
    let mut n_gt = 0usize;
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for &(img, _, _) in &scene.images {
        let gts: Vec<&Gt> = scene.gts.iter().filter(|g| g.image == img && g.class == class).collect();
        n_gt += gts.iter().filter(|g| !(g.crowd || g.area < lo || g.area > hi)).count();
        let mut dets: Vec<&Det> = scene.dets.iter().filter(|d| d.image == img && d.class == class).collect();
        // bubble sort by descending score keeps equal scores in input order
        for i in 0..dets.len() {
            for j in 0..dets.len().saturating_sub(1 + i) {
                if dets[j].score < dets[j + 1].score {
                    dets.swap(j, j + 1);
                }
            }
        }
        dets.truncate(*MAX_DETS.last().unwrap());
        let res = match_image(&dets, &gts, lo, hi, t);
        for (k, (d, (tp, ign))) in dets.iter().zip(res).enumerate() {
            if k < max_det && !ign {
                scored.push((d.score, tp));
            }
        }
    }
    if n_gt == 0 {
        return None;
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut rc = Vec::new();
    let mut pr = Vec::new();
    for (_, hit) in &scored {
        if *hit {
            tp += 1.0;
        } else {
            fp += 1.0;
        }
        rc.push(tp / n_gt as f64);
        pr.push(tp / (tp + fp));
    }
    let recall = rc.last().copied().unwrap_or(0.0);
    for i in (1..pr.len()).rev() {
        if pr[i] > pr[i - 1] {
            pr[i - 1] = pr[i];
        }
    }
    let points: Vec<f64> = (0..101)
        .map(|i| {
            let r = i as f64 / 100.0;
            match rc.iter().position(|&v| v >= r) {
                Some(p) => pr[p],
                None => 0.0,
            }
        })
        .collect();
    Some((points, recall))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        -1.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn ap(scene: &Scene, t: Option<usize>, area: usize) -> f64 {
    let ts = thresholds();
    let mut vals = Vec::new();
    for (i, &th) in ts.iter().enumerate() {
        if t.is_some_and(|t| t != i) {
            continue;
        }
        for &c in &scene.classes {
            if let Some((p, _)) = class_curve(scene, c, area, 100, th) {
                vals.extend(p);
            }
        }
    }
    mean(&vals)
}

fn ar(scene: &Scene, area: usize, max_det: usize) -> f64 {
    let mut vals = Vec::new();
    for th in thresholds() {
        for &c in &scene.classes {
            if let Some((_, r)) = class_curve(scene, c, area, max_det, th) {
                vals.push(r);
            }
        }
    }
    mean(&vals)
}

/// The twelve summary numbers, in `METRIC_NAMES` order.
pub fn oracle_metrics(scene: &Scene) -> [f64; 12] {
    [
        ap(scene, None, 0),
        ap(scene, Some(0), 0),
        ap(scene, Some(5), 0),
        ap(scene, None, 1),
        ap(scene, None, 2),
        ap(scene, None, 3),
        ar(scene, 0, 1),
        ar(scene, 0, 10),
        ar(scene, 0, 100),
        ar(scene, 1, 100),
        ar(scene, 2, 100),
        ar(scene, 3, 100),
    ]
}

/// AP at every threshold (area all, largest cap).
pub fn oracle_ap_per_threshold(scene: &Scene) -> Vec<f64> {
    (0..10).map(|t| ap(scene, Some(t), 0)).collect()
}

/// Random scene with at most 6 ground-truth boxes, 10 detections and 3
/// classes over 1 to 3 images. Scores are distinct.
pub fn random_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.gen_range(1..=3u64);
    let images: Vec<(u64, u32, u32)> = (1..=n_images).map(|i| (i, 320, 240)).collect();
    let n_classes = rng.gen_range(1..=3u64);
    let classes: Vec<u64> = (1..=n_classes).collect();
    let n_gt = rng.gen_range(0..=6);
    let mut gts = Vec::new();
    for id in 1..=n_gt {
        let w = rng.gen_range(4.0..150.0f64).round();
        let h = rng.gen_range(4.0..150.0f64).round();
        let x = rng.gen_range(0.0..(320.0 - w)).round();
        let y = rng.gen_range(0.0..(240.0 - h)).round();
        gts.push(Gt {
            id,
            image: rng.gen_range(1..=n_images),
            class: rng.gen_range(1..=n_classes),
            bbox: [x, y, w, h],
            area: w * h * rng.gen_range(0.6..1.0),
            crowd: rng.gen_bool(0.1),
        });
    }
    let n_det = rng.gen_range(0..=10);
    let mut scores: Vec<u32> = (1..=1000).collect();
    scores.shuffle(&mut rng);
    let mut dets = Vec::new();
    for score in scores.into_iter().take(n_det) {
        let bbox = if !gts.is_empty() && rng.gen_bool(0.7) {
            let g = &gts[rng.gen_range(0..gts.len())];
            let j = |rng: &mut ChaCha8Rng, v: f64| v * rng.gen_range(-0.3..0.3);
            let [x, y, w, h] = g.bbox;
            let nw = (w + j(&mut rng, w)).max(1.0);
            let nh = (h + j(&mut rng, h)).max(1.0);
            [x + j(&mut rng, w), y + j(&mut rng, h), nw, nh]
        } else {
            let w = rng.gen_range(2.0..120.0);
            let h = rng.gen_range(2.0..120.0);
            [rng.gen_range(0.0..250.0), rng.gen_range(0.0..200.0), w, h]
        };
        let (image, class) = if !gts.is_empty() && rng.gen_bool(0.8) {
            let g = &gts[rng.gen_range(0..gts.len())];
            (g.image, if rng.gen_bool(0.85) { g.class } else { rng.gen_range(1..=n_classes) })
        } else {
            (rng.gen_range(1..=n_images), rng.gen_range(1..=n_classes))
        };
        dets.push(Det {
            image,
            class,
            bbox,
            score: score as f64 / 1000.0,
        });
    }
    Scene { images, classes, gts, dets }
}
