use serde::{Deserialize, Serialize};

use crate::datamodel::BBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapScale {
    Linear,
    Log,
}

/// Square accumulator over the unit square (image coordinates normalized by
/// image width and height). Row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    resolution: usize,
    cells: Vec<f64>,
    box_count: usize,
}

impl GridMap {
    pub fn new(resolution: usize) -> Self {
        GridMap {
            resolution,
            cells: vec![0.0; resolution * resolution],
            box_count: 0,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.resolution + col]
    }

    pub fn box_count(&self) -> usize {
        self.box_count
    }

    /// Adds one box to every cell it covers, weighted by the covered
    /// fraction of the cell.
    pub fn add_box(&mut self, b: &BBox, image_width: f64, image_height: f64) {
        let r = self.resolution;
        let (xs, ys) = (
            coverage(b.x / image_width, b.right() / image_width, r),
            coverage(b.y / image_height, b.bottom() / image_height, r),
        );
        for &(row, fy) in &ys {
            for &(col, fx) in &xs {
                self.cells[row * r + col] += fx * fy;
            }
        }
        self.box_count += 1;
    }

    /// Cells divided by the number of boxes (unchanged when empty).
    pub fn normalized(&self) -> GridMap {
        let n = self.box_count.max(1) as f64;
        GridMap {
            cells: self.cells.iter().map(|v| v / n).collect(),
            ..self.clone()
        }
    }

    /// Log scale: `sign(v) * ln(1 + |v| * N)` with `N = resolution^2`.
    pub fn scaled(&self, scale: MapScale) -> GridMap {
        match scale {
            MapScale::Linear => self.clone(),
            MapScale::Log => {
                let n = (self.resolution * self.resolution) as f64;
                GridMap {
                    cells: self
                        .cells
                        .iter()
                        .map(|&v| v.signum() * (v.abs() * n).ln_1p())
                        .map(|v| if v == 0.0 { 0.0 } else { v })
                        .collect(),
                    ..self.clone()
                }
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.cells.len() * 10);
        for row in self.cells.chunks(self.resolution.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Grayscale for non-negative maps; blue-white-red when any cell is
    /// negative. Colors are scaled by the largest magnitude.
    pub fn to_heatmap(&self) -> image::RgbImage {
        let r = self.resolution as u32;
        let max = self.cells.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let signed = self.cells.iter().any(|&v| v < 0.0);
        image::RgbImage::from_fn(r, r, |x, y| {
            let v = self.cells[(y * r + x) as usize];
            let t = if max > 0.0 { v / max } else { 0.0 };
            if signed {
                let fade = (255.0 * (1.0 - t.abs())).round() as u8;
                if t >= 0.0 {
                    image::Rgb([255, fade, fade])
                } else {
                    image::Rgb([fade, fade, 255])
                }
            } else {
                let g = (255.0 * t).round() as u8;
                image::Rgb([g, g, g])
            }
        })
    }
}

/// (cell index, covered fraction) along one axis for the interval [lo, hi]
/// of the unit line split into `r` cells.
fn coverage(lo: f64, hi: f64, r: usize) -> Vec<(usize, f64)> {
    let (lo, hi) = (lo.clamp(0.0, 1.0) * r as f64, hi.clamp(0.0, 1.0) * r as f64);
    if hi <= lo {
        return Vec::new();
    }
    let first = lo.floor() as usize;
    let last = (hi.ceil() as usize).min(r);
    (first..last)
        .filter_map(|i| {
            let f = hi.min(i as f64 + 1.0) - lo.max(i as f64);
            (f > 0.0).then_some((i, f))
        })
        .collect()
}

/// Superimposes boxes given with their image sizes.
pub fn box_distribution_map<'a>(
    boxes: impl IntoIterator<Item = (&'a BBox, u32, u32)>,
    resolution: usize,
) -> GridMap {
    let mut m = GridMap::new(resolution);
    for (b, w, h) in boxes {
        m.add_box(b, w as f64, h as f64);
    }
    m
}

/// `pred / n_pred - gt / n_gt`, then scaled.
pub fn diff_map(pred: &GridMap, gt: &GridMap, scale: MapScale) -> GridMap {
    assert_eq!(pred.resolution, gt.resolution, "grid resolutions differ");
    let (p, g) = (pred.normalized(), gt.normalized());
    GridMap {
        resolution: pred.resolution,
        cells: p.cells.iter().zip(&g.cells).map(|(a, b)| a - b).collect(),
        box_count: pred.box_count,
    }
    .scaled(scale)
}
