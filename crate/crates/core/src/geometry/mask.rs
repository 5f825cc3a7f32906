use crate::datamodel::{BBox, SegMask};
use crate::error::{Error, Result};

use super::polygon::fill_polygon;

/// Row-major binary raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Bitmask {
    pub fn new(width: u32, height: u32) -> Self {
        Bitmask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Argument(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Bitmask { width, height, bits })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &Bitmask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn flip_vertical(&self) -> Bitmask {
        let w = self.width as usize;
        let mut bits = Vec::with_capacity(self.bits.len());
        for row in self.bits.chunks(w.max(1)).rev() {
            bits.extend_from_slice(row);
        }
        Bitmask { bits, ..*self }
    }
}

/// Column-major run lengths, alternating zeros and ones, starting with zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RleMask {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl RleMask {
    pub fn new(width: u32, height: u32, counts: Vec<u32>) -> Result<Self> {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total != width as u64 * height as u64 {
            return Err(Error::Codec(format!(
                "run lengths sum to {total}, expected {width}x{height} = {}",
                width as u64 * height as u64
            )));
        }
        Ok(RleMask { width, height, counts })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    /// Half-open `[start, end)` column-major index ranges of set pixels.
    fn one_runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += c as u64;
            (i % 2 == 1 && c > 0).then_some((start, pos))
        })
    }
}

pub fn encode_rle(m: &Bitmask) -> RleMask {
    let (w, h) = (m.width, m.height);
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..w {
        for y in 0..h {
            let b = m.get(x, y);
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask { width: w, height: h, counts }
}

pub fn decode_rle(rle: &RleMask) -> Bitmask {
    let h = rle.height as u64;
    let mut m = Bitmask::new(rle.width, rle.height);
    for (start, end) in rle.one_runs() {
        for p in start..end {
            m.set((p / h) as u32, (p % h) as u32, true);
        }
    }
    m
}

/// Rasterizes a segmentation onto a `width` x `height` grid. Polygons are
/// filled with the even-odd rule sampled at pixel centers and unioned.
pub fn decode_mask(seg: &SegMask, width: u32, height: u32) -> Result<Bitmask> {
    match seg {
        SegMask::Rle(rle) => {
            if rle.width != width || rle.height != height {
                return Err(Error::Codec(format!(
                    "mask is {}x{}, expected {width}x{height}",
                    rle.width, rle.height
                )));
            }
            Ok(decode_rle(rle))
        }
        SegMask::Polygons(polys) => {
            let mut m = Bitmask::new(width, height);
            for p in polys {
                fill_polygon(&mut m, p)?;
            }
            Ok(m)
        }
    }
}

pub fn segmentation_to_rle(seg: &SegMask, width: u32, height: u32) -> Result<RleMask> {
    match seg {
        SegMask::Rle(rle) if rle.width == width && rle.height == height => Ok(rle.clone()),
        _ => decode_mask(seg, width, height).map(|m| encode_rle(&m)),
    }
}

fn check_same_size(a: &RleMask, b: &RleMask) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Argument(format!(
            "mask sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Number of pixels set in both masks, computed by merging runs.
pub fn intersection_rle(a: &RleMask, b: &RleMask) -> Result<u64> {
    check_same_size(a, b)?;
    let mut ra = a.one_runs().peekable();
    let mut rb = b.one_runs().peekable();
    let mut inter = 0u64;
    while let (Some(&(s1, e1)), Some(&(s2, e2))) = (ra.peek(), rb.peek()) {
        let lo = s1.max(s2);
        let hi = e1.min(e2);
        if hi > lo {
            inter += hi - lo;
        }
        if e1 <= e2 {
            ra.next();
        } else {
            rb.next();
        }
    }
    Ok(inter)
}

pub fn iou_mask(a: &RleMask, b: &RleMask) -> Result<f64> {
    let inter = intersection_rle(a, b)?;
    let union = a.area() + b.area() - inter;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Intersection over the detection mask's own area.
pub fn iof_mask(det: &RleMask, crowd: &RleMask) -> Result<f64> {
    let inter = intersection_rle(det, crowd)?;
    let area = det.area();
    Ok(if area == 0 { 0.0 } else { inter as f64 / area as f64 })
}

/// Tightest box around the set pixels.
pub fn mask_to_box(m: &Bitmask) -> Result<BBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for y in 0..m.height {
        for x in 0..m.width {
            if m.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == u32::MAX {
        return Err(Error::Argument("mask has no set pixels".into()));
    }
    Ok(BBox::new(
        x0 as f64,
        y0 as f64,
        (x1 - x0 + 1) as f64,
        (y1 - y0 + 1) as f64,
    ))
}

/// Bounding box straight from the runs; `None` for an empty mask.
pub fn rle_to_box(rle: &RleMask) -> Option<BBox> {
    let h = rle.height as u64;
    let (mut x0, mut y0, mut x1, mut y1) = (u64::MAX, u64::MAX, 0u64, 0u64);
    for (start, end) in rle.one_runs() {
        let last = end - 1;
        let (cs, ce) = (start / h, last / h);
        x0 = x0.min(cs);
        x1 = x1.max(ce);
        if cs == ce {
            y0 = y0.min(start % h);
            y1 = y1.max(last % h);
        } else {
            y0 = 0;
            y1 = h - 1;
        }
    }
    (x0 != u64::MAX).then(|| {
        BBox::new(
            x0 as f64,
            y0 as f64,
            (x1 - x0 + 1) as f64,
            (y1 - y0 + 1) as f64,
        )
    })
}

/// Pixels whose centers fall inside the box, clipped to the grid.
pub fn box_to_mask(b: &BBox, width: u32, height: u32) -> Bitmask {
    let mut m = Bitmask::new(width, height);
    let (cx0, cx1) = center_span(b.x, b.right(), width);
    let (cy0, cy1) = center_span(b.y, b.bottom(), height);
    for y in cy0..cy1 {
        for x in cx0..cx1 {
            m.set(x, y, true);
        }
    }
    m
}

/// Pixel indices `i` in `[0, limit)` with `lo <= i + 0.5 < hi`.
pub(crate) fn center_span(lo: f64, hi: f64, limit: u32) -> (u32, u32) {
    let clip = |v: f64| v.max(0.0).min(limit as f64) as u32;
    let start = clip((lo - 0.5).ceil());
    let end = clip((hi - 0.5).ceil());
    (start, end.max(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_mask(w: u32, h: u32, bits: &[bool]) -> Bitmask {
        Bitmask::from_bits(w, h, bits[..(w * h) as usize].to_vec()).unwrap()
    }

    fn raster_iou(a: &Bitmask, b: &Bitmask) -> f64 {
        let inter = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x && **y).count();
        let union = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x || **y).count();
        if union == 0 { 0.0 } else { inter as f64 / union as f64 }
    }

    #[test]
    fn trivial_rles() {
        let full = decode_rle(&RleMask::new(4, 3, vec![0, 12]).unwrap());
        assert_eq!(full.count(), 12);
        let empty = decode_rle(&RleMask::new(4, 3, vec![12]).unwrap());
        assert_eq!(empty.count(), 0);
        assert_eq!(encode_rle(&Bitmask::new(5, 7)).counts(), &[35]);
        assert!(RleMask::new(4, 3, vec![5, 5]).is_err());
    }

    #[test]
    fn column_major_order() {
        // 2 wide, 3 tall; set (x=0,y=2) and (x=1,y=0): column-major index 2 and 3
        let mut m = Bitmask::new(2, 3);
        m.set(0, 2, true);
        m.set(1, 0, true);
        assert_eq!(encode_rle(&m).counts(), &[2, 2, 2]);
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = encode_rle(&box_to_mask(&BBox::new(1.0, 1.0, 3.0, 3.0), 8, 8));
        let b = encode_rle(&box_to_mask(&BBox::new(5.0, 5.0, 2.0, 2.0), 8, 8));
        assert_eq!(iou_mask(&a, &a).unwrap(), 1.0);
        assert_eq!(iou_mask(&a, &b).unwrap(), 0.0);
        let c = encode_rle(&Bitmask::new(8, 9));
        assert!(iou_mask(&a, &c).is_err());
    }

    #[test]
    fn mask_box_conversions() {
        let mut m = Bitmask::new(10, 12);
        for y in 4..=9 {
            for x in 3..=5 {
                m.set(x, y, true);
            }
        }
        assert_eq!(mask_to_box(&m).unwrap(), BBox::new(3.0, 4.0, 3.0, 6.0));
        assert_eq!(box_to_mask(&BBox::new(3.0, 4.0, 3.0, 6.0), 10, 12), m);
        let mut p = Bitmask::new(10, 10);
        p.set(7, 2, true);
        assert_eq!(mask_to_box(&p).unwrap(), BBox::new(7.0, 2.0, 1.0, 1.0));
        assert_eq!(box_to_mask(&BBox::new(7.0, 2.0, 1.0, 1.0), 10, 10), p);
        assert!(mask_to_box(&Bitmask::new(3, 3)).is_err());
    }

    #[test]
    fn box_to_mask_clamps() {
        let m = box_to_mask(&BBox::new(-3.0, 8.0, 6.0, 10.0), 10, 10);
        assert_eq!(mask_to_box(&m).unwrap(), BBox::new(0.0, 8.0, 3.0, 2.0));
    }

    proptest! {
        #[test]
        fn rle_round_trip(w in 1u32..24, h in 1u32..24, bits in proptest::collection::vec(any::<bool>(), 576)) {
            let m = random_mask(w, h, &bits);
            let rle = encode_rle(&m);
            prop_assert_eq!(rle.area() as usize, m.count());
            prop_assert_eq!(decode_rle(&rle), m.clone());
            prop_assert_eq!(rle_to_box(&rle), mask_to_box(&m).ok());
        }

        #[test]
        fn iou_matches_raster(w in 1u32..20, h in 1u32..20,
                              a in proptest::collection::vec(any::<bool>(), 400),
                              b in proptest::collection::vec(any::<bool>(), 400)) {
            let (ma, mb) = (random_mask(w, h, &a), random_mask(w, h, &b));
            let got = iou_mask(&encode_rle(&ma), &encode_rle(&mb)).unwrap();
            prop_assert_eq!(got, raster_iou(&ma, &mb));
        }

        #[test]
        fn integer_box_mask_round_trip(x in 0u32..20, y in 0u32..20, w in 1u32..12, h in 1u32..12) {
            let b = BBox::new(x as f64, y as f64, w as f64, h as f64);
            prop_assert_eq!(mask_to_box(&box_to_mask(&b, 32, 32)).unwrap(), b);
        }
    }
}
