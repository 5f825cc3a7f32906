use crate::datamodel::BBox;

/// Area of the overlap of two boxes, zero when their interiors are disjoint.
pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    if iw <= 0.0 {
        return 0.0;
    }
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if ih <= 0.0 {
        return 0.0;
    }
    iw * ih
}

/// Intersection over union.
pub fn iou_box(a: &BBox, b: &BBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// Intersection over the detection's own area; used against crowd regions.
pub fn iof_box(det: &BBox, crowd: &BBox) -> f64 {
    let area = det.area();
    if area <= 0.0 {
        return 0.0;
    }
    intersection_area(det, crowd) / area
}
