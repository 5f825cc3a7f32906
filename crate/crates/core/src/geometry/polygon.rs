use super::Bitmask;
use crate::error::{Error, Result};

/// Even-odd fill of one flat `[x1, y1, x2, y2, ...]` polygon, sampled at
/// pixel centers and OR-ed into `m`.
pub(crate) fn fill_polygon(m: &mut Bitmask, flat: &[f64]) -> Result<()> {
    if flat.len() < 6 || !flat.len().is_multiple_of(2) {
        return Err(Error::Codec(format!(
            "polygon needs at least 3 (x, y) vertices, got {} values",
            flat.len()
        )));
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Codec("polygon has non-finite coordinates".into()));
    }
    let pts: Vec<(f64, f64)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let (w, h) = (m.width(), m.height());
    let mut xs = Vec::new();
    for row in 0..h {
        let yc = row as f64 + 0.5;
        xs.clear();
        for i in 0..pts.len() {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % pts.len()];
            if (y0 > yc) != (y1 > yc) {
                xs.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            let (c0, c1) = super::mask::center_span(span[0], span[1], w);
            for col in c0..c1 {
                m.set(col, row, true);
            }
        }
    }
    Ok(())
}
