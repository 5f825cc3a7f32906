use image::RgbImage;

/// Default sigma for a `k`-tap Gaussian: `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn default_sigma(kernel: u32) -> f64 {
    0.3 * ((kernel as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

pub fn gaussian_kernel(size: u32, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as i64;
    let w: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &RgbImage, size: u32, sigma: f64) -> RgbImage {
    let k = gaussian_kernel(size, sigma);
    let r = (size / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    if w == 0 || h == 0 {
        return img.clone();
    }
    let mut tmp = vec![0f64; (w * h * 3) as usize];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sx = (x + j as i64 - r).clamp(0, w - 1);
                    acc += kv * img.get_pixel(sx as u32, y as u32)[c] as f64;
                }
                tmp[((y * w + x) * 3 + c as i64) as usize] = acc;
            }
        }
    }
    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let mut px = [0u8; 3];
            for (c, p) in px.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sy = (y + j as i64 - r).clamp(0, h - 1);
                    acc += kv * tmp[((sy * w + x) * 3 + c as i64) as usize];
                }
                *p = acc.round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_for_eleven_taps() {
        assert!((default_sigma(11) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_sums_to_one_and_is_symmetric() {
        let k = gaussian_kernel(11, 2.0);
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..5 {
            assert_eq!(k[i], k[10 - i]);
        }
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = RgbImage::from_pixel(23, 17, image::Rgb([200, 13, 128]));
        assert_eq!(gaussian_blur(&img, 11, 2.0), img);
    }

    #[test]
    fn impulse_spreads_and_keeps_mass() {
        let mut img = RgbImage::new(31, 31);
        img.put_pixel(15, 15, image::Rgb([255, 255, 255]));
        let out = gaussian_blur(&img, 11, 2.0);
        assert!(out.get_pixel(15, 15)[0] < 255);
        assert!(out.get_pixel(16, 15)[0] > 0);
        let mass: u32 = out.pixels().map(|p| p[0] as u32).sum();
        assert!((mass as i64 - 255).abs() < 40);
    }
}
