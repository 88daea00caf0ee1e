use crate::image::GrayImage;

fn cdf(image: &GrayImage) -> [f64; 256] {
    let mut hist = [0u64; 256];
    let mut n = 0u64;
    match image.foreground() {
        Some(m) if !m.is_empty() => {
            for (&v, &on) in image.pixels().iter().zip(m.data()) {
                if on != 0 {
                    hist[v as usize] += 1;
                    n += 1;
                }
            }
        }
        _ => {
            for &v in image.pixels() {
                hist[v as usize] += 1;
            }
            n = image.pixels().len() as u64;
        }
    }
    let mut out = [0.0; 256];
    let mut acc = 0u64;
    for (i, h) in hist.iter().enumerate() {
        acc += h;
        out[i] = acc as f64 / n.max(1) as f64;
    }
    out
}

/// Lookup table mapping each level of `image` onto `reference`'s empirical
/// CDF: level `v` goes to the smallest reference level whose CDF reaches
/// the CDF of `v`.
pub fn histogram_match_lut(image: &GrayImage, reference: &GrayImage) -> [u8; 256] {
    let src = cdf(image);
    let dst = cdf(reference);
    let mut lut = [0u8; 256];
    let mut j = 0usize;
    for (v, &c) in src.iter().enumerate() {
        // Both CDFs are non-decreasing, so the search pointer only moves forward.
        while j < 255 && dst[j] < c - 1e-12 {
            j += 1;
        }
        lut[v] = j as u8;
    }
    lut
}

/// Histogram specification. CDFs use the foreground pixels when a mask is
/// attached, the whole image otherwise; the monotone mapping is applied to
/// every pixel.
pub fn histogram_match(image: &GrayImage, reference: &GrayImage) -> GrayImage {
    let lut = histogram_match_lut(image, reference);
    let mut out = image.clone();
    for v in out.pixels_mut() {
        *v = lut[*v as usize];
    }
    out
}
