//! Floating-point image planes and the separable filters shared by the
//! synthesis and extraction code.

use crate::image::GrayImage;

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_image(img: &GrayImage) -> Self {
        Plane {
            width: img.width(),
            height: img.height(),
            data: img.pixels().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Rounds and clamps into an 8-bit image. The foreground mask is not set.
    pub fn to_image(&self) -> GrayImage {
        let pixels = self.data.iter().map(|&v| to_u8(v as f64)).collect();
        GrayImage::new(self.width, self.height, pixels).expect("plane dimensions are consistent")
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Clamp-to-edge read.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Round-half-up then clamp to `[0, 255]`.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k.into_iter().map(|v| v as f32).collect()
}

/// Separable convolution with a symmetric odd-length kernel, clamp-to-edge.
pub fn convolve_separable(src: &Plane, kernel: &[f32]) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (src.width, src.height);
    let mut tmp = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * src.at_clamped(x as isize + k as isize - r, y as isize);
            }
            tmp.data[y * w + x] = acc;
        }
    }
    let mut out = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * tmp.at_clamped(x as isize, y as isize + k as isize - r);
            }
            out.data[y * w + x] = acc;
        }
    }
    out
}

pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return src.clone();
    }
    convolve_separable(src, &gaussian_kernel(sigma))
}

/// Square-window min (`take_min = true`) or max filter.
pub fn rank_filter(src: &Plane, radius: usize, take_min: bool) -> Plane {
    if radius == 0 {
        return src.clone();
    }
    let r = radius as isize;
    let pick = |a: f32, b: f32| if take_min { a.min(b) } else { a.max(b) };
    let (w, h) = (src.width, src.height);
    let mut tmp = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut v = src.at(x, y);
            for d in -r..=r {
                v = pick(v, src.at_clamped(x as isize + d, y as isize));
            }
            tmp.data[y * w + x] = v;
        }
    }
    let mut out = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut v = tmp.at(x, y);
            for d in -r..=r {
                v = pick(v, tmp.at_clamped(x as isize, y as isize + d));
            }
            out.data[y * w + x] = v;
        }
    }
    out
}

/// Central-difference gradients with clamp-to-edge borders.
pub fn gradients(src: &Plane) -> (Plane, Plane) {
    let (w, h) = (src.width, src.height);
    let mut gx = Plane::new(w, h);
    let mut gy = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            gx.data[y * w + x] = 0.5 * (src.at_clamped(xi + 1, yi) - src.at_clamped(xi - 1, yi));
            gy.data[y * w + x] = 0.5 * (src.at_clamped(xi, yi + 1) - src.at_clamped(xi, yi - 1));
        }
    }
    (gx, gy)
}

/// Dominant ridge-band spectral peak, used to gauge ridge contrast and
/// period. Returns `(peak_energy, period_px)`.
///
/// Local 32x32 tile spectra are evaluated at candidate periods and
/// orientations and the best orientation per tile is summed incoherently,
/// so curved ridges still contribute.
pub fn ridge_spectrum_peak(img: &GrayImage, min_period: f64, max_period: f64) -> (f64, f64) {
    let n_periods = 24;
    let mut best = (0.0, min_period);
    for pi in 0..=n_periods {
        let period = min_period + (max_period - min_period) * pi as f64 / n_periods as f64;
        let e = ridge_band_energy(img, period);
        if e > best.0 {
            best = (e, period);
        }
    }
    best
}

/// Mean per-tile peak spectral energy at one ridge period.
pub fn ridge_band_energy(img: &GrayImage, period: f64) -> f64 {
    const TILE: usize = 32;
    const ANGLES: usize = 24;
    let p = Plane::from_image(img);
    let (w, h) = (p.width, p.height);
    let freq = std::f64::consts::TAU / period;
    let mut energy = 0.0;
    let mut tiles = 0usize;
    for ty in (0..=h.saturating_sub(TILE)).step_by(TILE) {
        for tx in (0..=w.saturating_sub(TILE)).step_by(TILE) {
            let mut mean = 0.0;
            for y in ty..ty + TILE {
                for x in tx..tx + TILE {
                    mean += p.at(x, y) as f64;
                }
            }
            mean /= (TILE * TILE) as f64;
            let mut tile_best = 0.0f64;
            for ai in 0..ANGLES {
                let a = std::f64::consts::PI * ai as f64 / ANGLES as f64;
                let (ux, uy) = (a.cos() * freq, a.sin() * freq);
                let (sx, cx) = ux.sin_cos();
                let (mut re, mut im) = (0.0, 0.0);
                for y in 0..TILE {
                    let (mut ps, mut pc) = (uy * y as f64).sin_cos();
                    for x in 0..TILE {
                        let v = p.at(tx + x, ty + y) as f64 - mean;
                        re += v * pc;
                        im += v * ps;
                        let nc = pc * cx - ps * sx;
                        ps = ps * cx + pc * sx;
                        pc = nc;
                    }
                }
                tile_best = tile_best.max(re * re + im * im);
            }
            energy += tile_best;
            tiles += 1;
        }
    }
    energy / tiles.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_normalized() {
        let k = gaussian_kernel(2.0);
        let s: f32 = k.iter().sum();
        assert!((s - 1.0).abs() < 1e-5);
        assert_eq!(k.len() % 2, 1);
    }

    #[test]
    fn blur_preserves_constant() {
        let mut p = Plane::new(10, 10);
        p.data.iter_mut().for_each(|v| *v = 77.0);
        let b = gaussian_blur(&p, 1.5);
        assert!(b.data.iter().all(|&v| (v - 77.0).abs() < 1e-3));
    }

    #[test]
    fn rank_filters() {
        let mut p = Plane::new(5, 5);
        p.data[12] = 9.0;
        let mx = rank_filter(&p, 1, false);
        assert_eq!(mx.at(1, 1), 9.0);
        assert_eq!(mx.at(0, 0), 0.0);
        let mn = rank_filter(&mx, 1, true);
        assert_eq!(mn.at(2, 2), 9.0);
        assert_eq!(mn.at(1, 1), 0.0);
    }

    #[test]
    fn round_half_up() {
        assert_eq!(to_u8(127.5), 128);
        assert_eq!(to_u8(-3.0), 0);
        assert_eq!(to_u8(300.0), 255);
    }
}
