//! Grayscale rasters and binary masks.
//!
//! Pixel convention: 0 is black ridge, 255 is white background. Pixel `(x, y)`
//! has its center at integer coordinates, row-major storage.

use std::path::Path;

use crate::error::{Error, Result};

/// Background intensity used wherever a sample falls outside the source.
pub const BACKGROUND: u8 = 255;

/// Default scan resolution.
pub const DEFAULT_PPI: f64 = 500.0;

/// Binary mask, one byte per pixel holding 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    /// Builds a mask from raw bytes; any nonzero byte counts as set.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "mask data has {} bytes, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        let data = data.into_iter().map(|v| u8::from(v != 0)).collect();
        Ok(Mask { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Mask { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = u8::from(on);
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a & b).collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Square-window dilation with the given radius.
    pub fn dilate(&self, radius: usize) -> Mask {
        self.morph(radius, true)
    }

    /// Square-window erosion with the given radius. Pixels outside the canvas
    /// count as unset.
    pub fn erode(&self, radius: usize) -> Mask {
        self.morph(radius, false)
    }

    /// Dilation followed by erosion.
    pub fn close(&self, radius: usize) -> Mask {
        self.dilate(radius).erode(radius)
    }

    fn morph(&self, radius: usize, dilate: bool) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        let pass = |src: &[u8], horizontal: bool| -> Vec<u8> {
            let mut out = vec![0u8; w * h];
            for y in 0..h {
                for x in 0..w {
                    let (lo, hi, fixed) = if horizontal {
                        (x.saturating_sub(radius), (x + radius).min(w - 1), y)
                    } else {
                        (y.saturating_sub(radius), (y + radius).min(h - 1), x)
                    };
                    let at = |i: usize| {
                        if horizontal {
                            src[fixed * w + i]
                        } else {
                            src[i * w + fixed]
                        }
                    };
                    let v = if dilate {
                        (lo..=hi).any(|i| at(i) != 0)
                    } else {
                        // Clipped windows touch the canvas edge, which is unset.
                        let full = if horizontal {
                            x >= radius && x + radius < w
                        } else {
                            y >= radius && y + radius < h
                        };
                        full && (lo..=hi).all(|i| at(i) != 0)
                    };
                    out[y * w + x] = u8::from(v);
                }
            }
            out
        };
        let tmp = pass(&self.data, true);
        let data = pass(&tmp, false);
        Mask {
            width: w,
            height: h,
            data,
        }
    }

    fn check_same(&self, other: &Mask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::SizeMismatch(format!(
                "masks are {}x{} and {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// 8-bit grayscale fingerprint raster with an optional foreground mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    ppi: f64,
    foreground: Option<Mask>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "pixel buffer has {} bytes, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
            ppi: DEFAULT_PPI,
            foreground: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
            ppi: DEFAULT_PPI,
            foreground: None,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
            ppi: DEFAULT_PPI,
            foreground: None,
        }
    }

    pub fn with_ppi(mut self, ppi: f64) -> Result<Self> {
        if !(ppi.is_finite() && ppi > 0.0) {
            return Err(Error::InvalidArgument(format!("ppi must be positive, got {ppi}")));
        }
        self.ppi = ppi;
        Ok(self)
    }

    pub fn with_foreground(mut self, mask: Mask) -> Result<Self> {
        self.set_foreground(Some(mask))?;
        Ok(self)
    }

    pub fn set_foreground(&mut self, mask: Option<Mask>) -> Result<()> {
        if let Some(m) = &mask {
            if m.width() != self.width || m.height() != self.height {
                return Err(Error::SizeMismatch(format!(
                    "mask {}x{} does not fit image {}x{}",
                    m.width(),
                    m.height(),
                    self.width,
                    self.height
                )));
            }
        }
        self.foreground = mask;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ppi(&self) -> f64 {
        self.ppi
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn foreground(&self) -> Option<&Mask> {
        self.foreground.as_ref()
    }

    pub fn take_foreground(&mut self) -> Option<Mask> {
        self.foreground.take()
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel value, or `BACKGROUND` outside the canvas.
    #[inline]
    pub fn get_or_background(&self, x: isize, y: isize) -> u8 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            BACKGROUND
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear sample at continuous coordinates; out-of-canvas neighbours read
    /// as `BACKGROUND`.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let p00 = self.get_or_background(xi, yi) as f64;
        let p10 = self.get_or_background(xi + 1, yi) as f64;
        let p01 = self.get_or_background(xi, yi + 1) as f64;
        let p11 = self.get_or_background(xi + 1, yi + 1) as f64;
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        top + (bottom - top) * fy
    }

    /// Shifts content by an integer offset, filling uncovered pixels with
    /// `BACKGROUND` (and the mask with 0).
    pub fn shifted(&self, dx: isize, dy: isize) -> GrayImage {
        let mut out = GrayImage::filled(self.width, self.height, BACKGROUND);
        out.ppi = self.ppi;
        let mut mask = self.foreground.as_ref().map(|m| Mask::new(m.width(), m.height()));
        for y in 0..self.height as isize {
            for x in 0..self.width as isize {
                let (sx, sy) = (x - dx, y - dy);
                if sx < 0 || sy < 0 || sx >= self.width as isize || sy >= self.height as isize {
                    continue;
                }
                out.set(x as usize, y as usize, self.get(sx as usize, sy as usize));
                if let (Some(m), Some(src)) = (mask.as_mut(), self.foreground.as_ref()) {
                    m.set(x as usize, y as usize, src.get(sx as usize, sy as usize));
                }
            }
        }
        out.foreground = mask;
        out
    }

    pub fn mean_abs_diff(&self, other: &GrayImage) -> Result<f64> {
        self.check_same(other)?;
        let sum: u64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| a.abs_diff(b) as u64)
            .sum();
        Ok(sum as f64 / self.pixels.len().max(1) as f64)
    }

    pub(crate) fn check_same(&self, other: &GrayImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::SizeMismatch(format!(
                "images are {}x{} and {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Loads a PGM or PNG file as 8-bit grayscale.
    pub fn load(path: impl AsRef<Path>) -> Result<GrayImage> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let gray = decoded.into_luma8();
        let (w, h) = (gray.width() as usize, gray.height() as usize);
        GrayImage::new(w, h, gray.into_raw())
    }

    /// Writes the image; the format follows the extension (`.png`, otherwise
    /// binary PGM).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let mut buf = Vec::new();
        if is_png {
            let raw = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
                .expect("buffer length checked at construction");
            raw.write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Png)
                .map_err(|e| Error::Image {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?;
        } else {
            buf.extend_from_slice(format!("P5\n{} {}\n255\n", self.width, self.height).as_bytes());
            buf.extend_from_slice(&self.pixels);
        }
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffer() {
        assert!(matches!(GrayImage::new(4, 4, vec![0; 15]), Err(Error::SizeMismatch(_))));
        assert!(GrayImage::filled(2, 2, 0).with_ppi(0.0).is_err());
    }

    #[test]
    fn bilinear_midpoint() {
        let img = GrayImage::new(2, 1, vec![0, 200]).unwrap();
        assert_eq!(img.sample_bilinear(0.5, 0.0), 100.0);
        assert_eq!(img.sample_bilinear(-1.0, 0.0), 255.0);
    }

    #[test]
    fn closing_fills_pinhole() {
        let mut m = Mask::filled(9, 9);
        m.set(4, 4, false);
        let c = m.close(1);
        assert!(c.get(4, 4));
    }

    #[test]
    fn pgm_and_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 30 + y) as u8);
        for name in ["a.pgm", "a.png"] {
            let p = dir.path().join(name);
            img.save(&p).unwrap();
            let back = GrayImage::load(&p).unwrap();
            assert_eq!(back.pixels(), img.pixels());
            assert_eq!((back.width(), back.height()), (7, 5));
        }
    }
}
