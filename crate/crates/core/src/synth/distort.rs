use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, to_u8, Plane};
use crate::image::{GrayImage, Mask, BACKGROUND};

/// Grid spacing of the displacement field in pixels.
pub const FIELD_STRIDE: usize = 16;

/// Smoothing of the grid noise, in grid cells.
const FIELD_SMOOTHING: f64 = 2.0;

/// Displacement vectors on a coarse grid, bilinearly upsampled on use.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionField {
    grid_w: usize,
    grid_h: usize,
    dx: Vec<f32>,
    dy: Vec<f32>,
    magnitude: f64,
}

impl DistortionField {
    pub fn zero(width: usize, height: usize) -> Self {
        let (grid_w, grid_h) = grid_dims(width, height);
        DistortionField {
            grid_w,
            grid_h,
            dx: vec![0.0; grid_w * grid_h],
            dy: vec![0.0; grid_w * grid_h],
            magnitude: 0.0,
        }
    }

    /// Gaussian-smoothed white noise scaled to the given RMS displacement.
    pub fn random(width: usize, height: usize, seed: u64, magnitude: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidArgument(format!("distortion magnitude {magnitude}")));
        }
        let mut field = DistortionField::zero(width, height);
        if magnitude == 0.0 {
            return Ok(field);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (gw, gh) = (field.grid_w, field.grid_h);
        let mut noise = |_: usize| -> Plane {
            let mut p = Plane::new(gw, gh);
            for v in p.data.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            gaussian_blur(&p, FIELD_SMOOTHING)
        };
        let nx = noise(0);
        let ny = noise(1);
        let rms = (nx
            .data
            .iter()
            .zip(&ny.data)
            .map(|(&a, &b)| (a as f64).powi(2) + (b as f64).powi(2))
            .sum::<f64>()
            / (gw * gh) as f64)
            .sqrt();
        let scale = if rms > 0.0 { magnitude / rms } else { 0.0 };
        field.dx = nx.data.iter().map(|&v| (v as f64 * scale) as f32).collect();
        field.dy = ny.data.iter().map(|&v| (v as f64 * scale) as f32).collect();
        field.magnitude = magnitude;
        Ok(field)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.dx.iter().chain(&self.dy).all(|&v| v == 0.0)
    }

    /// Largest grid displacement length.
    pub fn max_displacement(&self) -> f64 {
        self.dx
            .iter()
            .zip(&self.dy)
            .map(|(&a, &b)| (a as f64).hypot(b as f64))
            .fold(0.0, f64::max)
    }

    /// Displacement at a pixel.
    pub fn at(&self, x: f64, y: f64) -> (f64, f64) {
        let gx = (x / FIELD_STRIDE as f64).clamp(0.0, (self.grid_w - 1) as f64);
        let gy = (y / FIELD_STRIDE as f64).clamp(0.0, (self.grid_h - 1) as f64);
        let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.grid_w - 1), (y0 + 1).min(self.grid_h - 1));
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        let lerp = |v: &[f32]| {
            let g = |xx: usize, yy: usize| v[yy * self.grid_w + xx] as f64;
            let top = g(x0, y0) + (g(x1, y0) - g(x0, y0)) * fx;
            let bot = g(x0, y1) + (g(x1, y1) - g(x0, y1)) * fx;
            top + (bot - top) * fy
        };
        (lerp(&self.dx), lerp(&self.dy))
    }

    /// Inverse-maps the image through the field: bilinear intensities with
    /// background fill, nearest-neighbour mask with fill 0.
    pub fn warp(&self, image: &GrayImage) -> GrayImage {
        if self.is_zero() {
            return image.clone();
        }
        let (w, h) = (image.width(), image.height());
        let mut out = GrayImage::filled(w, h, BACKGROUND);
        let mut mask = image.foreground().map(|_| Mask::new(w, h));
        for y in 0..h {
            for x in 0..w {
                let (ddx, ddy) = self.at(x as f64, y as f64);
                let (sx, sy) = (x as f64 + ddx, y as f64 + ddy);
                out.set(x, y, to_u8(image.sample_bilinear(sx, sy)));
                if let (Some(m), Some(fg)) = (mask.as_mut(), image.foreground()) {
                    let (nx, ny) = ((sx + 0.5).floor(), (sy + 0.5).floor());
                    if nx >= 0.0 && ny >= 0.0 && (nx as usize) < w && (ny as usize) < h {
                        m.set(x, y, fg.get(nx as usize, ny as usize));
                    }
                }
            }
        }
        let out = out.with_ppi(image.ppi()).expect("ppi copied from a valid image");
        match mask {
            Some(m) => out.with_foreground(m).expect("mask sized to output"),
            None => out,
        }
    }
}

fn grid_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(FIELD_STRIDE) + 1, height.div_ceil(FIELD_STRIDE) + 1)
}

/// Warps `image` by a random smooth field with RMS displacement `magnitude`.
pub fn apply_elastic_distortion(image: &GrayImage, seed: u64, magnitude: f64) -> Result<GrayImage> {
    let field = DistortionField::random(image.width(), image.height(), seed, magnitude)?;
    Ok(field.warp(image))
}
