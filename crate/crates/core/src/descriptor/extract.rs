//! Deterministic hand-crafted extractor producing both descriptor branches
//! from a 256x256 aligned print.
//!
//! Structure branch, per cell: doubled-angle orientation scaled by coherence
//! (2 channels), normalized ridge frequency, local contrast, and two Gabor
//! energies at the cell orientation. Minutiae-like branch: energies of six
//! oriented second-derivative ridge filters. Both branches get a weighted
//! sinusoidal position code and are L2-normalized per cell.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, Plane};
use crate::image::GrayImage;

use super::embedding::sinusoidal_embedding;
use super::{assemble_descriptor, Branch, BranchFeatures, DenseDescriptor, DEFAULT_D};

/// Expected input side length.
pub const INPUT_SIZE: usize = 256;
/// Cell side in pixels.
pub const CELL: usize = 16;
/// Cells per side.
pub const GRID: usize = INPUT_SIZE / CELL;

/// Pixels added around each cell for the pooled statistics.
const MARGIN: usize = 4;
/// Gabor periods (pixels at 256 scale) for the two bank energies.
const GABOR_PERIODS: [f64; 2] = [3.8, 5.2];
const GABOR_SIGMA: f64 = 4.0;
/// Ridge frequency normalization: centre and half-range in cycles/pixel.
const FREQ_CENTER: f64 = 0.22;
const FREQ_HALF_RANGE: f64 = 0.08;
/// Mask squashing: logistic on coherence x contrast.
const MASK_CENTER: f64 = 0.12;
const MASK_SCALE: f64 = 0.025;
const NORM_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineExtractor {
    /// Weight of the position code added to each branch before normalization.
    pub embedding_weight: f32,
}

impl Default for BaselineExtractor {
    fn default() -> Self {
        BaselineExtractor { embedding_weight: 0.25 }
    }
}

struct CellStats {
    structure: [f64; DEFAULT_D],
    minutiae: [f64; DEFAULT_D],
    mask: f64,
}

impl BaselineExtractor {
    /// Returns `(structure, minutiae, mask)` for an aligned 256x256 image.
    pub fn extract(&self, aligned: &GrayImage) -> Result<(BranchFeatures, BranchFeatures, Vec<f32>)> {
        if aligned.width() != INPUT_SIZE || aligned.height() != INPUT_SIZE {
            return Err(Error::SizeMismatch(format!(
                "extractor expects {INPUT_SIZE}x{INPUT_SIZE}, got {}x{}",
                aligned.width(),
                aligned.height()
            )));
        }
        let raw = Plane::from_image(aligned);
        let (gx, gy) = gradients(&raw);
        let smooth = gaussian_blur(&raw, 0.7);
        let (hxx, hxy, hyy) = hessian(&smooth);

        let cells = GRID * GRID;
        let mut s_vals = vec![0f32; DEFAULT_D * cells];
        let mut m_vals = vec![0f32; DEFAULT_D * cells];
        let mut mask = vec![0f32; cells];
        let pe = sinusoidal_embedding(GRID, GRID, DEFAULT_D)?;
        for i in 0..GRID {
            for j in 0..GRID {
                let stats = cell_stats(&raw, &gx, &gy, &hxx, &hxy, &hyy, i, j);
                let cell = i * GRID + j;
                let fg_fraction = aligned.foreground().map_or(1.0, |m| {
                    let mut n = 0usize;
                    for y in i * CELL..(i + 1) * CELL {
                        for x in j * CELL..(j + 1) * CELL {
                            n += m.get(x, y) as usize;
                        }
                    }
                    n as f64 / (CELL * CELL) as f64
                });
                mask[cell] = (stats.mask * fg_fraction) as f32;
                for (out, feats) in [(&mut s_vals, &stats.structure), (&mut m_vals, &stats.minutiae)] {
                    let mut v = [0f64; DEFAULT_D];
                    for c in 0..DEFAULT_D {
                        v[c] = feats[c] + self.embedding_weight as f64 * pe[c * cells + cell] as f64;
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm >= NORM_FLOOR {
                        for c in 0..DEFAULT_D {
                            out[c * cells + cell] = (v[c] / norm) as f32;
                        }
                    }
                }
            }
        }
        Ok((
            BranchFeatures::new(Branch::Structure, DEFAULT_D, GRID, GRID, s_vals)?,
            BranchFeatures::new(Branch::Minutiae, DEFAULT_D, GRID, GRID, m_vals)?,
            mask,
        ))
    }

    /// Extraction followed by assembly.
    pub fn describe(&self, aligned: &GrayImage) -> Result<DenseDescriptor> {
        let (s, m, mask) = self.extract(aligned)?;
        assemble_descriptor(&s, &m, &mask)
    }
}

/// [`BaselineExtractor::extract`] with default settings.
pub fn extract_baseline(aligned: &GrayImage) -> Result<(BranchFeatures, BranchFeatures, Vec<f32>)> {
    BaselineExtractor::default().extract(aligned)
}

fn gradients(p: &Plane) -> (Plane, Plane) {
    crate::filters::gradients(p)
}

fn hessian(p: &Plane) -> (Plane, Plane, Plane) {
    let (w, h) = (p.width, p.height);
    let mut xx = Plane::new(w, h);
    let mut xy = Plane::new(w, h);
    let mut yy = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let c = p.at(x, y);
            let k = y * w + x;
            xx.data[k] = p.at_clamped(xi + 1, yi) - 2.0 * c + p.at_clamped(xi - 1, yi);
            yy.data[k] = p.at_clamped(xi, yi + 1) - 2.0 * c + p.at_clamped(xi, yi - 1);
            xy.data[k] = 0.25
                * (p.at_clamped(xi + 1, yi + 1) - p.at_clamped(xi + 1, yi - 1) - p.at_clamped(xi - 1, yi + 1)
                    + p.at_clamped(xi - 1, yi - 1));
        }
    }
    (xx, xy, yy)
}

fn window(i: usize, j: usize) -> (usize, usize, usize, usize) {
    let x0 = (j * CELL).saturating_sub(MARGIN);
    let y0 = (i * CELL).saturating_sub(MARGIN);
    let x1 = ((j + 1) * CELL + MARGIN).min(INPUT_SIZE);
    let y1 = ((i + 1) * CELL + MARGIN).min(INPUT_SIZE);
    (x0, y0, x1, y1)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[allow(clippy::too_many_arguments)]
fn cell_stats(
    raw: &Plane,
    gx: &Plane,
    gy: &Plane,
    hxx: &Plane,
    hxy: &Plane,
    hyy: &Plane,
    i: usize,
    j: usize,
) -> CellStats {
    let (x0, y0, x1, y1) = window(i, j);
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    let (mut sum, mut sq) = (0.0, 0.0);
    // Second moments of the Hessian entries for the oriented ridge filters.
    let mut hm = [0.0f64; 6];
    for y in y0..y1 {
        for x in x0..x1 {
            let (dx, dy) = (gx.at(x, y) as f64, gy.at(x, y) as f64);
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
            let v = raw.at(x, y) as f64;
            sum += v;
            sq += v * v;
            let (a, b, c) = (hxx.at(x, y) as f64, hxy.at(x, y) as f64, hyy.at(x, y) as f64);
            hm[0] += a * a;
            hm[1] += b * b;
            hm[2] += c * c;
            hm[3] += a * b;
            hm[4] += a * c;
            hm[5] += b * c;
        }
    }
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0);
    let std = var.sqrt();
    let energy = sxx + syy;
    let (cos2, sin2, coherence) = if energy > 1e-9 {
        let c2 = (sxx - syy) / energy;
        let s2 = 2.0 * sxy / energy;
        (c2, s2, c2.hypot(s2))
    } else {
        (0.0, 0.0, 0.0)
    };
    // Central differences of a sinusoid with angular frequency w have mean
    // square sin(w)^2 times the signal's.
    let freq = if var > 1e-9 {
        let ratio = (energy / n / var).sqrt().min(1.0);
        ratio.asin() / TAU
    } else {
        0.0
    };
    let freq_feature = ((freq - FREQ_CENTER) / FREQ_HALF_RANGE).clamp(-1.0, 1.0);
    let contrast = (std / 127.5).min(1.0);
    // Dominant gradient direction (across the ridges).
    let phi = 0.5 * sin2.atan2(cos2);
    let gabor = gabor_energies(raw, mean, phi, i, j);

    // Energy of the second derivative along direction a, summed over the
    // window, for six directions; reported relative to their mean.
    let mut oriented = [0.0f64; 6];
    for (k, o) in oriented.iter_mut().enumerate() {
        let a = PI * k as f64 / 6.0;
        let (c, s) = (a.cos(), a.sin());
        let (c2, s2, cs) = (c * c, s * s, c * s);
        // (c2*hxx + 2cs*hxy + s2*hyy)^2 expanded over the accumulated moments.
        *o = c2 * c2 * hm[0]
            + 4.0 * cs * cs * hm[1]
            + s2 * s2 * hm[2]
            + 4.0 * c2 * cs * hm[3]
            + 2.0 * c2 * s2 * hm[4]
            + 4.0 * cs * s2 * hm[5];
    }
    let total: f64 = oriented.iter().sum();
    let mut minutiae = [0.0; DEFAULT_D];
    if total > 1e-9 {
        for k in 0..6 {
            minutiae[k] = 6.0 * oriented[k] / total - 1.0;
        }
    }

    CellStats {
        structure: [cos2, sin2, freq_feature, contrast, gabor[0], gabor[1]],
        minutiae,
        mask: logistic((coherence * contrast - MASK_CENTER) / MASK_SCALE),
    }
}

/// Normalized magnitude of a Gaussian-windowed complex Gabor response at the
/// cell center, oriented across the ridges. Each value lies in `[0, 1]` by
/// Cauchy-Schwarz.
fn gabor_energies(raw: &Plane, mean: f64, phi: f64, i: usize, j: usize) -> [f64; 2] {
    let (x0, y0, x1, y1) = window(i, j);
    let cx = (j * CELL) as f64 + CELL as f64 / 2.0 - 0.5;
    let cy = (i * CELL) as f64 + CELL as f64 / 2.0 - 0.5;
    let (ux, uy) = (phi.cos(), phi.sin());
    let mut out = [0.0; 2];
    for (k, &period) in GABOR_PERIODS.iter().enumerate() {
        let w = TAU / period;
        let (mut re, mut im, mut sig, mut env2) = (0.0, 0.0, 0.0, 0.0);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let env = (-(dx * dx + dy * dy) / (2.0 * GABOR_SIGMA * GABOR_SIGMA)).exp();
                let v = (raw.at(x, y) as f64 - mean) * env;
                let ph = w * (dx * ux + dy * uy);
                re += v * ph.cos();
                im += v * ph.sin();
                sig += v * v;
                env2 += env * env;
            }
        }
        let denom = (sig * env2).sqrt();
        out[k] = if denom > 1e-9 {
            (re.hypot(im) / denom).min(1.0)
        } else {
            0.0
        };
    }
    out
}

/// Convenience for callers holding only an aligned image.
pub fn describe_baseline(aligned: &GrayImage) -> Result<DenseDescriptor> {
    BaselineExtractor::default().describe(aligned)
}
